use serde::{Deserialize, Serialize};

use super::ConicProgram;
use crate::error::{Error, Result};

/// Optimality residuals of a candidate pair `(x, y)` with `s = b − Ax`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    /// Distance of `s` to `K`.
    pub primal_infeasibility: f64,
    /// `‖Aᵀy + c‖₂` plus the distance of `y` to `K*`.
    pub dual_infeasibility: f64,
    /// `|cᵀx + bᵀy|`.
    pub gap: f64,
    /// Largest `|⟨s_k, y_k⟩|` over cone segments.
    pub slackness: f64,
}

impl KktReport {
    pub fn max_residual(&self) -> f64 {
        self.primal_infeasibility.max(self.dual_infeasibility).max(self.gap).max(self.slackness)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }
}

pub fn verify_kkt(p: &ConicProgram, x: &[f64], y: &[f64]) -> Result<KktReport> {
    if x.len() != p.num_vars() || y.len() != p.num_rows() {
        return Err(Error::shape(format!(
            "candidate sizes ({}, {}) do not match program ({}, {})",
            x.len(),
            y.len(),
            p.num_vars(),
            p.num_rows()
        )));
    }
    let mut ax = vec![0.0; p.num_rows()];
    p.a.mul_vec(x, &mut ax);
    let s: Vec<f64> = p.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut aty = vec![0.0; p.num_vars()];
    p.a.mul_t_vec(y, &mut aty);
    let stationarity = aty.iter().zip(&p.c).map(|(a, c)| (a + c).powi(2)).sum::<f64>().sqrt();

    let mut primal_dist2 = 0.0;
    let mut dual_dist2 = 0.0;
    let mut slackness = 0.0f64;
    for (cone, r) in p.segments() {
        let seg_s = &s[r.clone()];
        let seg_y = &y[r];
        let mut ps = seg_s.to_vec();
        cone.project(&mut ps);
        primal_dist2 += ps.iter().zip(seg_s).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let mut py = seg_y.to_vec();
        cone.project_dual(&mut py);
        dual_dist2 += py.iter().zip(seg_y).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let inner: f64 = seg_s.iter().zip(seg_y).map(|(a, b)| a * b).sum();
        slackness = slackness.max(inner.abs());
    }
    let cx: f64 = p.c.iter().zip(x).map(|(a, b)| a * b).sum();
    let by: f64 = p.b.iter().zip(y).map(|(a, b)| a * b).sum();
    Ok(KktReport {
        primal_infeasibility: primal_dist2.sqrt(),
        dual_infeasibility: stationarity + dual_dist2.sqrt(),
        gap: (cx + by).abs(),
        slackness,
    })
}
