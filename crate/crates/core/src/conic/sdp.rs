//! Semidefinite programs in the standard form
//!
//! ```text
//! maximize Tr(CZ)  subject to  Ξ(Z) = D,  Z ⪰ 0
//! minimize Tr(DY)  subject to  Ξ†(Y) ⪰ C,  Y Hermitian
//! ```
//!
//! and the real embedding used to put complex PSD constraints on real cones.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::model::{Affine, Model};
use super::solver::{SolverOptions, SolverResult};
use super::ConicProgram;
use crate::error::{Error, Result};
use crate::linalg::{self, frobenius, is_hermitian, ComplexMatrix};

/// `[[Re H, −Im H], [Im H, Re H]]`, PSD exactly when `H` is.
pub fn embed_complex(h: &ComplexMatrix) -> Result<DMatrix<f64>> {
    if !is_hermitian(h) {
        return Err(Error::NotHermitian { deviation: frobenius(&(h - h.adjoint())) });
    }
    let n = h.nrows();
    let h = linalg::hermitian_part(h);
    Ok(DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = h[(i % n, j % n)];
        match (i / n, j / n) {
            (0, 0) | (1, 1) => z.re,
            (0, 1) => -z.im,
            _ => z.im,
        }
    }))
}

/// Adjoint of the embedding: `[[P, Q], [R, S]] ↦ (P + S) + i(R − Q)`, so that
/// `Tr(Y·embed(H)) = Re Tr(embed_adjoint(Y)·H)`.
pub fn embed_adjoint(y: &DMatrix<f64>) -> ComplexMatrix {
    let n = y.nrows() / 2;
    ComplexMatrix::from_fn(n, n, |i, j| {
        Complex64::new(y[(i, j)] + y[(n + i, n + j)], y[(n + i, j)] - y[(i, n + j)])
    })
}

/// Orthonormal real coordinates of a Hermitian matrix: per row `i`, the
/// diagonal entry then `√2·Re` and `√2·Im` of each entry `(i, j > i)`.
pub fn hvec(h: &ComplexMatrix) -> Vec<f64> {
    let n = h.nrows();
    let mut v = Vec::with_capacity(n * n);
    for i in 0..n {
        v.push(h[(i, i)].re);
        for j in i + 1..n {
            let z = 0.5 * (h[(i, j)] + h[(j, i)].conj());
            v.push(SQRT_2 * z.re);
            v.push(SQRT_2 * z.im);
        }
    }
    v
}

pub fn hmat(v: &[f64], n: usize) -> ComplexMatrix {
    assert_eq!(v.len(), n * n);
    let mut h = ComplexMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        h[(i, i)] = Complex64::new(v[k], 0.0);
        k += 1;
        for j in i + 1..n {
            let z = Complex64::new(v[k], v[k + 1]) * FRAC_1_SQRT_2;
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
            k += 2;
        }
    }
    h
}

/// A linear, Hermiticity-preserving map between Hermitian matrix spaces,
/// stored as its real matrix in [`hvec`] coordinates. Because the
/// coordinates are orthonormal the adjoint is the transpose.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMap {
    dim_in: usize,
    dim_out: usize,
    mat: DMatrix<f64>,
}

impl HermitianMap {
    /// Probes `f` on an orthonormal Hermitian basis. Fails if some image is
    /// not Hermitian or has the wrong size.
    pub fn from_fn<F>(dim_in: usize, dim_out: usize, f: F) -> Result<Self>
    where
        F: Fn(&ComplexMatrix) -> ComplexMatrix,
    {
        let mut mat = DMatrix::zeros(dim_out * dim_out, dim_in * dim_in);
        let mut basis = vec![0.0; dim_in * dim_in];
        for k in 0..basis.len() {
            basis[k] = 1.0;
            let out = f(&hmat(&basis, dim_in));
            basis[k] = 0.0;
            if out.shape() != (dim_out, dim_out) {
                return Err(Error::shape(format!(
                    "map returned {}x{}, expected {dim_out}x{dim_out}",
                    out.nrows(),
                    out.ncols()
                )));
            }
            if !is_hermitian(&out) {
                return Err(Error::precondition("map does not preserve Hermiticity"));
            }
            for (r, v) in hvec(&out).into_iter().enumerate() {
                mat[(r, k)] = v;
            }
        }
        Ok(Self { dim_in, dim_out, mat })
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn apply(&self, z: &ComplexMatrix) -> ComplexMatrix {
        let v = nalgebra::DVector::from_vec(hvec(z));
        hmat((&self.mat * v).as_slice(), self.dim_out)
    }

    pub fn adjoint(&self, y: &ComplexMatrix) -> ComplexMatrix {
        let v = nalgebra::DVector::from_vec(hvec(y));
        hmat((self.mat.transpose() * v).as_slice(), self.dim_in)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }
}

/// The triple `(Ξ, C, D)` of a standard-form SDP.
#[derive(Clone, Debug)]
pub struct StandardSdp {
    pub c: ComplexMatrix,
    pub d: ComplexMatrix,
    pub xi: HermitianMap,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub z: ComplexMatrix,
    pub y: ComplexMatrix,
    /// `Tr(CZ)`.
    pub primal_value: f64,
    /// `Tr(DY)`.
    pub dual_value: f64,
    pub result: SolverResult,
}

impl StandardSdp {
    pub fn new(c: ComplexMatrix, d: ComplexMatrix, xi: HermitianMap) -> Result<Self> {
        if c.shape() != (xi.dim_in, xi.dim_in) || d.shape() != (xi.dim_out, xi.dim_out) {
            return Err(Error::shape("C and D must match the domain and codomain of Ξ"));
        }
        if !is_hermitian(&c) || !is_hermitian(&d) {
            return Err(Error::NotHermitian {
                deviation: frobenius(&(&c - c.adjoint())).max(frobenius(&(&d - d.adjoint()))),
            });
        }
        Ok(Self { c, d, xi })
    }

    fn model(&self) -> (Model, super::model::CMatExpr, super::model::ConstraintId) {
        let n = self.xi.dim_in;
        let mut m = Model::new();
        let z = m.hermitian(n);
        let dvec = hvec(&self.d);
        let rows = (0..dvec.len())
            .map(|r| {
                let mut a = Affine::constant(-dvec[r]);
                for k in 0..n * n {
                    let v = self.xi.mat[(r, k)];
                    if v != 0.0 {
                        a.add_scaled(&Affine::var(k), v);
                    }
                }
                a
            })
            .collect();
        let eq = m.add_zero(rows);
        m.add_psd_hermitian(&z);
        let cvec = hvec(&self.c);
        let mut obj = Affine::default();
        for (k, v) in cvec.iter().enumerate() {
            obj.add_scaled(&Affine::var(k), -v);
        }
        m.minimize(obj);
        (m, z, eq)
    }

    /// Conic form: minimize `−Tr(CZ)` over `hvec(Z)` with `Ξ(Z) = D` as zero
    /// rows and `Z ⪰ 0` through the real embedding.
    pub fn to_conic(&self) -> Result<ConicProgram> {
        self.model().0.build()
    }

    pub fn solve(&self, opts: &SolverOptions) -> Result<SdpSolution> {
        let (m, z, eq) = self.model();
        let sol = m.solve(opts)?;
        let zm = sol.eval(&z);
        // zero rows are Ξ(Z) − D = 0, so their multipliers are −Y
        let y = -hmat(sol.dual(eq), self.xi.dim_out);
        Ok(SdpSolution {
            primal_value: -sol.primal_value(),
            dual_value: -sol.dual_value(),
            z: zm,
            y,
            result: sol.result,
        })
    }
}

pub fn build_standard_sdp(c: ComplexMatrix, d: ComplexMatrix, xi: HermitianMap) -> Result<ConicProgram> {
    StandardSdp::new(c, d, xi)?.to_conic()
}

/// Residuals of a candidate primal/dual pair for a standard-form SDP.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpKktReport {
    /// `‖Ξ(Z) − D‖F`.
    pub primal_feasibility: f64,
    /// `max(0, −λmin(Z))`.
    pub primal_cone: f64,
    /// `max(0, −λmin(Ξ†(Y) − C))`.
    pub dual_cone: f64,
    pub primal_value: f64,
    pub dual_value: f64,
    /// `|Tr(CZ) − Tr(DY)|`.
    pub gap: f64,
    /// `‖Ξ†(Y)Z − CZ‖F`.
    pub slackness: f64,
}

impl SdpKktReport {
    pub fn max_residual(&self) -> f64 {
        self.primal_feasibility.max(self.primal_cone).max(self.dual_cone).max(self.gap).max(self.slackness)
    }
}

pub fn verify_sdp_kkt(sdp: &StandardSdp, z: &ComplexMatrix, y: &ComplexMatrix) -> Result<SdpKktReport> {
    let (ni, no) = (sdp.xi.dim_in, sdp.xi.dim_out);
    if z.shape() != (ni, ni) || y.shape() != (no, no) {
        return Err(Error::shape("candidate points do not match the SDP dimensions"));
    }
    let primal_feasibility = frobenius(&(sdp.xi.apply(z) - &sdp.d));
    let primal_cone = (-linalg::min_eig_hermitian_part(z)).max(0.0);
    let dual_slack = sdp.xi.adjoint(y) - &sdp.c;
    let dual_cone = (-linalg::min_eig_hermitian_part(&dual_slack)).max(0.0);
    let primal_value = (&sdp.c * z).trace().re;
    let dual_value = (&sdp.d * y).trace().re;
    let slackness = frobenius(&(dual_slack * z));
    Ok(SdpKktReport {
        primal_feasibility,
        primal_cone,
        dual_cone,
        primal_value,
        dual_value,
        gap: (primal_value - dual_value).abs(),
        slackness,
    })
}
