//! Regularized recovery: minimize the nuclear or square norm of a Choi matrix
//! subject to `‖𝒜(X) − y‖₂ ≤ η`, optionally restricted to CPT maps.

use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conic::model::{Affine, CMatExpr, Model};
use crate::conic::{Residuals, SolverOptions, Status};
use crate::error::{Error, Result};
use crate::linalg::{cr, frobenius, identity, BipartiteOperator};
use crate::measure::{apply_measurement, vector_norm, MeasurementEnsemble};
use crate::rng::Field;

/// Relative slack applied when the requested noise bound is zero.
pub const ETA_FLOOR: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regularizer {
    Nuclear,
    Square,
}

impl Regularizer {
    pub fn name(self) -> &'static str {
        match self {
            Regularizer::Nuclear => "nuclear",
            Regularizer::Square => "square",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RecoveryProblem {
    pub ensemble: MeasurementEnsemble,
    pub y: Vec<Complex64>,
    pub eta: f64,
    pub regularizer: Regularizer,
    pub cpt: bool,
    /// Real problems optimize over real Choi matrices.
    pub field: Field,
}

impl RecoveryProblem {
    pub fn new(
        ensemble: MeasurementEnsemble,
        y: Vec<Complex64>,
        eta: f64,
        regularizer: Regularizer,
        cpt: bool,
        field: Field,
    ) -> Result<Self> {
        let p = Self { ensemble, y, eta, regularizer, cpt, field };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.y.len() != self.ensemble.m() {
            return Err(Error::shape(format!(
                "{} outcomes for an ensemble of size {}",
                self.y.len(),
                self.ensemble.m()
            )));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::precondition("eta must be finite and nonnegative"));
        }
        if self.y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.ensemble.dim_w, self.ensemble.dim_v)
    }

    /// True when `η ≤ 1e-9·‖y‖`; such problems are solved with `𝒜(X) = y`.
    pub fn is_noiseless(&self) -> bool {
        self.eta <= ETA_FLOOR * vector_norm(&self.y)
    }

    /// Noise bound handed to the solver: `max(η, 1e-9·‖y‖)`.
    pub fn effective_eta(&self) -> f64 {
        self.eta.max(ETA_FLOOR * vector_norm(&self.y))
    }
}

#[derive(Clone, Debug)]
pub struct RecoveryResult {
    pub estimate: BipartiteOperator,
    pub objective: f64,
    pub status: Status,
    pub iterations: usize,
    pub residuals: Residuals,
    /// `‖𝒜(X̂) − y‖₂`.
    pub data_misfit: f64,
    pub eta_used: f64,
    pub solve_ms: f64,
    pub frob_error: Option<f64>,
}

impl RecoveryResult {
    pub fn with_truth(mut self, truth: &BipartiteOperator) -> Result<Self> {
        self.frob_error = Some(frobenius_error(&self.estimate, truth)?);
        Ok(self)
    }
}

pub fn frobenius_error(estimate: &BipartiteOperator, truth: &BipartiteOperator) -> Result<f64> {
    if (estimate.dim_w, estimate.dim_v) != (truth.dim_w, truth.dim_v) {
        return Err(Error::shape("estimate and truth dimensions differ"));
    }
    Ok(frobenius(&(&estimate.mat - &truth.mat)))
}

pub fn recover_nuclear(p: &RecoveryProblem, opts: &SolverOptions) -> Result<RecoveryResult> {
    if p.regularizer != Regularizer::Nuclear {
        return Err(Error::precondition("recover_nuclear called on a square-norm problem"));
    }
    recover(p, opts)
}

pub fn recover_square(p: &RecoveryProblem, opts: &SolverOptions) -> Result<RecoveryResult> {
    if p.regularizer != Regularizer::Square {
        return Err(Error::precondition("recover_square called on a nuclear-norm problem"));
    }
    recover(p, opts)
}

struct Encoded {
    model: Model,
    x: CMatExpr,
}

fn psd(model: &mut Model, e: &CMatExpr, field: Field) {
    match field {
        Field::Real => model.add_psd_real(e),
        Field::Complex => model.add_psd_hermitian(e),
    };
}

/// Real equality rows for `E = 0` on a matrix known to be Hermitian:
/// the real upper triangle and the imaginary strict upper triangle.
fn hermitian_zero_rows(e: &CMatExpr, field: Field) -> Vec<Affine> {
    let n = e.nrows();
    let mut rows = Vec::new();
    for i in 0..n {
        for j in i..n {
            rows.push(e.at(i, j).re.clone());
            if j > i && field == Field::Complex {
                rows.push(e.at(i, j).im.clone());
            }
        }
    }
    rows
}

fn encode(p: &RecoveryProblem) -> Result<Encoded> {
    p.validate()?;
    let (dw, dv) = p.dims();
    let n = dw * dv;
    let field = p.field;
    let mut m = Model::new();
    let (x, y, z) = match field {
        Field::Real => (m.real_matrix(n, n), m.real_symmetric(n), m.real_symmetric(n)),
        Field::Complex => (m.complex_matrix(n, n), m.hermitian(n), m.hermitian(n)),
    };
    let minus = cr(-1.0);
    let block = CMatExpr::block2(&y, &x.scaled(minus), &x.adjoint().scaled(minus), &z);
    psd(&mut m, &block, field);

    match p.regularizer {
        Regularizer::Nuclear => m.minimize(y.trace().re.plus(&z.trace().re).scaled(0.5)),
        Regularizer::Square => {
            let t1 = m.add_var();
            let t2 = m.add_var();
            let ty = CMatExpr::scalar_identity(&t1, dv).minus(&y.partial_trace_w(dw, dv));
            let tz = CMatExpr::scalar_identity(&t2, dv).minus(&z.partial_trace_w(dw, dv));
            psd(&mut m, &ty, field);
            psd(&mut m, &tz, field);
            m.minimize(t1.plus(&t2).scaled(0.5 * dv as f64));
        }
    }

    let mut rows = Vec::with_capacity(2 * p.y.len());
    for (f, yi) in p.ensemble.functionals.iter().zip(&p.y) {
        let ax = x.inner_with(f);
        rows.push(Affine::constant(yi.re).minus(&ax.re));
        let mut im = Affine::constant(yi.im).minus(&ax.im);
        im.compact();
        if !im.terms.is_empty() || im.constant != 0.0 {
            rows.push(im);
        }
    }
    if p.is_noiseless() {
        // A second-order cone of radius ~1e-9‖y‖ is nearly degenerate and
        // stalls the splitting solver; its η → 0 limit is the equality.
        m.add_zero(rows);
    } else {
        m.add_soc(Affine::constant(p.effective_eta()), rows);
    }

    if p.cpt {
        add_cpt_constraints(&mut m, &x, dw, dv, field);
    }
    Ok(Encoded { model: m, x })
}

/// `J = J†`, `J ⪰ 0` and `Tr_W J = 1_V` on the recovery variable.
pub fn add_cpt_constraints(m: &mut Model, x: &CMatExpr, dim_w: usize, dim_v: usize, field: Field) {
    let n = dim_w * dim_v;
    let mut herm = Vec::new();
    for i in 0..n {
        if field == Field::Complex {
            herm.push(x.at(i, i).im.clone());
        }
        for j in i + 1..n {
            herm.push(x.at(i, j).re.minus(&x.at(j, i).re));
            if field == Field::Complex {
                herm.push(x.at(i, j).im.plus(&x.at(j, i).im));
            }
        }
    }
    m.add_zero(herm);
    psd(m, x, field);
    let tp = x.partial_trace_w(dim_w, dim_v).minus(&CMatExpr::constant(&identity(dim_v)));
    m.add_zero(hermitian_zero_rows(&tp, field));
}

pub fn recover(p: &RecoveryProblem, opts: &SolverOptions) -> Result<RecoveryResult> {
    let enc = encode(p)?;
    let start = Instant::now();
    let sol = enc.model.solve(opts)?;
    let solve_ms = start.elapsed().as_secs_f64() * 1e3;
    let (dw, dv) = p.dims();
    let mut mat = sol.eval(&enc.x);
    if p.field == Field::Real {
        mat.apply(|z| *z = cr(z.re));
    }
    let estimate = BipartiteOperator::new(mat, dw, dv)?;
    let ax = apply_measurement(&p.ensemble, &estimate)?;
    let data_misfit = vector_norm(&ax.iter().zip(&p.y).map(|(a, b)| a - b).collect::<Vec<_>>());
    Ok(RecoveryResult {
        estimate,
        objective: sol.primal_value(),
        status: sol.result.status,
        iterations: sol.result.iterations,
        residuals: sol.result.residuals,
        data_misfit,
        eta_used: p.effective_eta(),
        solve_ms,
        frob_error: None,
    })
}
