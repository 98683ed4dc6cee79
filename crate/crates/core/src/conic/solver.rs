//! Douglas–Rachford splitting on the homogeneous self-dual embedding.
//!
//! The iterate `w ∈ Rⁿ⁺ᵐ⁺¹` is mapped to `ũ = (R + Q)⁻¹ R w` (one solve with
//! a factored quasi-definite system), then `u = Π(2ũ − w)` onto
//! `Rⁿ × K* × R₊`, and `w ← w + α(u − ũ)`. Here
//!
//! ```text
//!     ⎡  0   Aᵀ  c ⎤
//! Q = ⎢ −A   0   b ⎥ ,   R = diag(ρₓ·1, r_y, 1).
//!     ⎣ −cᵀ −bᵀ  0 ⎦
//! ```
//!
//! The slack and the homogenizing `κ` are read off `v = R(w + u − 2ũ)`,
//! which lies in `{0} × K × R₊` and is orthogonal to `u`. Convergence is
//! sped up with safeguarded type-II Anderson acceleration and by adapting
//! the `r_y` scale to the ratio of primal and dual residuals.

use std::collections::VecDeque;

use log::{debug, trace};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::cones::Cone;
use super::sparse::SparseMatrix;
use super::ConicProgram;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Relative tolerance on primal residual, dual residual and gap.
    pub tol: f64,
    pub max_iters: usize,
    /// Ruiz equilibration of the constraint matrix.
    pub scaling: bool,
    /// Anderson memory; 0 disables acceleration.
    pub anderson_memory: usize,
    /// Over-relaxation `α ∈ (0, 2)`.
    pub relaxation: f64,
    pub adaptive_scale: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 50_000,
            scaling: true,
            anderson_memory: 10,
            relaxation: 1.5,
            adaptive_scale: true,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    MaxIters,
    InfeasibleSuspected,
}

/// Relative residuals of a candidate solution.
///
/// * primal: `‖Ax + s − b‖∞ / (1 + max(‖Ax‖∞, ‖s‖∞, ‖b‖∞))`
/// * dual: `‖Aᵀy + c‖∞ / (1 + max(‖Aᵀy‖∞, ‖c‖∞))`
/// * gap: `|cᵀx + bᵀy| / (1 + |cᵀx|)`
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverResult {
    pub status: Status,
    /// `cᵀx`.
    pub primal_value: f64,
    /// `−bᵀy`.
    pub dual_value: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    pub residuals: Residuals,
    pub iterations: usize,
}

const RHO_X: f64 = 1e-6;
const INITIAL_SCALE: f64 = 0.1;
const ZERO_CONE_SCALE_FACTOR: f64 = 1e3;
const SCALE_BOUNDS: (f64, f64) = (1e-6, 1e6);
const SCALE_CHECK_INTERVAL: usize = 100;
const SCALE_TRIGGER: f64 = 3.0;
const CHECK_INTERVAL: usize = 5;
const RUIZ_PASSES: usize = 25;
const EQUIL_BOUNDS: (f64, f64) = (1e-4, 1e4);
const AA_REGULARIZATION: f64 = 1e-10;
const AA_SAFEGUARD: f64 = 1.0;
const AA_MAX_WEIGHT: f64 = 1e6;
/// Anderson acceleration is switched off for the rest of a solve when the
/// best residual has not shrunk by `AA_STALL_FACTOR` within this many
/// iterations.
const AA_STALL_WINDOW: usize = 1000;
const AA_STALL_FACTOR: f64 = 0.5;

pub fn solve(p: &ConicProgram, opts: &SolverOptions) -> Result<SolverResult> {
    p.validate()?;
    if !(opts.relaxation > 0.0 && opts.relaxation < 2.0) {
        return Err(Error::config("relaxation must lie in (0, 2)"));
    }
    let mut ws = Workspace::new(p, opts)?;
    ws.run()
}

struct Scaling {
    d: Vec<f64>,
    e: Vec<f64>,
    sigma_b: f64,
    sigma_c: f64,
}

fn equilibrate(p: &ConicProgram, enabled: bool) -> (SparseMatrix, Vec<f64>, Vec<f64>, Scaling) {
    let (m, n) = (p.num_rows(), p.num_vars());
    let mut a = p.a.clone();
    let mut d = vec![1.0; m];
    let mut e = vec![1.0; n];
    if enabled {
        let segments = p.segments();
        for _ in 0..RUIZ_PASSES {
            let rn = a.row_inf_norms();
            let cn = a.col_inf_norms();
            let mut dr: Vec<f64> = rn.iter().map(|&x| inv_sqrt_or_one(x)).collect();
            for (cone, r) in &segments {
                if cone.needs_uniform_scaling() {
                    let max = rn[r.clone()].iter().cloned().fold(0.0, f64::max);
                    let f = inv_sqrt_or_one(max);
                    dr[r.clone()].iter_mut().for_each(|v| *v = f);
                }
            }
            let ec: Vec<f64> = cn.iter().map(|&x| inv_sqrt_or_one(x)).collect();
            let dr = clamp_cumulative(&mut d, &dr);
            let ec = clamp_cumulative(&mut e, &ec);
            a.scale(&dr, &ec);
        }
    }
    let b: Vec<f64> = p.b.iter().zip(&d).map(|(b, d)| b * d).collect();
    let c: Vec<f64> = p.c.iter().zip(&e).map(|(c, e)| c * e).collect();
    let (sigma_b, sigma_c) = if enabled { (normalizer(&b), normalizer(&c)) } else { (1.0, 1.0) };
    let b = b.iter().map(|v| v * sigma_b).collect();
    let c = c.iter().map(|v| v * sigma_c).collect();
    (a, b, c, Scaling { d, e, sigma_b, sigma_c })
}

fn inv_sqrt_or_one(x: f64) -> f64 {
    if x < 1e-12 {
        1.0
    } else {
        1.0 / x.sqrt()
    }
}

/// Applies step factors to a cumulative scaling, clamping the cumulative
/// value; returns the step actually taken.
fn clamp_cumulative(total: &mut [f64], step: &[f64]) -> Vec<f64> {
    total
        .iter_mut()
        .zip(step)
        .map(|(t, s)| {
            let new = (*t * s).clamp(EQUIL_BOUNDS.0, EQUIL_BOUNDS.1);
            let taken = new / *t;
            *t = new;
            taken
        })
        .collect()
}

fn normalizer(v: &[f64]) -> f64 {
    let n = inf_norm(v);
    if n < 1e-12 {
        1.0
    } else {
        (1.0 / n).clamp(1e-6, 1e6)
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Factored `(R + Q)` system for the current `r_y`.
struct LinearSystem {
    r_y: Vec<f64>,
    chol: Cholesky<f64, Dyn>,
    g: Vec<f64>,
    h_dot_g: f64,
}

struct Workspace<'a> {
    p: &'a ConicProgram,
    opts: &'a SolverOptions,
    a: SparseMatrix,
    b: Vec<f64>,
    c: Vec<f64>,
    scaling: Scaling,
    segments: Vec<(Cone, std::ops::Range<usize>)>,
    n: usize,
    m: usize,
    scale: f64,
    sys: LinearSystem,
}

/// Quantities produced by one application of the splitting operator.
struct Eval {
    u_tilde: Vec<f64>,
    u: Vec<f64>,
    /// Fixed-point residual `w − T(w)`.
    f: Vec<f64>,
    /// `‖f‖_R`. The iteration is averaged in the R-weighted norm, not the
    /// Euclidean one, so this is the quantity that must not increase.
    f_norm: f64,
}

impl<'a> Workspace<'a> {
    fn new(p: &'a ConicProgram, opts: &'a SolverOptions) -> Result<Self> {
        let (a, b, c, scaling) = equilibrate(p, opts.scaling);
        let segments = p.segments();
        let (n, m) = (p.num_vars(), p.num_rows());
        let r_y = Self::r_y_for(&segments, m, INITIAL_SCALE);
        let sys = Self::factor(&a, &b, &c, r_y)?;
        Ok(Self { p, opts, a, b, c, scaling, segments, n, m, scale: INITIAL_SCALE, sys })
    }

    fn r_y_for(segments: &[(Cone, std::ops::Range<usize>)], m: usize, scale: f64) -> Vec<f64> {
        let mut r = vec![1.0 / scale; m];
        for (cone, range) in segments {
            if matches!(cone, Cone::Zero(_)) {
                r[range.clone()].iter_mut().for_each(|v| *v = 1.0 / (ZERO_CONE_SCALE_FACTOR * scale));
            }
        }
        r
    }

    fn factor(a: &SparseMatrix, b: &[f64], c: &[f64], r_y: Vec<f64>) -> Result<LinearSystem> {
        let inv: Vec<f64> = r_y.iter().map(|r| 1.0 / r).collect();
        let mut k = a.gram(&inv);
        for i in 0..k.nrows() {
            k[(i, i)] += RHO_X;
        }
        let chol = Cholesky::new(k)
            .ok_or_else(|| Error::NumericBreakdown("normal matrix is not positive definite".into()))?;
        let mut sys = LinearSystem { r_y, chol, g: Vec::new(), h_dot_g: 0.0 };
        let (gx, gy) = Self::solve_k(a, &sys, c, b);
        sys.h_dot_g = dot(c, &gx) + dot(b, &gy);
        sys.g = gx.into_iter().chain(gy).collect();
        Ok(sys)
    }

    /// Solves `[ρₓ Aᵀ; −A r_y] [x; y] = [rx; ry]`.
    fn solve_k(a: &SparseMatrix, sys: &LinearSystem, rx: &[f64], ry: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let ry_scaled: Vec<f64> = ry.iter().zip(&sys.r_y).map(|(v, r)| v / r).collect();
        let mut at = vec![0.0; rx.len()];
        a.mul_t_vec(&ry_scaled, &mut at);
        let rhs = DVector::from_iterator(rx.len(), rx.iter().zip(&at).map(|(r, t)| r - t));
        let mut x = sys.chol.solve(&rhs);
        // one step of iterative refinement against ρₓ I + Aᵀ r_y⁻¹ A
        let mut ax = vec![0.0; ry.len()];
        a.mul_vec(x.as_slice(), &mut ax);
        ax.iter_mut().zip(&sys.r_y).for_each(|(v, r)| *v /= r);
        let mut kx = vec![0.0; rx.len()];
        a.mul_t_vec(&ax, &mut kx);
        let resid = DVector::from_iterator(
            rx.len(),
            rhs.iter().zip(&kx).zip(x.iter()).map(|((b, k), xi)| b - k - RHO_X * xi),
        );
        x += sys.chol.solve(&resid);
        let mut ax = vec![0.0; ry.len()];
        a.mul_vec(x.as_slice(), &mut ax);
        let y = ry.iter().zip(&ax).zip(&sys.r_y).map(|((r, v), ry)| (r + v) / ry).collect();
        (x.as_slice().to_vec(), y)
    }

    fn evaluate(&self, w: &[f64]) -> Eval {
        let (n, m) = (self.n, self.m);
        let px: Vec<f64> = w[..n].iter().map(|v| RHO_X * v).collect();
        let py: Vec<f64> = w[n..n + m].iter().zip(&self.sys.r_y).map(|(v, r)| v * r).collect();
        let pt = w[n + m];
        let (zx, zy) = Self::solve_k(&self.a, &self.sys, &px, &py);
        let tau = (pt + dot(&self.c, &zx) + dot(&self.b, &zy)) / (1.0 + self.sys.h_dot_g);
        let mut u_tilde = Vec::with_capacity(n + m + 1);
        u_tilde.extend(zx.iter().zip(&self.sys.g[..n]).map(|(z, g)| z - tau * g));
        u_tilde.extend(zy.iter().zip(&self.sys.g[n..]).map(|(z, g)| z - tau * g));
        u_tilde.push(tau);

        let mut u: Vec<f64> = u_tilde.iter().zip(w).map(|(ut, w)| 2.0 * ut - w).collect();
        for (cone, r) in &self.segments {
            cone.project_dual(&mut u[n + r.start..n + r.end]);
        }
        u[n + m] = u[n + m].max(0.0);

        let alpha = self.opts.relaxation;
        let f: Vec<f64> = u.iter().zip(&u_tilde).map(|(u, ut)| -alpha * (u - ut)).collect();
        let f_norm = self.r_norm(&f);
        Eval { u_tilde, u, f, f_norm }
    }

    fn r_norm(&self, v: &[f64]) -> f64 {
        let (n, m) = (self.n, self.m);
        let x: f64 = v[..n].iter().map(|a| RHO_X * a * a).sum();
        let y: f64 = v[n..n + m].iter().zip(&self.sys.r_y).map(|(a, r)| r * a * a).sum();
        (x + y + v[n + m] * v[n + m]).sqrt()
    }

    /// `v = R(w + u − 2ũ)`; only the `(s, κ)` part is nonzero.
    fn slack(&self, w: &[f64], e: &Eval) -> (Vec<f64>, f64) {
        let (n, m) = (self.n, self.m);
        let s = (0..m)
            .map(|i| self.sys.r_y[i] * (w[n + i] + e.u[n + i] - 2.0 * e.u_tilde[n + i]))
            .collect();
        let kappa = w[n + m] + e.u[n + m] - 2.0 * e.u_tilde[n + m];
        (s, kappa)
    }

    /// Unscaled `(x, y, s)` from homogeneous `(u, v)`.
    fn unscale(&self, u: &[f64], s_hat: &[f64], tau: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (n, m) = (self.n, self.m);
        let sc = &self.scaling;
        let x = (0..n).map(|j| sc.e[j] * u[j] / (tau * sc.sigma_b)).collect();
        let y = (0..m).map(|i| sc.d[i] * u[n + i] / (tau * sc.sigma_c)).collect();
        let s = (0..m).map(|i| s_hat[i] / (sc.d[i] * tau * sc.sigma_b)).collect();
        (x, y, s)
    }

    fn residuals(&self, x: &[f64], y: &[f64], s: &[f64]) -> Residuals {
        let p = self.p;
        let mut ax = vec![0.0; self.m];
        p.a.mul_vec(x, &mut ax);
        let mut aty = vec![0.0; self.n];
        p.a.mul_t_vec(y, &mut aty);
        let pr: Vec<f64> = (0..self.m).map(|i| ax[i] + s[i] - p.b[i]).collect();
        let dr: Vec<f64> = (0..self.n).map(|j| aty[j] + p.c[j]).collect();
        let cx = dot(&p.c, x);
        let by = dot(&p.b, y);
        Residuals {
            primal: inf_norm(&pr) / (1.0 + inf_norm(&ax).max(inf_norm(s)).max(inf_norm(&p.b))),
            dual: inf_norm(&dr) / (1.0 + inf_norm(&aty).max(inf_norm(&p.c))),
            gap: (cx + by).abs() / (1.0 + cx.abs()),
        }
    }

    /// Heuristic infeasibility test on the unnormalized homogeneous iterate.
    fn infeasibility_suspected(&self, u: &[f64], s_hat: &[f64]) -> bool {
        let (n, m) = (self.n, self.m);
        let sc = &self.scaling;
        let tol = self.opts.tol;
        let p = self.p;
        let y: Vec<f64> = (0..m).map(|i| sc.d[i] * u[n + i]).collect();
        let by = dot(&p.b, &y);
        if by < 0.0 {
            let mut aty = vec![0.0; n];
            p.a.mul_t_vec(&y, &mut aty);
            if inf_norm(&aty) <= tol * -by {
                return true;
            }
        }
        let x: Vec<f64> = (0..n).map(|j| sc.e[j] * u[j]).collect();
        let cx = dot(&p.c, &x);
        if cx < 0.0 {
            let s: Vec<f64> = (0..m).map(|i| s_hat[i] / sc.d[i]).collect();
            let mut ax = vec![0.0; m];
            p.a.mul_vec(&x, &mut ax);
            let r: Vec<f64> = ax.iter().zip(&s).map(|(a, s)| a + s).collect();
            if inf_norm(&r) <= tol * -cx {
                return true;
            }
        }
        false
    }

    fn rescale(&mut self, factor: f64, w: &mut Vec<f64>, e: &Eval) -> Result<()> {
        let (s_hat, kappa) = self.slack(w, e);
        let new_scale = (self.scale * factor).clamp(SCALE_BOUNDS.0, SCALE_BOUNDS.1);
        if new_scale == self.scale {
            return Ok(());
        }
        debug!("conic: scale {:.3e} -> {:.3e}", self.scale, new_scale);
        self.scale = new_scale;
        let r_y = Self::r_y_for(&self.segments, self.m, new_scale);
        self.sys = Self::factor(&self.a, &self.b, &self.c, r_y)?;
        // keep (u, v) fixed: w = u + R⁻¹v, and v has no x-part
        let n = self.n;
        for j in 0..n {
            w[j] = e.u[j];
        }
        for i in 0..self.m {
            w[n + i] = e.u[n + i] + s_hat[i] / self.sys.r_y[i];
        }
        w[n + self.m] = e.u[n + self.m] + kappa;
        Ok(())
    }

    fn run(&mut self) -> Result<SolverResult> {
        let (n, m) = (self.n, self.m);
        let len = n + m + 1;
        let mut w = vec![0.0; len];
        w[n + m] = 1.0;
        let mut aa = Anderson::new(self.opts.anderson_memory, len);
        // plain fixed-point step and its residual norm, kept while an
        // accelerated candidate is being tested
        let mut pending: Option<(Vec<f64>, f64)> = None;
        let mut last_scale_iter = 0;
        let mut best: Option<(Residuals, Vec<f64>, Vec<f64>, Vec<f64>)> = None;
        let mut accelerate = self.opts.anderson_memory > 0;
        // (iteration, best residual) at the last substantial improvement
        let mut progress = (0usize, f64::INFINITY);

        for k in 0..self.opts.max_iters {
            let mut e = self.evaluate(&w);
            if let Some((plain, prev_norm)) = pending.take() {
                if !(e.f_norm <= AA_SAFEGUARD * prev_norm) {
                    trace!("conic: rejected Anderson step at iteration {k}");
                    w = plain;
                    aa.reset();
                    e = self.evaluate(&w);
                }
            }
            if !e.f_norm.is_finite() {
                return Err(Error::NumericBreakdown(format!("non-finite iterate at iteration {k}")));
            }

            if k % CHECK_INTERVAL == 0 || k + 1 == self.opts.max_iters {
                let (s_hat, kappa) = self.slack(&w, &e);
                let tau = e.u[n + m];
                if tau > 1e-12 * kappa.max(1e-300) && tau > 0.0 {
                    let (x, y, s) = self.unscale(&e.u, &s_hat, tau);
                    let res = self.residuals(&x, &y, &s);
                    if res.max() <= self.opts.tol {
                        return Ok(self.finish(Status::Optimal, res, x, y, s, k + 1));
                    }
                    if res.max() < AA_STALL_FACTOR * progress.1 {
                        progress = (k, res.max());
                    }
                    if best.as_ref().is_none_or(|b| res.max() < b.0.max()) {
                        best = Some((res, x, y, s));
                    }
                    if accelerate && k >= progress.0 + AA_STALL_WINDOW {
                        debug!("conic: acceleration stalled at iteration {k}, continuing without it");
                        accelerate = false;
                        aa.reset();
                        pending = None;
                    }
                    if self.opts.adaptive_scale && k >= last_scale_iter + SCALE_CHECK_INTERVAL {
                        let ratio = (res.primal.max(1e-300) / res.dual.max(1e-300)).sqrt();
                        if !(1.0 / SCALE_TRIGGER..=SCALE_TRIGGER).contains(&ratio) {
                            self.rescale(ratio, &mut w, &e)?;
                            aa.reset();
                            last_scale_iter = k;
                            continue;
                        }
                    }
                }
                if tau <= kappa && self.infeasibility_suspected(&e.u, &s_hat) {
                    let (res, x, y, s) = best.take().unwrap_or_else(|| {
                        let nan = Residuals { primal: f64::INFINITY, dual: f64::INFINITY, gap: f64::INFINITY };
                        (nan, vec![f64::NAN; n], vec![f64::NAN; m], vec![f64::NAN; m])
                    });
                    return Ok(self.finish(Status::InfeasibleSuspected, res, x, y, s, k + 1));
                }
            }

            let t: Vec<f64> = w.iter().zip(&e.f).map(|(w, f)| w - f).collect();
            if !accelerate {
                w = t;
                continue;
            }
            aa.push(&w, &e.f);
            match aa.extrapolate(&t) {
                Some(candidate) => {
                    pending = Some((t, e.f_norm));
                    w = candidate;
                }
                None => w = t,
            }
        }

        let iters = self.opts.max_iters;
        match best {
            Some((res, x, y, s)) => Ok(self.finish(Status::MaxIters, res, x, y, s, iters)),
            None => Err(Error::NoConvergence { routine: "conic solver", iterations: iters }),
        }
    }

    fn finish(&self, status: Status, res: Residuals, x: Vec<f64>, y: Vec<f64>, s: Vec<f64>, iters: usize) -> SolverResult {
        let primal_value = dot(&self.p.c, &x);
        let dual_value = -dot(&self.p.b, &y);
        debug!(
            "conic: {status:?} after {iters} iterations, value {primal_value:.10e}, residuals {:.2e}/{:.2e}/{:.2e}",
            res.primal, res.dual, res.gap
        );
        SolverResult { status, primal_value, dual_value, x, y, s, residuals: res, iterations: iters }
    }
}

/// Type-II Anderson acceleration over the fixed-point map `w ↦ w − f(w)`.
struct Anderson {
    memory: usize,
    prev: Option<(Vec<f64>, Vec<f64>)>,
    dw: VecDeque<Vec<f64>>,
    df: VecDeque<Vec<f64>>,
    f_last: Vec<f64>,
}

impl Anderson {
    fn new(memory: usize, len: usize) -> Self {
        Self { memory, prev: None, dw: VecDeque::new(), df: VecDeque::new(), f_last: vec![0.0; len] }
    }

    fn reset(&mut self) {
        self.prev = None;
        self.dw.clear();
        self.df.clear();
    }

    fn push(&mut self, w: &[f64], f: &[f64]) {
        if self.memory == 0 {
            return;
        }
        if let Some((pw, pf)) = self.prev.take() {
            self.dw.push_back(w.iter().zip(&pw).map(|(a, b)| a - b).collect());
            self.df.push_back(f.iter().zip(&pf).map(|(a, b)| a - b).collect());
            if self.dw.len() > self.memory {
                self.dw.pop_front();
                self.df.pop_front();
            }
        }
        self.prev = Some((w.to_vec(), f.to_vec()));
        self.f_last.copy_from_slice(f);
    }

    fn extrapolate(&self, t: &[f64]) -> Option<Vec<f64>> {
        let k = self.df.len();
        if k == 0 {
            return None;
        }
        let mut gram = DMatrix::<f64>::zeros(k, k);
        let mut rhs = DVector::<f64>::zeros(k);
        for i in 0..k {
            for j in 0..=i {
                let v = dot(&self.df[i], &self.df[j]);
                gram[(i, j)] = v;
                gram[(j, i)] = v;
            }
            rhs[i] = dot(&self.df[i], &self.f_last);
        }
        let reg = AA_REGULARIZATION * (gram.trace() / k as f64).max(1e-300);
        for i in 0..k {
            gram[(i, i)] += reg;
        }
        let gamma = Cholesky::new(gram)?.solve(&rhs);
        if !gamma.iter().all(|g| g.is_finite() && g.abs() < AA_MAX_WEIGHT) {
            return None;
        }
        let mut out = t.to_vec();
        for i in 0..k {
            let g = gamma[i];
            for ((o, dw), df) in out.iter_mut().zip(&self.dw[i]).zip(&self.df[i]) {
                *o -= g * (dw - df);
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::cones::svec;
    use nalgebra::DMatrix;

    fn lp(c: Vec<f64>, rows: &[(usize, usize, f64)], b: Vec<f64>, cones: Vec<Cone>) -> ConicProgram {
        let a = SparseMatrix::from_triplets(b.len(), c.len(), rows);
        ConicProgram::new(c, a, b, cones).unwrap()
    }

    #[test]
    fn small_lp() {
        // min x1 + x2  s.t.  x1 + x2 = 1 (wrapped as ≥ constraints), x ≥ 0.5·e₁
        // → x1 ≥ 0.5, x2 ≥ 0, x1 + x2 ≥ 1: optimum 1
        let p = lp(
            vec![1.0, 1.0],
            &[(0, 0, -1.0), (1, 1, -1.0), (2, 0, -1.0), (2, 1, -1.0)],
            vec![-0.5, 0.0, -1.0],
            vec![Cone::NonNeg(3)],
        );
        let r = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(r.status, Status::Optimal);
        assert!((r.primal_value - 1.0).abs() < 1e-7);
        assert!((r.dual_value - 1.0).abs() < 1e-7);
    }

    #[test]
    fn psd_boundary_two_by_two() {
        // min t  s.t. [[t,1],[1,t]] ⪰ 0
        let s = std::f64::consts::SQRT_2;
        // svec order: (0,0), (1,0)·√2, (1,1); s = b − A t
        let p = lp(vec![1.0], &[(0, 0, -1.0), (2, 0, -1.0)], vec![0.0, s, 0.0], vec![Cone::Psd(2)]);
        let r = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(r.status, Status::Optimal);
        assert!((r.x[0] - 1.0).abs() < 1e-7, "t = {}", r.x[0]);
    }

    #[test]
    fn second_order_cone() {
        // min t  s.t. ‖(x1 − 3, x2 − 4)‖ ≤ t, x1 = x2 = 0 → t = 5
        let p = lp(
            vec![1.0, 0.0, 0.0],
            &[(0, 1, 1.0), (1, 2, 1.0), (2, 0, -1.0), (3, 1, 1.0), (4, 2, 1.0)],
            vec![0.0, 0.0, 0.0, 3.0, 4.0],
            vec![Cone::Zero(2), Cone::Soc(3)],
        );
        let r = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(r.status, Status::Optimal);
        assert!((r.primal_value - 5.0).abs() < 1e-7);
    }

    #[test]
    fn nuclear_norm_of_diagonal_via_block_sdp() {
        // min ½(y1 + y2 + z1 + z2) s.t. [[diag(y), −X],[−Xᵀ, diag(z)]] ⪰ 0 with
        // X = diag(1, −2); off-diagonal blocks of Y, Z fixed to their optimum 0
        // is not assumed: Y, Z are full symmetric 2x2 variables.
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -2.0]);
        // variables: Y (y00, y10, y11), Z (z00, z10, z11)
        let mut trip = Vec::new();
        let mut b0 = DMatrix::<f64>::zeros(4, 4);
        b0.view_mut((0, 2), (2, 2)).copy_from(&(-&x));
        b0.view_mut((2, 0), (2, 2)).copy_from(&(-x.transpose()));
        let b = svec(&b0);
        let var_entries = [(0, 0, 0), (1, 0, 1), (1, 1, 2), (2, 2, 3), (3, 2, 4), (3, 3, 5)];
        for (i, j, v) in var_entries {
            let mut unit = DMatrix::<f64>::zeros(4, 4);
            unit[(i, j)] = 1.0;
            unit[(j, i)] = 1.0;
            for (row, val) in svec(&unit).into_iter().enumerate() {
                if val != 0.0 {
                    let val = if i == j { val } else { val / 2.0 };
                    trip.push((row, v, -val));
                }
            }
        }
        let c = vec![0.5, 0.0, 0.5, 0.5, 0.0, 0.5];
        let p = lp(c, &trip, b, vec![Cone::Psd(4)]);
        let r = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(r.status, Status::Optimal);
        assert!((r.primal_value - 3.0).abs() < 1e-7, "{}", r.primal_value);
    }

    #[test]
    fn infeasible_lp_is_flagged() {
        // x ≥ 1 and x ≤ −1
        let p = lp(vec![1.0], &[(0, 0, -1.0), (1, 0, 1.0)], vec![-1.0, -1.0], vec![Cone::NonNeg(2)]);
        let r = solve(&p, &SolverOptions { max_iters: 5000, ..Default::default() }).unwrap();
        assert_eq!(r.status, Status::InfeasibleSuspected);
    }

    #[test]
    fn max_iters_is_reported() {
        let p = lp(vec![1.0], &[(0, 0, -1.0), (2, 0, -1.0)], vec![0.0, 1.0, 0.0], vec![Cone::Psd(2)]);
        let r = solve(&p, &SolverOptions { max_iters: 3, ..Default::default() });
        match r {
            Ok(res) => assert_eq!(res.status, Status::MaxIters),
            Err(Error::NoConvergence { .. }) => {}
            Err(e) => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn deterministic() {
        let p = lp(vec![1.0], &[(0, 0, -1.0), (2, 0, -1.0)], vec![0.0, 0.7, 0.0], vec![Cone::Psd(2)]);
        let a = solve(&p, &SolverOptions::default()).unwrap();
        let b = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn objective_scaling_scales_value() {
        let base = |k: f64| {
            lp(
                vec![k, k],
                &[(0, 0, -1.0), (1, 1, -1.0), (2, 0, -1.0), (2, 1, -1.0)],
                vec![-0.5, 0.0, -1.0],
                vec![Cone::NonNeg(3)],
            )
        };
        let r1 = solve(&base(1.0), &SolverOptions::default()).unwrap();
        let r10 = solve(&base(10.0), &SolverOptions::default()).unwrap();
        assert_eq!(r1.status, r10.status);
        assert!((r10.primal_value - 10.0 * r1.primal_value).abs() < 1e-6);
    }
}
