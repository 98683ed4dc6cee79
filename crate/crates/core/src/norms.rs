//! The square norm `‖X‖□ = max ‖(1⊗A) X (1⊗B)‖₁` over `‖A‖F = ‖B‖F = √dimV`,
//! the diamond norm derived from it, and the extremality theory around
//! `‖X‖□ = ‖X‖₁`.

use num_complex::Complex64;
use serde::Serialize;

use crate::choi::OperatorMap;
use crate::conic::model::{Affine, CMatExpr, Model};
use crate::conic::{verify_sdp_kkt, HermitianMap, SdpKktReport, SolverOptions, StandardSdp, Status};
use crate::error::{Error, Result};
use crate::linalg::{
    self, abs_left, abs_right, cr, frobenius, identity, kron, nuclear_norm, partial_trace_w,
    sign_matrix, spectral_norm, BipartiteOperator, ComplexMatrix,
};
use crate::rng::{complex_gaussian_matrix, Rng};

/// Solution of the reduced square-norm SDP pair.
///
/// The dual program (production path) is
/// `min (dimV/2)(‖Tr_W Y‖∞ + ‖Tr_W Z‖∞)` over `[[Y, −X], [−X†, Z]] ⪰ 0`;
/// the primal is `max Re Tr(X Z)` over `[[1⊗ρ, Z], [Z†, 1⊗σ]] ⪰ 0`,
/// `Tr ρ = Tr σ = dimV`. Primal witnesses are read off the solver's dual
/// multipliers.
#[derive(Clone, Debug)]
pub struct SquareNormReport {
    pub value: f64,
    /// Primal objective `Re Tr(X Z)` at the primal witnesses.
    pub primal_value: f64,
    /// Dual objective at the dual witnesses.
    pub dual_value: f64,
    pub dual_y: ComplexMatrix,
    pub dual_z: ComplexMatrix,
    pub primal_z: ComplexMatrix,
    pub rho: ComplexMatrix,
    pub sigma: ComplexMatrix,
    pub gap: f64,
    pub status: Status,
    pub iterations: usize,
}

fn reduced_dual_objective(y: &ComplexMatrix, z: &ComplexMatrix, dim_w: usize, dim_v: usize) -> f64 {
    let ty = linalg::hermitian_part(&partial_trace_w(y, dim_w, dim_v));
    let tz = linalg::hermitian_part(&partial_trace_w(z, dim_w, dim_v));
    let top = |m: &ComplexMatrix| linalg::eigh_unchecked(m).0.last().copied().unwrap_or(0.0);
    0.5 * dim_v as f64 * (top(&ty) + top(&tz))
}

pub fn square_norm(x: &BipartiteOperator, tol: f64) -> Result<SquareNormReport> {
    square_norm_with(x, &SolverOptions::with_tol(tol))
}

pub fn square_norm_with(x: &BipartiteOperator, opts: &SolverOptions) -> Result<SquareNormReport> {
    let (dw, dv, n) = (x.dim_w, x.dim_v, x.dim());
    if x.mat.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        let zero = linalg::zeros(n, n);
        return Ok(SquareNormReport {
            value: 0.0,
            primal_value: 0.0,
            dual_value: 0.0,
            dual_y: zero.clone(),
            dual_z: zero.clone(),
            primal_z: zero,
            rho: identity(dv),
            sigma: identity(dv),
            gap: 0.0,
            status: Status::Optimal,
            iterations: 0,
        });
    }
    let mut m = Model::new();
    let y = m.hermitian(n);
    let z = m.hermitian(n);
    let t1 = m.add_var();
    let t2 = m.add_var();
    let xe = CMatExpr::constant(&x.mat);
    let minus = cr(-1.0);
    let block = CMatExpr::block2(&y, &xe.scaled(minus), &xe.adjoint().scaled(minus), &z);
    let block_id = m.add_psd_hermitian(&block);
    let p1 = m.add_psd_hermitian(&CMatExpr::scalar_identity(&t1, dv).minus(&y.partial_trace_w(dw, dv)));
    let p2 = m.add_psd_hermitian(&CMatExpr::scalar_identity(&t2, dv).minus(&z.partial_trace_w(dw, dv)));
    m.minimize(t1.plus(&t2).scaled(0.5 * dv as f64));
    let sol = m.solve(opts)?;

    let ym = sol.eval(&y);
    let zm = sol.eval(&z);
    let w = sol.dual_matrix(block_id)?;
    let primal_z = w.view((n, 0), (n, n)) * cr(2.0);
    let sigma = sol.dual_matrix(p1)? * cr(2.0);
    let rho = sol.dual_matrix(p2)? * cr(2.0);
    let primal_value = (&x.mat * &primal_z).trace().re;
    let dual_value = reduced_dual_objective(&ym, &zm, dw, dv);
    Ok(SquareNormReport {
        value: sol.primal_value(),
        primal_value,
        dual_value,
        gap: (primal_value - dual_value).abs(),
        dual_y: ym,
        dual_z: zm,
        primal_z,
        rho,
        sigma,
        status: sol.result.status,
        iterations: sol.result.iterations,
    })
}

/// Solves the reduced primal program directly and returns its optimal value
/// with the witnesses `(Z, ρ, σ)`. Used to cross-check the dual route.
pub fn square_norm_primal(
    x: &BipartiteOperator,
    opts: &SolverOptions,
) -> Result<(f64, ComplexMatrix, ComplexMatrix, ComplexMatrix)> {
    let (dw, dv, n) = (x.dim_w, x.dim_v, x.dim());
    let mut m = Model::new();
    let rho = m.hermitian(dv);
    let sigma = m.hermitian(dv);
    let z = m.complex_matrix(n, n);
    let id_w = identity(dw);
    let lift = |e: &CMatExpr| kron_identity_left(&id_w, e);
    let block = CMatExpr::block2(&lift(&rho), &z, &z.adjoint(), &lift(&sigma));
    m.add_psd_hermitian(&block);
    let dvf = dv as f64;
    m.add_zero(vec![
        rho.trace().re.minus(&Affine::constant(dvf)),
        sigma.trace().re.minus(&Affine::constant(dvf)),
    ]);
    // Re Tr(XZ) = Re ⟨X†, Z⟩
    m.minimize(z.inner_with(&x.mat.adjoint()).re.scaled(-1.0));
    let sol = m.solve(opts)?;
    Ok((-sol.primal_value(), sol.eval(&z), sol.eval(&rho), sol.eval(&sigma)))
}

/// `1_W ⊗ E` for an expression `E` on `V`.
fn kron_identity_left(id_w: &ComplexMatrix, e: &CMatExpr) -> CMatExpr {
    let (dw, dv) = (id_w.nrows(), e.nrows());
    let mut out = CMatExpr::zeros(dw * dv, dw * dv);
    for w in 0..dw {
        for i in 0..dv {
            for j in 0..dv {
                *out.at_mut(w * dv + i, w * dv + j) = e.at(i, j).clone();
            }
        }
    }
    out
}

/// `‖M‖◇ = ‖J(M)‖□ / dimV`.
pub fn diamond_norm(m: &OperatorMap, tol: f64) -> Result<f64> {
    Ok(square_norm(&m.choi, tol)?.value / m.dim_v() as f64)
}

/// The three norm inequalities with their slacks (nonnegative when they hold).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundsReport {
    pub nuclear: f64,
    pub square: f64,
    pub spectral: f64,
    /// `‖X‖□ − ‖X‖₁`.
    pub lower_slack: f64,
    /// `dimV·‖X‖₁ − ‖X‖□`.
    pub nuclear_upper_slack: f64,
    /// `dim(W⊗V)·‖X‖∞ − ‖X‖□`.
    pub spectral_upper_slack: f64,
}

impl BoundsReport {
    pub fn holds(&self, tol: f64) -> [bool; 3] {
        [self.lower_slack >= -tol, self.nuclear_upper_slack >= -tol, self.spectral_upper_slack >= -tol]
    }
}

pub fn check_bounds(x: &BipartiteOperator, tol: f64) -> Result<BoundsReport> {
    let square = square_norm(x, tol)?.value;
    Ok(bounds_from_value(x, square))
}

pub fn bounds_from_value(x: &BipartiteOperator, square: f64) -> BoundsReport {
    let nuclear = nuclear_norm(&x.mat);
    let spectral = spectral_norm(&x.mat);
    BoundsReport {
        nuclear,
        square,
        spectral,
        lower_slack: square - nuclear,
        nuclear_upper_slack: x.dim_v as f64 * nuclear - square,
        spectral_upper_slack: x.dim() as f64 * spectral - square,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Extremality {
    pub extremal: bool,
    pub residual: f64,
}

/// Flatness of both partial-traced absolute values, relative to `‖X‖₁/dimV`.
pub fn extremality_check(x: &BipartiteOperator, tol: f64) -> Result<Extremality> {
    let nuc = x.nuclear_norm();
    if nuc <= linalg::ABS_TOL_FLOOR {
        return Ok(Extremality { extremal: true, residual: 0.0 });
    }
    let (dw, dv) = (x.dim_w, x.dim_v);
    let level = nuc / dv as f64;
    let flat = identity(dv) * cr(level);
    let left = partial_trace_w(&abs_left(&x.mat)?, dw, dv);
    let right = partial_trace_w(&abs_right(&x.mat)?, dw, dv);
    let residual = frobenius(&(left - &flat)).max(frobenius(&(right - &flat))) / level;
    Ok(Extremality { extremal: residual <= tol, residual })
}

/// Watrous' standard form `(Ξ, C, D)` for `‖X‖□`.
///
/// `Z` lives on `V ⊕ V ⊕ (W⊗V) ⊕ (W⊗V)` with diagonal blocks
/// `(W₀, W₁, Z₀, Z₁)`; `Ξ(Z) = diag(Tr W₀, Tr W₁, Z₀ − 1⊗W₀, Z₁ − 1⊗W₁)`,
/// `D = diag(1, 1, 0, 0)`, and `C` carries `(dimV/2)·X` in block `(Z₀, Z₁)`
/// and its adjoint in block `(Z₁, Z₀)`.
pub fn watrous_sdp(x: &BipartiteOperator) -> Result<StandardSdp> {
    let (dw, dv, n) = (x.dim_w, x.dim_v, x.dim());
    let dim_in = 2 * dv + 2 * n;
    let dim_out = 2 + 2 * n;
    let id_w = identity(dw);
    let xi = HermitianMap::from_fn(dim_in, dim_out, |z| {
        let w0 = z.view((0, 0), (dv, dv)).into_owned();
        let w1 = z.view((dv, dv), (dv, dv)).into_owned();
        let z0 = z.view((2 * dv, 2 * dv), (n, n)).into_owned();
        let z1 = z.view((2 * dv + n, 2 * dv + n), (n, n)).into_owned();
        let mut out = linalg::zeros(dim_out, dim_out);
        out[(0, 0)] = linalg::trace(&w0);
        out[(1, 1)] = linalg::trace(&w1);
        out.view_mut((2, 2), (n, n)).copy_from(&(z0 - kron(&id_w, &w0)));
        out.view_mut((2 + n, 2 + n), (n, n)).copy_from(&(z1 - kron(&id_w, &w1)));
        out
    })?;
    let mut c = linalg::zeros(dim_in, dim_in);
    let half_dv = cr(0.5 * dv as f64);
    c.view_mut((2 * dv, 2 * dv + n), (n, n)).copy_from(&(&x.mat * half_dv));
    c.view_mut((2 * dv + n, 2 * dv), (n, n)).copy_from(&(x.mat.adjoint() * half_dv));
    let mut d = linalg::zeros(dim_out, dim_out);
    d[(0, 0)] = cr(1.0);
    d[(1, 1)] = cr(1.0);
    StandardSdp::new(c, d, xi)
}

/// The explicit optimal pair `(Z♯, Y♯)` for an extremal `X`.
pub fn optimal_points(x: &BipartiteOperator) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let (dv, n) = (x.dim_v, x.dim());
    let dvf = dv as f64;
    let s = sign_matrix(&x.mat)?;
    let dim_in = 2 * dv + 2 * n;
    let mut z = identity(dim_in);
    z.view_mut((2 * dv, 2 * dv + n), (n, n)).copy_from(&s.adjoint());
    z.view_mut((2 * dv + n, 2 * dv), (n, n)).copy_from(&s);
    let z = z * cr(1.0 / dvf);

    let nuc = nuclear_norm(&x.mat);
    let mut y = linalg::zeros(2 + 2 * n, 2 + 2 * n);
    y[(0, 0)] = cr(0.5 * nuc);
    y[(1, 1)] = cr(0.5 * nuc);
    y.view_mut((2, 2), (n, n)).copy_from(&(abs_left(&x.mat)? * cr(0.5 * dvf)));
    y.view_mut((2 + n, 2 + n), (n, n)).copy_from(&(abs_right(&x.mat)? * cr(0.5 * dvf)));
    Ok((z, y))
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimalPointsReport {
    pub nuclear: f64,
    pub kkt: SdpKktReport,
    /// `Re Tr(X S_X)` at `Z = S_X`, `ρ = σ = 1`.
    pub reduced_primal_value: f64,
    /// `max(0, −λmin([[1, S_X], [S_X†, 1]]))`.
    pub reduced_primal_violation: f64,
    /// Dual objective at `Y = √(XX†)`, `Z = √(X†X)`.
    pub reduced_dual_value: f64,
    /// `max(0, −λmin([[Y, −X], [−X†, Z]]))`.
    pub reduced_dual_violation: f64,
}

impl OptimalPointsReport {
    /// Largest deviation from exact optimality over all checks.
    pub fn max_residual(&self) -> f64 {
        let scale = 1.0 + self.nuclear;
        self.kkt
            .max_residual()
            .max((self.kkt.primal_value - self.nuclear).abs())
            .max((self.kkt.dual_value - self.nuclear).abs())
            .max((self.reduced_primal_value - self.nuclear).abs())
            .max((self.reduced_dual_value - self.nuclear).abs())
            .max(self.reduced_primal_violation)
            .max(self.reduced_dual_violation)
            / scale
    }
}

pub fn verify_optimal_points(x: &BipartiteOperator, tol: f64) -> Result<OptimalPointsReport> {
    let ext = extremality_check(x, tol)?;
    if !ext.extremal {
        return Err(Error::precondition(format!(
            "operator is not extremal (residual {:.3e})",
            ext.residual
        )));
    }
    let sdp = watrous_sdp(x)?;
    let (z, y) = optimal_points(x)?;
    let kkt = verify_sdp_kkt(&sdp, &z, &y)?;

    let (dw, dv, n) = (x.dim_w, x.dim_v, x.dim());
    let s = sign_matrix(&x.mat)?;
    let id = identity(n);
    let mut primal_block = linalg::zeros(2 * n, 2 * n);
    primal_block.view_mut((0, 0), (n, n)).copy_from(&id);
    primal_block.view_mut((n, n), (n, n)).copy_from(&id);
    primal_block.view_mut((0, n), (n, n)).copy_from(&s);
    primal_block.view_mut((n, 0), (n, n)).copy_from(&s.adjoint());
    let reduced_primal_value = (&x.mat * &s).trace().re;

    let yl = abs_left(&x.mat)?;
    let zr = abs_right(&x.mat)?;
    let mut dual_block = linalg::zeros(2 * n, 2 * n);
    dual_block.view_mut((0, 0), (n, n)).copy_from(&yl);
    dual_block.view_mut((n, n), (n, n)).copy_from(&zr);
    dual_block.view_mut((0, n), (n, n)).copy_from(&(-&x.mat));
    dual_block.view_mut((n, 0), (n, n)).copy_from(&(-x.mat.adjoint()));
    let reduced_dual_value = reduced_dual_objective(&yl, &zr, dw, dv);

    Ok(OptimalPointsReport {
        nuclear: nuclear_norm(&x.mat),
        kkt,
        reduced_primal_value,
        reduced_primal_violation: (-linalg::min_eig_hermitian_part(&primal_block)).max(0.0),
        reduced_dual_value,
        reduced_dual_violation: (-linalg::min_eig_hermitian_part(&dual_block)).max(0.0),
    })
}

/// `‖(1⊗A) X (1⊗B)‖₁`.
pub fn sandwiched_nuclear(x: &BipartiteOperator, a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let id_w = identity(x.dim_w);
    nuclear_norm(&(kron(&id_w, a) * &x.mat * kron(&id_w, b)))
}

fn normalize_frobenius(a: ComplexMatrix, target: f64) -> ComplexMatrix {
    let f = frobenius(&a);
    a * cr(target / f)
}

/// Lower bound on `‖X‖□` from sampled sandwiches `(A, B)` on the constraint
/// surface `‖A‖F = ‖B‖F = √dimV`. The first sample is `A = B = 1`; half of the
/// remaining samples are fresh Gaussian draws and half perturb the best pair
/// found so far with a shrinking step.
pub fn variational_lower_bound(x: &BipartiteOperator, samples: usize, rng: &mut Rng) -> Result<f64> {
    if samples == 0 {
        return Err(Error::precondition("at least one sample is required"));
    }
    let dv = x.dim_v;
    let radius = (dv as f64).sqrt();
    let mut best_a = identity(dv);
    let mut best_b = identity(dv);
    let mut best = sandwiched_nuclear(x, &best_a, &best_b);
    let mut step = 0.5;
    for k in 1..samples {
        let (a, b) = if k % 2 == 1 {
            (
                normalize_frobenius(complex_gaussian_matrix(rng, dv, dv), radius),
                normalize_frobenius(complex_gaussian_matrix(rng, dv, dv), radius),
            )
        } else {
            let da = complex_gaussian_matrix(rng, dv, dv) * cr(step);
            let db = complex_gaussian_matrix(rng, dv, dv) * cr(step);
            (normalize_frobenius(&best_a + da, radius), normalize_frobenius(&best_b + db, radius))
        };
        let v = sandwiched_nuclear(x, &a, &b);
        if v > best {
            best = v;
            best_a = a;
            best_b = b;
        } else if k % 2 == 0 {
            step = (step * 0.97).max(1e-4);
        }
    }
    Ok(best)
}
