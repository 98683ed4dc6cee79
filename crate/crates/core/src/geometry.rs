//! Sampled checks of descent-cone geometry.
//!
//! Descent cones are unions over `τ > 0` of `{u : f(X + τu) ≤ f(X)}`; here
//! membership is decided on a geometric `τ` grid with a small tolerance that
//! absorbs SDP noise in square-norm evaluations. Each positive answer comes
//! with a certificate that can be re-verified on its own.

use log::debug;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::choi::{random_unitary, unitary_pair_map};
use crate::conic::SolverOptions;
use crate::error::{Error, Result};
use crate::linalg::{
    cr, frobenius, identity, is_hermitian, nuclear_norm, schatten_norm, svd, BipartiteOperator,
    ComplexMatrix, Schatten,
};
use crate::measure::{apply_measurement, vector_norm, MeasurementEnsemble};
use crate::norms::{extremality_check, sandwiched_nuclear, square_norm_primal, square_norm_with};
use crate::rng::{complex_gaussian_matrix, seeded, Rng};

/// Relative membership tolerance `εtol = 1e-9·(1 + f(X))`.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
/// Solver tolerance for square-norm evaluations inside the checks.
pub const SQUARE_EVAL_TOL: f64 = 1e-9;
/// Singular values below this fraction of `σ₁` count as zero.
pub const RANK_TOL: f64 = 1e-9;
const PROJECTOR_TOL: f64 = 1e-9;
const EXTREMALITY_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormTag {
    Nuclear,
    Square,
}

/// A norm value with an a-posteriori error bound (zero for closed forms).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub uncertainty: f64,
}

pub fn evaluate(tag: NormTag, x: &BipartiteOperator) -> Result<Evaluation> {
    match tag {
        NormTag::Nuclear => Ok(Evaluation { value: nuclear_norm(&x.mat), uncertainty: 0.0 }),
        NormTag::Square => {
            let r = square_norm_with(x, &SolverOptions::with_tol(SQUARE_EVAL_TOL))?;
            Ok(Evaluation { value: r.value, uncertainty: (r.primal_value - r.dual_value).abs() })
        }
    }
}

/// 24 geometrically spaced steps in `[1e-6, 1e2]`, ascending.
pub fn default_tau_grid() -> Vec<f64> {
    let (lo, hi, k) = (1e-6f64, 1e2f64, 24);
    (0..k).map(|i| lo * (hi / lo).powf(i as f64 / (k - 1) as f64)).collect()
}

fn tolerance(f: f64) -> f64 {
    MEMBERSHIP_TOL * (1.0 + f)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DescentCertificate {
    pub base: BipartiteOperator,
    pub direction: BipartiteOperator,
    pub tau: f64,
    pub tag: NormTag,
    /// `f(X) − f(X + τu)`, at least `−εtol`.
    pub margin: f64,
}

impl DescentCertificate {
    pub fn point(&self) -> BipartiteOperator {
        offset(&self.base, &self.direction, self.tau)
    }

    /// Recomputes both norm values. Square norms go through the reduced
    /// primal program rather than the dual route that produced the
    /// certificate.
    pub fn recheck(&self) -> Result<bool> {
        let eval = |x: &BipartiteOperator| -> Result<f64> {
            match self.tag {
                NormTag::Nuclear => Ok(nuclear_norm(&x.mat)),
                NormTag::Square => Ok(square_norm_primal(x, &SolverOptions::with_tol(SQUARE_EVAL_TOL))?.0),
            }
        };
        let f0 = eval(&self.base)?;
        let f1 = eval(&self.point())?;
        // the primal route is accurate to the solver tolerance, not better
        let slack = match self.tag {
            NormTag::Nuclear => 0.0,
            NormTag::Square => 1e-7 * (1.0 + f0),
        };
        Ok(f0 - f1 >= -tolerance(f0) - slack)
    }
}

fn offset(x: &BipartiteOperator, u: &BipartiteOperator, tau: f64) -> BipartiteOperator {
    BipartiteOperator { mat: &x.mat + &u.mat * cr(tau), dim_w: x.dim_w, dim_v: x.dim_v }
}

fn same_shape(x: &BipartiteOperator, u: &BipartiteOperator) -> Result<()> {
    if (x.dim_w, x.dim_v) != (u.dim_w, u.dim_v) {
        return Err(Error::shape("base point and direction live on different spaces"));
    }
    Ok(())
}

/// The first `τ` of `grid` with `f(X + τu) ≤ f(X) + εtol`.
///
/// `τ ↦ f(X + τu) − f(X)` is convex and vanishes at 0, so on an ascending
/// grid a failed step rules out every later one and the scan stops there.
pub fn is_descent_direction(
    tag: NormTag,
    x: &BipartiteOperator,
    u: &BipartiteOperator,
    grid: &[f64],
) -> Result<Option<DescentCertificate>> {
    let f0 = evaluate(tag, x)?.value;
    descent_from(tag, x, f0, u, grid)
}

fn descent_from(
    tag: NormTag,
    x: &BipartiteOperator,
    f0: f64,
    u: &BipartiteOperator,
    grid: &[f64],
) -> Result<Option<DescentCertificate>> {
    check_inputs(x, f0, u, grid)?;
    let ascending = grid.windows(2).all(|w| w[0] < w[1]);
    for &tau in grid {
        let f1 = evaluate(tag, &offset(x, u, tau))?.value;
        let margin = f0 - f1;
        if margin >= -tolerance(f0) {
            return Ok(Some(DescentCertificate { base: x.clone(), direction: u.clone(), tau, tag, margin }));
        }
        if ascending {
            break;
        }
    }
    Ok(None)
}

fn check_inputs(x: &BipartiteOperator, f0: f64, u: &BipartiteOperator, grid: &[f64]) -> Result<()> {
    same_shape(x, u)?;
    if f0 <= 0.0 {
        return Err(Error::precondition("descent cones are only sampled at X ≠ 0"));
    }
    if grid.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::precondition("step sizes must be positive"));
    }
    Ok(())
}

/// Scans an ascending grid until the first failed step and returns the
/// certificate with the largest margin, together with the evaluation's
/// uncertainty at that step.
fn best_certificate(
    tag: NormTag,
    x: &BipartiteOperator,
    f0: f64,
    u: &BipartiteOperator,
    grid: &[f64],
) -> Result<Option<(DescentCertificate, f64)>> {
    check_inputs(x, f0, u, grid)?;
    let mut best: Option<(DescentCertificate, f64)> = None;
    for &tau in grid {
        let ev = evaluate(tag, &offset(x, u, tau))?;
        let margin = f0 - ev.value;
        if margin < -tolerance(f0) {
            break;
        }
        if best.as_ref().is_none_or(|(c, _)| margin > c.margin) {
            let cert = DescentCertificate { base: x.clone(), direction: u.clone(), tau, tag, margin };
            best = Some((cert, ev.uncertainty));
        }
    }
    Ok(best)
}

/// Orthogonal projection onto the tangent space of the rank-`r` manifold at
/// `X`: `P_C G + G P_R − P_C G P_R`.
pub fn tangent_projection(x: &ComplexMatrix, g: &ComplexMatrix) -> Result<ComplexMatrix> {
    let s = svd(x)?;
    let r = s.rank(RANK_TOL);
    let uc = s.u.columns(0, r);
    let vc = s.v.columns(0, r);
    let pc = uc * uc.adjoint();
    let pr = vc * vc.adjoint();
    Ok(&pc * g + g * &pr - &pc * g * &pr)
}

/// Direction sampler: alternately a plain Gaussian `G` and the tangent-biased
/// mix `½G + ½P_T(G)`, each shifted inward by `−s·‖g‖F·X/‖X‖F` with
/// `s ∈ [0, 3)` so that a good share of samples lands in the descent cones.
pub struct DirectionSampler {
    base: BipartiteOperator,
    k: usize,
}

impl DirectionSampler {
    pub fn new(base: &BipartiteOperator) -> Self {
        Self { base: base.clone(), k: 0 }
    }

    pub fn sample(&mut self, rng: &mut Rng) -> Result<BipartiteOperator> {
        let n = self.base.dim();
        let g = complex_gaussian_matrix(rng, n, n);
        let g = if self.k % 2 == 1 { (&g + tangent_projection(&self.base.mat, &g)?) * cr(0.5) } else { g };
        self.k += 1;
        let s: f64 = rng.random_range(0.0..3.0);
        let unit_x = &self.base.mat * cr(1.0 / frobenius(&self.base.mat));
        let mat = &g - unit_x * cr(s * frobenius(&g));
        Ok(BipartiteOperator { mat, dim_w: self.base.dim_w, dim_v: self.base.dim_v })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContainmentReport {
    pub samples: usize,
    /// Sampled directions with a square-norm certificate.
    pub square_descent: usize,
    /// Of those, the ones also certified for the nuclear norm.
    pub nuclear_descent: usize,
    /// Active sandwiches `(A, B)` checked in addition to `A = B = 1`.
    pub sandwiches: usize,
    /// Square-norm descent directions failing a sandwiched nuclear norm.
    pub violations: usize,
}

/// Samples directions at an extremal `X` and checks that every square-norm
/// descent direction also descends `‖(1⊗A)(·)(1⊗B)‖₁` for `A = B = 1` and
/// for `sandwiches` random unitary pairs (`‖A‖F = ‖B‖F = √dimV`, all
/// active at extremal points).
pub fn cone_containment_check(
    x: &BipartiteOperator,
    samples: usize,
    sandwiches: usize,
    rng: &mut Rng,
) -> Result<ContainmentReport> {
    let ext = extremality_check(x, EXTREMALITY_TOL)?;
    if !ext.extremal || x.nuclear_norm() <= 0.0 {
        return Err(Error::precondition(format!("base point is not extremal (residual {:.3e})", ext.residual)));
    }
    let dv = x.dim_v;
    let mut pairs = vec![(identity(dv), identity(dv))];
    pairs.extend((0..sandwiches).map(|_| (random_unitary(dv, rng), random_unitary(dv, rng))));
    let f0 = evaluate(NormTag::Square, x)?;
    for (a, b) in &pairs {
        let s = sandwiched_nuclear(x, a, b);
        if (s - f0.value).abs() > 1e-6 * (1.0 + f0.value) {
            return Err(Error::NumericBreakdown(format!("sandwich not active: {s} vs {}", f0.value)));
        }
    }
    let mut sampler = DirectionSampler::new(x);
    let mut report = ContainmentReport { samples, square_descent: 0, nuclear_descent: 0, sandwiches, violations: 0 };
    let scale = frobenius(&x.mat);
    for _ in 0..samples {
        let u = sampler.sample(rng)?;
        // Square-norm programs within ~1e-3 of an extremal point are badly
        // conditioned for the splitting solver, so only steps beyond that
        // radius are tried. Directions that leave the sublevel set earlier
        // are near-tangent and simply go unsampled.
        let start = 1e-3 * scale / frobenius(&u.mat);
        let grid: Vec<f64> = default_tau_grid().into_iter().filter(|&t| t >= start).collect();
        let Some((cert, uncertainty)) = best_certificate(NormTag::Square, x, f0.value, &u, &grid)? else {
            continue;
        };
        report.square_descent += 1;
        let p = cert.point();
        let mut ok_all = true;
        for (i, (a, b)) in pairs.iter().enumerate() {
            let base = sandwiched_nuclear(x, a, b);
            // the square value may undercut the true norm by its duality gap
            let ok = sandwiched_nuclear(&p, a, b) <= base + tolerance(base) + uncertainty;
            if i == 0 && ok {
                report.nuclear_descent += 1;
            }
            ok_all &= ok;
        }
        if !ok_all {
            debug!("containment violation at τ = {:.3e}, ‖X+τu‖₁ = {}", cert.tau, nuclear_norm(&p.mat));
            report.violations += 1;
        }
    }
    Ok(report)
}

fn check_projector(p: &ComplexMatrix, name: &str) -> Result<()> {
    if !p.is_square() {
        return Err(Error::shape(format!("{name} is not square")));
    }
    let scale = 1.0 + frobenius(p);
    let idem = frobenius(&(p * p - p));
    if !is_hermitian(p) || frobenius(&(p - p.adjoint())) > PROJECTOR_TOL * scale || idem > PROJECTOR_TOL * scale {
        return Err(Error::precondition(format!(
            "{name} is not an orthogonal projector (‖P² − P‖F = {idem:.3e})"
        )));
    }
    Ok(())
}

/// `‖Z‖_p^p − (‖PZQ‖_p^p + ‖P⊥ZQ⊥‖_p^p)` for `p ∈ {1, 2}`; nonnegative by
/// the pinching inequality.
pub fn pinching_check(z: &ComplexMatrix, p: &ComplexMatrix, q: &ComplexMatrix, schatten: Schatten) -> Result<f64> {
    check_projector(p, "P")?;
    check_projector(q, "Q")?;
    if p.nrows() != z.nrows() || q.nrows() != z.ncols() {
        return Err(Error::shape("projector sizes do not match Z"));
    }
    let power = match schatten {
        Schatten::One => 1,
        Schatten::Two => 2,
        Schatten::Inf => return Err(Error::precondition("pinching is checked for p = 1 and p = 2 only")),
    };
    let norm_p = |m: &ComplexMatrix| schatten_norm(m, schatten).powi(power);
    let pc = identity(p.nrows()) - p;
    let qc = identity(q.nrows()) - q;
    Ok(norm_p(z) - norm_p(&(p * z * q)) - norm_p(&(&pc * z * &qc)))
}

/// Projector onto a Haar-random `rank`-dimensional subspace of `ℂⁿ`.
pub fn random_projector(n: usize, rank: usize, rng: &mut Rng) -> Result<ComplexMatrix> {
    if rank > n {
        return Err(Error::precondition(format!("rank {rank} exceeds dimension {n}")));
    }
    let u = random_unitary(n, rng);
    let cols = u.columns(0, rank);
    Ok(cols * cols.adjoint())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankBoundReport {
    pub rank: usize,
    pub samples: usize,
    pub descent: usize,
    pub max_ratio: f64,
    /// `(1 + √2)·√r`.
    pub bound: f64,
}

impl RankBoundReport {
    pub fn holds(&self) -> bool {
        self.max_ratio <= self.bound + 1e-6
    }
}

/// Largest `‖Y‖₁/‖Y‖F` over sampled nuclear-norm descent directions `Y` at
/// `X`, against the bound `(1 + √2)√r`.
pub fn effective_rank_bound_check(x: &BipartiteOperator, samples: usize, rng: &mut Rng) -> Result<RankBoundReport> {
    let rank = svd(&x.mat)?.rank(RANK_TOL);
    if rank == 0 {
        return Err(Error::precondition("base point is zero"));
    }
    let grid = default_tau_grid();
    let f0 = nuclear_norm(&x.mat);
    let mut sampler = DirectionSampler::new(x);
    let mut report =
        RankBoundReport { rank, samples, descent: 0, max_ratio: 0.0, bound: (1.0 + 2f64.sqrt()) * (rank as f64).sqrt() };
    for _ in 0..samples {
        let u = sampler.sample(rng)?;
        if descent_from(NormTag::Nuclear, x, f0, &u, &grid)?.is_some() {
            report.descent += 1;
            report.max_ratio = report.max_ratio.max(nuclear_norm(&u.mat) / frobenius(&u.mat));
        }
    }
    Ok(report)
}

/// Smallest `‖𝒜(u)‖₂/‖u‖F` over sampled directions with a descent
/// certificate. Sampling only ever finds an upper bound on the minimum
/// conic singular value; `None` if no sample descended.
pub fn conic_singular_value_upper_bound(
    e: &MeasurementEnsemble,
    tag: NormTag,
    x: &BipartiteOperator,
    samples: usize,
    rng: &mut Rng,
) -> Result<Option<f64>> {
    let grid = default_tau_grid();
    let f0 = evaluate(tag, x)?.value;
    let mut sampler = DirectionSampler::new(x);
    let mut best: Option<f64> = None;
    for _ in 0..samples {
        let u = sampler.sample(rng)?;
        if descent_from(tag, x, f0, &u, &grid)?.is_some() {
            let ratio = vector_norm(&apply_measurement(e, &u)?) / frobenius(&u.mat);
            best = Some(best.map_or(ratio, |b| b.min(ratio)));
        }
    }
    Ok(best)
}

/// Outcome of one named check in a suite.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

pub const SUITES: [&str; 5] = ["descent", "pinching", "rank_bound", "containment", "all"];

/// Runs a named batch of sampled checks (see [`SUITES`]).
pub fn run_suite(name: &str, seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = seeded(seed);
    let mut out = Vec::new();
    let all = name == "all";
    if !SUITES.contains(&name) {
        return Err(Error::config(format!("unknown suite {name:?}; expected one of {SUITES:?}")));
    }
    if all || name == "descent" {
        let x = unitary_pair_map(&random_unitary(2, &mut rng), &random_unitary(2, &mut rng))?.choi;
        for tag in [NormTag::Nuclear, NormTag::Square] {
            let inward = is_descent_direction(tag, &x, &x.scaled(-1.0), &[1.0])?;
            let outward = is_descent_direction(tag, &x, &x, &default_tau_grid())?;
            out.push(CheckResult {
                name: format!("descent/{tag:?}"),
                passed: inward.is_some_and(|c| c.recheck().unwrap_or(false)) && outward.is_none(),
                detail: "u = −X descends at τ = 1, u = X never".into(),
            });
        }
    }
    if all || name == "pinching" {
        let mut worst = f64::INFINITY;
        for i in 0..500 {
            let n = 2 + i % 4;
            let z = complex_gaussian_matrix(&mut rng, n, n);
            let p = random_projector(n, rng.random_range(0..=n), &mut rng)?;
            let q = random_projector(n, rng.random_range(0..=n), &mut rng)?;
            let schatten = if i % 2 == 0 { Schatten::One } else { Schatten::Two };
            worst = worst.min(pinching_check(&z, &p, &q, schatten)?);
        }
        out.push(CheckResult { name: "pinching".into(), passed: worst >= -1e-9, detail: format!("min slack {worst:.3e}") });
    }
    if all || name == "rank_bound" {
        for r in [1, 2] {
            let x = random_rank(4, r, &mut rng)?;
            let rep = effective_rank_bound_check(&x, 500, &mut rng)?;
            out.push(CheckResult {
                name: format!("rank_bound/r={r}"),
                passed: rep.holds() && rep.descent > 0,
                detail: format!("max ratio {:.4} ≤ {:.4} over {} descent directions", rep.max_ratio, rep.bound, rep.descent),
            });
        }
    }
    if all || name == "containment" {
        for n in [2, 3] {
            let x = unitary_pair_map(&random_unitary(n, &mut rng), &random_unitary(n, &mut rng))?.choi;
            let rep = cone_containment_check(&x, 50, 2, &mut rng)?;
            out.push(CheckResult {
                name: format!("containment/n={n}"),
                passed: rep.violations == 0 && rep.square_descent > 0,
                detail: format!("{} of {} samples descend the square norm, {} violations", rep.square_descent, rep.samples, rep.violations),
            });
        }
    }
    Ok(out)
}

/// Unit-Frobenius rank-`r` complex operator on `ℂ^d ⊗ ℂ^d` with `d² = n`.
pub fn random_rank(n_sq: usize, r: usize, rng: &mut Rng) -> Result<BipartiteOperator> {
    let d = (n_sq as f64).sqrt().round() as usize;
    if d * d != n_sq {
        return Err(Error::shape(format!("{n_sq} is not a square dimension")));
    }
    let a = complex_gaussian_matrix(rng, n_sq, r);
    let b = complex_gaussian_matrix(rng, n_sq, r);
    let m = &a * b.adjoint();
    let f = frobenius(&m);
    BipartiteOperator::new(m * cr(1.0 / f), d, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choi::random_channel;
    use crate::linalg::zeros;

    fn unitary_pair(n: usize, rng: &mut Rng) -> BipartiteOperator {
        unitary_pair_map(&random_unitary(n, rng), &random_unitary(n, rng)).unwrap().choi
    }

    /// Directional derivative of the nuclear norm at `X`:
    /// `Re Tr(S† u) + ‖P_C⊥ u P_R⊥‖₁` with `S = U_r V_r†`.
    fn nuclear_derivative(x: &ComplexMatrix, u: &ComplexMatrix) -> f64 {
        let s = svd(x).unwrap();
        let r = s.rank(RANK_TOL);
        let n = x.nrows();
        let (ur, vr) = (s.u.columns(0, r), s.v.columns(0, r));
        let sign = ur * vr.adjoint();
        let pc = identity(n) - ur * ur.adjoint();
        let pr = identity(n) - vr * vr.adjoint();
        (sign.adjoint() * u).trace().re + nuclear_norm(&(pc * u * pr))
    }

    #[test]
    fn grid_is_geometric_and_spans_the_range() {
        let g = default_tau_grid();
        assert_eq!(g.len(), 24);
        assert!((g[0] - 1e-6).abs() < 1e-18 && (g[23] - 1e2).abs() < 1e-10);
        let ratio = g[1] / g[0];
        assert!(g.windows(2).all(|w| (w[1] / w[0] - ratio).abs() < 1e-9));
    }

    #[test]
    fn inward_ray_descends_outward_ray_does_not() {
        let mut rng = seeded(1);
        let x = random_rank(4, 1, &mut rng).unwrap();
        for tag in [NormTag::Nuclear, NormTag::Square] {
            let c = is_descent_direction(tag, &x, &x.scaled(-1.0), &[1.0]).unwrap().unwrap();
            assert_eq!(c.tau, 1.0);
            assert!((c.margin - evaluate(tag, &x).unwrap().value).abs() < 1e-6);
            assert!(c.recheck().unwrap());
            assert!(is_descent_direction(tag, &x, &x, &default_tau_grid()).unwrap().is_none());
            assert!(is_descent_direction(tag, &x, &x.scaled(-1.0), &default_tau_grid()).unwrap().is_some());
        }
    }

    #[test]
    fn zero_base_point_and_bad_grids_are_rejected() {
        let z = BipartiteOperator::zeros(2, 2);
        let u = BipartiteOperator::new(identity(4), 2, 2).unwrap();
        assert!(is_descent_direction(NormTag::Nuclear, &z, &u, &[1.0]).is_err());
        assert!(is_descent_direction(NormTag::Nuclear, &u, &u, &[0.0]).is_err());
        let other = BipartiteOperator::new(identity(4), 1, 4).unwrap();
        assert!(is_descent_direction(NormTag::Nuclear, &u, &other, &[1.0]).is_err());
    }

    #[test]
    fn nuclear_membership_matches_derivative_and_dense_grid() {
        let mut rng = seeded(2);
        let x = random_rank(4, 1, &mut rng).unwrap();
        let mut sampler = DirectionSampler::new(&x);
        let dense: Vec<f64> = (0..2000).map(|i| 1e-6 * 1e8f64.powf(i as f64 / 1999.0)).collect();
        let f0 = nuclear_norm(&x.mat);
        let mut compared = 0;
        for _ in 0..300 {
            let u = sampler.sample(&mut rng).unwrap();
            let d = nuclear_derivative(&x.mat, &u.mat);
            let fast = is_descent_direction(NormTag::Nuclear, &x, &u, &default_tau_grid()).unwrap().is_some();
            let brute = dense.iter().any(|&t| nuclear_norm(&offset(&x, &u, t).mat) <= f0 + tolerance(f0));
            assert_eq!(fast, brute, "derivative {d}");
            if d.abs() > 1e-2 * frobenius(&u.mat) {
                assert_eq!(fast, d < 0.0, "derivative {d}");
                compared += 1;
            }
        }
        assert!(compared > 200);
    }

    #[test]
    fn certificates_recheck_and_reject_tampering() {
        let mut rng = seeded(3);
        let x = unitary_pair(2, &mut rng);
        let mut sampler = DirectionSampler::new(&x);
        let mut found = 0;
        for _ in 0..20 {
            let u = sampler.sample(&mut rng).unwrap();
            let grid: Vec<f64> = default_tau_grid().into_iter().filter(|&t| t >= 1e-3).collect();
            if let Some(mut c) = is_descent_direction(NormTag::Square, &x, &u, &grid).unwrap() {
                assert!(c.recheck().unwrap());
                c.direction = c.direction.scaled(-1.0);
                c.tau = 1.0;
                assert!(!c.recheck().unwrap());
                found += 1;
            }
        }
        assert!(found > 0);
    }

    #[test]
    fn containment_holds_at_unitary_pairs() {
        let mut rng = seeded(4);
        for n in [2, 3] {
            let x = unitary_pair(n, &mut rng);
            let rep = cone_containment_check(&x, 40, 2, &mut rng).unwrap();
            assert_eq!(rep.violations, 0, "{rep:?}");
            assert!(rep.square_descent >= 5, "{rep:?}");
            assert_eq!(rep.nuclear_descent, rep.square_descent);
        }
    }

    #[test]
    fn containment_requires_extremal_points() {
        let mut rng = seeded(5);
        let x = random_rank(4, 1, &mut rng).unwrap();
        assert!(matches!(cone_containment_check(&x, 5, 0, &mut rng), Err(Error::Precondition(_))));
        // Choi matrices of channels are PSD with flat partial trace, hence extremal
        let ch = random_channel(2, 2, 2, &mut rng).unwrap().choi;
        assert!(cone_containment_check(&ch, 2, 0, &mut rng).is_ok());
    }

    #[test]
    fn pinching_equality_cases_and_random_slack() {
        let mut rng = seeded(6);
        let z = complex_gaussian_matrix(&mut rng, 4, 4);
        let one = identity(4);
        let zero = zeros(4, 4);
        for p in [Schatten::One, Schatten::Two] {
            assert!(pinching_check(&z, &one, &one, p).unwrap().abs() < 1e-12);
            assert!(pinching_check(&z, &zero, &zero, p).unwrap().abs() < 1e-12);
        }
        for i in 0..200 {
            let n = 2 + i % 3;
            let z = complex_gaussian_matrix(&mut rng, n, n);
            let p = random_projector(n, i % (n + 1), &mut rng).unwrap();
            let q = random_projector(n, (i / 2) % (n + 1), &mut rng).unwrap();
            assert!(pinching_check(&z, &p, &q, Schatten::One).unwrap() >= -1e-9);
            assert!(pinching_check(&z, &p, &q, Schatten::Two).unwrap() >= -1e-9);
        }
    }

    #[test]
    fn pinching_rejects_non_projectors() {
        let z = identity(2);
        let bad = identity(2) * cr(0.5);
        assert!(matches!(pinching_check(&z, &bad, &z, Schatten::One), Err(Error::Precondition(_))));
        assert!(pinching_check(&z, &z, &z, Schatten::Inf).is_err());
    }

    #[test]
    fn rank_bound_holds_and_inward_direction_is_tight_enough() {
        let mut rng = seeded(7);
        for r in [1, 2, 4] {
            let x = random_rank(4, r, &mut rng).unwrap();
            let rep = effective_rank_bound_check(&x, 200, &mut rng).unwrap();
            assert_eq!(rep.rank, r);
            assert!(rep.holds(), "{rep:?}");
            assert!(rep.descent > 20);
            let inward = nuclear_norm(&x.mat) / frobenius(&x.mat);
            assert!(inward <= (r as f64).sqrt() + 1e-9);
        }
    }

    #[test]
    fn conic_singular_value_bound_is_positive_for_complete_measurements() {
        use crate::measure::gaussian_ensemble;
        use crate::rng::Field;
        let mut rng = seeded(8);
        let x = random_rank(4, 1, &mut rng).unwrap();
        let e = gaussian_ensemble(40, (2, 2), Field::Complex, &mut rng).unwrap();
        let v = conic_singular_value_upper_bound(&e, NormTag::Nuclear, &x, 50, &mut rng).unwrap().unwrap();
        assert!(v > 0.0);
        let few = gaussian_ensemble(2, (2, 2), Field::Complex, &mut rng).unwrap();
        let w = conic_singular_value_upper_bound(&few, NormTag::Nuclear, &x, 50, &mut rng).unwrap().unwrap();
        assert!(w < v);
    }

    #[test]
    fn suites_run_and_pass() {
        for name in ["descent", "pinching"] {
            let res = run_suite(name, 11).unwrap();
            assert!(!res.is_empty());
            assert!(res.iter().all(|c| c.passed), "{res:?}");
        }
        assert!(run_suite("nope", 1).is_err());
    }
}
