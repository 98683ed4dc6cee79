//! Measurement ensembles `𝒜(X)_i = Tr(F_i† X)` acting on Choi matrices.
//!
//! Every ensemble is materialized as explicit functionals `F_i` in Choi
//! coordinates; structured ensembles also keep their factored description
//! so outcomes can be recomputed through the map itself.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::choi::{random_group_element, unitary_pair_map, OperatorMap, UnitaryGroup};
use crate::error::{Error, Result};
use crate::linalg::{
    c, cr, from_real_diag, inner, kron, outer, trace, BipartiteOperator, ComplexMatrix,
    ComplexVector,
};
use crate::rng::{gaussian_matrix, gaussian_vector, seeded, unit_vector, Field, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    GaussianReal,
    GaussianComplex,
    RankOneGaussian,
    StructuredUdv,
    ProcessTomo,
    Deconv,
    /// Functionals supplied directly rather than drawn from a seed.
    Explicit,
}

/// Seeded description of an ensemble; `materialize` is bit-reproducible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub m: usize,
    /// `[dimW, dimV]`.
    pub dims: [usize; 2],
    pub seed: u64,
    /// Structured ensemble: draw `U_j, V_j` (and `x_j, y_j`) over this group.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<UnitaryGroup>,
    /// Deconvolution: number of input pairs `(h, m)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
}

impl EnsembleSpec {
    pub fn materialize(&self) -> Result<MeasurementEnsemble> {
        let mut rng = seeded(self.seed);
        let [dw, dv] = self.dims;
        let mut e = match self.kind {
            EnsembleKind::GaussianReal => gaussian_ensemble(self.m, (dw, dv), Field::Real, &mut rng)?,
            EnsembleKind::GaussianComplex => {
                gaussian_ensemble(self.m, (dw, dv), Field::Complex, &mut rng)?
            }
            EnsembleKind::RankOneGaussian => rank_one_gaussian_ensemble(self.m, (dw, dv), &mut rng)?,
            EnsembleKind::StructuredUdv => {
                if dw != dv {
                    return Err(Error::config("structured ensemble needs dimW = dimV"));
                }
                structured_ensemble(self.m, dv, &mut rng, self.group.unwrap_or_default())?
            }
            EnsembleKind::ProcessTomo => process_tomo_ensemble(self.m, (dw, dv), &mut rng)?,
            EnsembleKind::Deconv => {
                if dw != dv {
                    return Err(Error::config("deconvolution ensemble needs dimW = dimV"));
                }
                let q = self.q.ok_or_else(|| Error::config("deconv ensemble needs q"))?;
                if q == 0 {
                    return Err(Error::config("q must be positive"));
                }
                let l = self.m.div_ceil(q);
                let mut e = deconv_ensemble(dv, l, q, &mut rng)?;
                e.truncate(self.m)?;
                e
            }
            EnsembleKind::Explicit => {
                return Err(Error::config("explicit ensembles cannot be drawn from a seed"))
            }
        };
        e.seed = Some(self.seed);
        Ok(e)
    }
}

/// The diagonal `(2/n)(1, −1, 2, −2, …, n/2, −n/2)` for even `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalD {
    pub values: Vec<f64>,
}

impl DiagonalD {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n % 2 == 1 {
            return Err(Error::precondition(format!("DiagonalD needs an even dimension, got {n}")));
        }
        Ok(Self { values: alternating_spectrum(n, 2.0 / n as f64) })
    }

    /// Evenly spaced spectrum `k/(n−1)`, `k = 0..n`, in `[0, 1]` (`[1]` for
    /// `n = 1`). Non-degenerate with nonzero trace: a traceless observable
    /// cannot see the `1 ⊗ R` component of a Choi matrix, i.e. the
    /// trace-preservation direction.
    pub fn graded(n: usize) -> Self {
        if n <= 1 {
            return Self { values: vec![1.0; n] };
        }
        Self { values: (0..n).map(|k| k as f64 / (n - 1) as f64).collect() }
    }

    pub fn matrix(&self) -> ComplexMatrix {
        from_real_diag(&self.values)
    }
}

fn alternating_spectrum(n: usize, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let mag = (k / 2 + 1) as f64;
            if k % 2 == 0 { mag * scale } else { -mag * scale }
        })
        .collect()
}

/// Factored description retained for independent re-evaluation.
#[derive(Clone, Debug, PartialEq)]
pub enum Factors {
    /// Outcome `Tr(A_i X)` on the Choi matrix directly.
    Matrices { a: Vec<ComplexMatrix> },
    /// Outcome `a_i† X a_i`.
    RankOne { a: Vec<ComplexVector> },
    /// Outcome `Tr(A_j M(x_j y_j†))`.
    Structured { x: Vec<ComplexVector>, y: Vec<ComplexVector>, a: Vec<ComplexMatrix> },
    /// Outcome `Tr(A_j M(ψ_j ψ_j†))`.
    ProcessTomo { psi: Vec<ComplexVector>, a: Vec<ComplexMatrix> },
    /// Outcome `Tr(E_l M(h_q m_qᵀ))` for the listed `(l, q)` pairs.
    Deconv {
        b: ComplexMatrix,
        c: ComplexMatrix,
        h: Vec<ComplexVector>,
        m: Vec<ComplexVector>,
        pairs: Vec<(usize, usize)>,
    },
    None,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementEnsemble {
    pub kind: EnsembleKind,
    pub dim_w: usize,
    pub dim_v: usize,
    pub seed: Option<u64>,
    /// `F_i` with outcome `Tr(F_i† X)`.
    pub functionals: Vec<ComplexMatrix>,
    pub factors: Factors,
}

impl MeasurementEnsemble {
    pub fn from_functionals(dim_w: usize, dim_v: usize, functionals: Vec<ComplexMatrix>) -> Result<Self> {
        if functionals.is_empty() {
            return Err(Error::precondition("ensemble needs at least one functional"));
        }
        let n = dim_w * dim_v;
        if functionals.iter().any(|f| f.shape() != (n, n)) {
            return Err(Error::shape(format!("functionals must be {n}×{n}")));
        }
        Ok(Self {
            kind: EnsembleKind::Explicit,
            dim_w,
            dim_v,
            seed: None,
            functionals,
            factors: Factors::None,
        })
    }

    pub fn m(&self) -> usize {
        self.functionals.len()
    }

    pub fn dim(&self) -> usize {
        self.dim_w * self.dim_v
    }

    /// True when every functional is real, so real signals give real outcomes.
    pub fn is_real(&self) -> bool {
        self.functionals.iter().all(|f| f.iter().all(|z| z.im == 0.0))
    }

    /// Keeps the first `m` functionals.
    pub fn truncate(&mut self, m: usize) -> Result<()> {
        if m == 0 || m > self.m() {
            return Err(Error::precondition(format!("cannot truncate {} functionals to {m}", self.m())));
        }
        self.functionals.truncate(m);
        match &mut self.factors {
            Factors::Matrices { a } | Factors::ProcessTomo { a, .. } => a.truncate(m),
            Factors::RankOne { a } => a.truncate(m),
            Factors::Structured { x, y, a } => {
                x.truncate(m);
                y.truncate(m);
                a.truncate(m);
            }
            Factors::Deconv { pairs, .. } => pairs.truncate(m),
            Factors::None => {}
        }
        if let Factors::ProcessTomo { psi, .. } = &mut self.factors {
            psi.truncate(m);
        }
        Ok(())
    }

    /// Evaluates the outcomes through the factored description, calling the
    /// map on each input state rather than using the Choi functionals.
    pub fn apply_factored(&self, map: &OperatorMap) -> Result<Vec<Complex64>> {
        self.check_dims(map.dim_w(), map.dim_v())?;
        let x = &map.choi.mat;
        match &self.factors {
            Factors::Matrices { a } => Ok(a.iter().map(|ai| trace(&(ai * x))).collect()),
            Factors::RankOne { a } => Ok(a.iter().map(|ai| (ai.adjoint() * x * ai)[(0, 0)]).collect()),
            Factors::Structured { x: xs, y: ys, a } => xs
                .iter()
                .zip(ys)
                .zip(a)
                .map(|((xj, yj), aj)| Ok(trace(&(aj * map.apply(&outer(xj, yj))?))))
                .collect(),
            Factors::ProcessTomo { psi, a } => psi
                .iter()
                .zip(a)
                .map(|(p, aj)| Ok(trace(&(aj * map.apply(&outer(p, p))?))))
                .collect(),
            Factors::Deconv { b, c, h, m, pairs } => {
                let l_len = b.nrows();
                let f = fourier_matrix(l_len);
                let (fb, fc) = (&f * b, &f * c);
                pairs
                    .iter()
                    .map(|&(l, q)| {
                        let e = deconv_e(&fb, &fc, l);
                        let rho = h[q].clone() * m[q].transpose();
                        Ok(trace(&(e * map.apply(&rho)?)))
                    })
                    .collect()
            }
            Factors::None => Err(Error::precondition("ensemble has no factored form")),
        }
    }

    fn check_dims(&self, dim_w: usize, dim_v: usize) -> Result<()> {
        if (dim_w, dim_v) != (self.dim_w, self.dim_v) {
            return Err(Error::shape(format!(
                "signal is {dim_w}⊗{dim_v}, ensemble expects {}⊗{}",
                self.dim_w, self.dim_v
            )));
        }
        Ok(())
    }
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::precondition("an ensemble needs m ≥ 1"));
    }
    Ok(())
}

/// Gaussian ensemble: `A_i` with i.i.d. standard normal entries (real and
/// imaginary parts independent for the complex field); outcome `Tr(A_i X)`.
pub fn gaussian_ensemble(m: usize, dims: (usize, usize), field: Field, rng: &mut Rng) -> Result<MeasurementEnsemble> {
    check_m(m)?;
    let (dw, dv) = dims;
    let n = dw * dv;
    let a: Vec<ComplexMatrix> = (0..m).map(|_| gaussian_matrix(rng, n, n, field)).collect();
    let kind = match field {
        Field::Real => EnsembleKind::GaussianReal,
        Field::Complex => EnsembleKind::GaussianComplex,
    };
    Ok(MeasurementEnsemble {
        kind,
        dim_w: dw,
        dim_v: dv,
        seed: None,
        functionals: a.iter().map(|ai| ai.adjoint()).collect(),
        factors: Factors::Matrices { a },
    })
}

/// `A_i = a_i a_i†` with complex Gaussian `a_i`.
pub fn rank_one_gaussian_ensemble(m: usize, dims: (usize, usize), rng: &mut Rng) -> Result<MeasurementEnsemble> {
    check_m(m)?;
    let (dw, dv) = dims;
    let a: Vec<ComplexVector> = (0..m).map(|_| gaussian_vector(rng, dw * dv, Field::Complex)).collect();
    Ok(MeasurementEnsemble {
        kind: EnsembleKind::RankOneGaussian,
        dim_w: dw,
        dim_v: dv,
        seed: None,
        functionals: a.iter().map(|ai| outer(ai, ai)).collect(),
        factors: Factors::RankOne { a },
    })
}

/// Functional of `M ↦ Tr(A M(ρ))` in Choi coordinates: `F = (A ⊗ ρᵀ)†`.
fn map_functional(a: &ComplexMatrix, rho: &ComplexMatrix) -> ComplexMatrix {
    kron(a, &rho.transpose()).adjoint()
}

/// Structured ensemble on maps `L(ℂⁿ) → L(ℂⁿ)`: outcome `Tr(A_j M(x_j y_j†))`
/// with unit `x_j, y_j` and `A_j = U_j D V_j`. For the orthogonal group the
/// vectors are drawn from the real unit sphere.
pub fn structured_ensemble(m: usize, n: usize, rng: &mut Rng, group: UnitaryGroup) -> Result<MeasurementEnsemble> {
    check_m(m)?;
    let d = DiagonalD::new(n)?.matrix();
    let field = match group {
        UnitaryGroup::Orthogonal => Field::Real,
        UnitaryGroup::Unitary => Field::Complex,
    };
    let (mut xs, mut ys, mut as_) = (Vec::with_capacity(m), Vec::with_capacity(m), Vec::with_capacity(m));
    for _ in 0..m {
        let x = unit_vector(rng, n, field);
        let y = unit_vector(rng, n, field);
        let u = random_group_element(n, group, rng);
        let v = random_group_element(n, group, rng);
        xs.push(x);
        ys.push(y);
        as_.push(u * &d * v);
    }
    let functionals = xs
        .iter()
        .zip(&ys)
        .zip(&as_)
        .map(|((x, y), a)| map_functional(a, &outer(x, y)))
        .collect();
    Ok(MeasurementEnsemble {
        kind: EnsembleKind::StructuredUdv,
        dim_w: n,
        dim_v: n,
        seed: None,
        functionals,
        factors: Factors::Structured { x: xs, y: ys, a: as_ },
    })
}

/// Process tomography: pure input `ψ_j` and observable `A_j = U_j D U_j†`,
/// with `D` the graded spectrum of [`DiagonalD::graded`].
pub fn process_tomo_ensemble(m: usize, dims: (usize, usize), rng: &mut Rng) -> Result<MeasurementEnsemble> {
    check_m(m)?;
    let (dw, dv) = dims;
    let d = DiagonalD::graded(dw).matrix();
    let (mut psis, mut as_) = (Vec::with_capacity(m), Vec::with_capacity(m));
    for _ in 0..m {
        psis.push(unit_vector(rng, dv, Field::Complex));
        let u = random_group_element(dw, UnitaryGroup::Unitary, rng);
        as_.push(&u * &d * u.adjoint());
    }
    let functionals = psis.iter().zip(&as_).map(|(p, a)| map_functional(a, &outer(p, p))).collect();
    Ok(MeasurementEnsemble {
        kind: EnsembleKind::ProcessTomo,
        dim_w: dw,
        dim_v: dv,
        seed: None,
        functionals,
        factors: Factors::ProcessTomo { psi: psis, a: as_ },
    })
}

/// `F_{jk} = e^{2πi jk/L}/√L` (zero-based).
pub fn fourier_matrix(l: usize) -> ComplexMatrix {
    let s = 1.0 / (l as f64).sqrt();
    ComplexMatrix::from_fn(l, l, |j, k| {
        let phase = 2.0 * std::f64::consts::PI * ((j * k) % l) as f64 / l as f64;
        c(phase.cos() * s, phase.sin() * s)
    })
}

/// `y_i = Σ_j w_j x_{(i−j) mod L}`.
pub fn circular_convolution(w: &ComplexVector, x: &ComplexVector) -> Result<ComplexVector> {
    let l = w.len();
    if x.len() != l {
        return Err(Error::shape(format!("convolution of lengths {l} and {}", x.len())));
    }
    Ok(ComplexVector::from_fn(l, |i, _| (0..l).map(|j| w[j] * x[(i + l - j) % l]).sum()))
}

/// `E_l = ĉ_lᵀ b̂_l` from the rows of `FB` and `FC`.
fn deconv_e(fb: &ComplexMatrix, fc: &ComplexMatrix, l: usize) -> ComplexMatrix {
    fc.row(l).transpose() * fb.row(l)
}

/// Blind matrix deconvolution with length-`L` signals and `Q` input pairs.
///
/// `B, C` are real Gaussian `L×N`, `h_q, m_q` real Gaussian in `ℝᴺ`.
/// Functional `(l, q)` (enumerated with `q` fastest) evaluates
/// `Tr(E_l M(h_q m_qᵀ))`, which for `M(X) = U X Vᵀ` equals
/// `(F B U h_q)_l · (F C V m_q)_l`, the `l`-th Fourier coefficient of the
/// circular convolution of `B U h_q` and `C V m_q` divided by `√L`.
pub fn deconv_ensemble(n: usize, l: usize, q: usize, rng: &mut Rng) -> Result<MeasurementEnsemble> {
    if n == 0 || l == 0 || q == 0 {
        return Err(Error::precondition("deconvolution needs N, L, Q ≥ 1"));
    }
    let b = gaussian_matrix(rng, l, n, Field::Real);
    let cm = gaussian_matrix(rng, l, n, Field::Real);
    let hs: Vec<ComplexVector> = (0..q).map(|_| gaussian_vector(rng, n, Field::Real)).collect();
    let ms: Vec<ComplexVector> = (0..q).map(|_| gaussian_vector(rng, n, Field::Real)).collect();
    let f = fourier_matrix(l);
    let (fb, fc) = (&f * &b, &f * &cm);
    let pairs: Vec<(usize, usize)> = (0..l).flat_map(|li| (0..q).map(move |qi| (li, qi))).collect();
    let functionals = pairs
        .iter()
        .map(|&(li, qi)| map_functional(&deconv_e(&fb, &fc, li), &(hs[qi].clone() * ms[qi].transpose())))
        .collect();
    Ok(MeasurementEnsemble {
        kind: EnsembleKind::Deconv,
        dim_w: n,
        dim_v: n,
        seed: None,
        functionals,
        factors: Factors::Deconv { b, c: cm, h: hs, m: ms, pairs },
    })
}

/// The map `X ↦ U X Vᵀ` whose Choi matrix the deconvolution experiment recovers.
pub fn deconv_truth(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<OperatorMap> {
    unitary_pair_map(u, &v.transpose())
}

/// `𝒜(X)_i = Tr(F_i† X)`.
pub fn apply_measurement(e: &MeasurementEnsemble, x: &BipartiteOperator) -> Result<Vec<Complex64>> {
    e.check_dims(x.dim_w, x.dim_v)?;
    Ok(e.functionals.iter().map(|f| inner(f, &x.mat)).collect())
}

pub fn apply_to_map(e: &MeasurementEnsemble, m: &OperatorMap) -> Result<Vec<Complex64>> {
    apply_measurement(e, &m.choi)
}

/// `𝒜†(v) = Σ v_i F_i`, so that `⟨𝒜(X), v⟩ = ⟨X, 𝒜†(v)⟩`.
pub fn adjoint(e: &MeasurementEnsemble, v: &[Complex64]) -> Result<BipartiteOperator> {
    if v.len() != e.m() {
        return Err(Error::shape(format!("adjoint of {} outcomes applied to {}", e.m(), v.len())));
    }
    let n = e.dim();
    let mut out = ComplexMatrix::zeros(n, n);
    for (f, vi) in e.functionals.iter().zip(v) {
        out += f * *vi;
    }
    BipartiteOperator::new(out, e.dim_w, e.dim_v)
}

/// Adds noise of Euclidean norm exactly `eta_target` along a Gaussian
/// direction, complex unless `real` is set. Returns the noisy vector and the
/// realized noise norm.
pub fn add_noise(y: &[Complex64], eta_target: f64, real: bool, rng: &mut Rng) -> Result<(Vec<Complex64>, f64)> {
    if !(eta_target >= 0.0) || !eta_target.is_finite() {
        return Err(Error::precondition("noise level must be finite and nonnegative"));
    }
    if eta_target == 0.0 || y.is_empty() {
        return Ok((y.to_vec(), 0.0));
    }
    let field = if real { Field::Real } else { Field::Complex };
    let dir = unit_vector(rng, y.len(), field);
    let noisy: Vec<Complex64> = y.iter().zip(dir.iter()).map(|(a, d)| a + d * cr(eta_target)).collect();
    let realized = y.iter().zip(&noisy).map(|(a, b)| (b - a).norm_sqr()).sum::<f64>().sqrt();
    Ok((noisy, realized))
}

pub fn vector_norm(y: &[Complex64]) -> f64 {
    y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choi::{random_channel, random_unitary};
    use crate::linalg::{frobenius, hermitian_part, singular_values};
    use crate::rng::{complex_gaussian_matrix, hermitian_gaussian};

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn diagonal_d_examples() {
        assert_eq!(DiagonalD::new(2).unwrap().values, vec![1.0, -1.0]);
        assert_eq!(DiagonalD::new(4).unwrap().values, vec![0.5, -0.5, 1.0, -1.0]);
        assert!(DiagonalD::new(3).is_err());
        assert_eq!(DiagonalD::graded(3).values, vec![0.0, 0.5, 1.0]);
        assert_eq!(DiagonalD::graded(1).values, vec![1.0]);
    }

    #[test]
    fn gaussian_moments_and_validation() {
        let mut rng = seeded(70);
        assert!(gaussian_ensemble(0, (2, 2), Field::Real, &mut rng).is_err());
        let e = gaussian_ensemble(2000, (2, 2), Field::Complex, &mut rng).unwrap();
        let vals: Vec<f64> = e.functionals.iter().flat_map(|f| f.iter().flat_map(|z| [z.re, z.im]).collect::<Vec<_>>()).collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 5.0 / n.sqrt());
        // the variance of a sample variance of N(0,1) is 2/n
        assert!((var - 1.0).abs() < 5.0 * (2.0 / n).sqrt());
        let r = gaussian_ensemble(3, (2, 2), Field::Real, &mut rng).unwrap();
        assert!(r.is_real());
    }

    #[test]
    fn seeded_spec_is_reproducible() {
        for kind in [
            EnsembleKind::GaussianReal,
            EnsembleKind::GaussianComplex,
            EnsembleKind::RankOneGaussian,
            EnsembleKind::StructuredUdv,
            EnsembleKind::ProcessTomo,
            EnsembleKind::Deconv,
        ] {
            let spec = EnsembleSpec { kind, m: 5, dims: [2, 2], seed: 9, group: None, q: Some(2) };
            let a = spec.materialize().unwrap();
            let b = spec.materialize().unwrap();
            assert_eq!(a, b);
            assert_eq!(a.m(), 5);
            let other = EnsembleSpec { seed: 10, ..spec }.materialize().unwrap();
            assert_ne!(a.functionals, other.functionals);
        }
    }

    #[test]
    fn rank_one_quadratic_form() {
        let mut rng = seeded(71);
        let e = rank_one_gaussian_ensemble(6, (2, 2), &mut rng).unwrap();
        let x = BipartiteOperator::new(hermitian_gaussian(&mut rng, 4, Field::Complex), 2, 2).unwrap();
        let y = apply_measurement(&e, &x).unwrap();
        let Factors::RankOne { a } = &e.factors else { panic!() };
        for (yi, ai) in y.iter().zip(a) {
            let q = (ai.adjoint() * &x.mat * ai)[(0, 0)];
            assert!((yi - q).norm() < 1e-12 * (1.0 + q.norm()));
            assert!(yi.im.abs() < 1e-12 * (1.0 + yi.norm()));
        }
        for f in &e.functionals {
            let s = singular_values(f);
            assert!(s[1] < 1e-12 * s[0]);
        }
    }

    #[test]
    fn structured_factored_evaluation_agrees() {
        let mut rng = seeded(72);
        for group in [UnitaryGroup::Orthogonal, UnitaryGroup::Unitary] {
            let e = structured_ensemble(8, 2, &mut rng, group).unwrap();
            let Factors::Structured { x, y, a } = &e.factors else { panic!() };
            for ((xj, yj), aj) in x.iter().zip(y).zip(a) {
                assert!((xj.norm() - 1.0).abs() < 1e-12 && (yj.norm() - 1.0).abs() < 1e-12);
                assert!((singular_values(aj)[0] - 1.0).abs() < 1e-12);
            }
            let m = random_channel(2, 2, 2, &mut rng).unwrap();
            let direct = apply_to_map(&e, &m).unwrap();
            let factored = e.apply_factored(&m).unwrap();
            assert!(max_diff(&direct, &factored) < 1e-12);
            if group == UnitaryGroup::Orthogonal {
                assert!(e.is_real());
            }
        }
        assert!(structured_ensemble(3, 3, &mut rng, UnitaryGroup::Unitary).is_err());
    }

    #[test]
    fn structured_is_linear_in_the_map() {
        let mut rng = seeded(73);
        let e = structured_ensemble(6, 2, &mut rng, UnitaryGroup::Unitary).unwrap();
        let x1 = BipartiteOperator::new(complex_gaussian_matrix(&mut rng, 4, 4), 2, 2).unwrap();
        let x2 = BipartiteOperator::new(complex_gaussian_matrix(&mut rng, 4, 4), 2, 2).unwrap();
        let a = c(0.3, -1.1);
        let sum = BipartiteOperator::new(&x1.mat + &x2.mat * a, 2, 2).unwrap();
        let lhs = apply_measurement(&e, &sum).unwrap();
        let y1 = apply_measurement(&e, &x1).unwrap();
        let y2 = apply_measurement(&e, &x2).unwrap();
        let rhs: Vec<Complex64> = y1.iter().zip(&y2).map(|(p, q)| p + q * a).collect();
        assert!(max_diff(&lhs, &rhs) < 1e-12);
        let zero = apply_measurement(&e, &BipartiteOperator::zeros(2, 2)).unwrap();
        assert!(zero.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn process_tomography_outcomes() {
        let mut rng = seeded(74);
        let e = process_tomo_ensemble(10, (2, 2), &mut rng).unwrap();
        let Factors::ProcessTomo { psi, a } = &e.factors else { panic!() };
        for aj in a {
            assert!(frobenius(&(aj - hermitian_part(aj))) < 1e-14);
        }
        let id = OperatorMap::identity(2);
        let y = apply_to_map(&e, &id).unwrap();
        for ((yj, p), aj) in y.iter().zip(psi).zip(a) {
            let expect = (p.adjoint() * aj * p)[(0, 0)];
            assert!((yj - expect).norm() < 1e-12);
            assert!(yj.im.abs() < 1e-12);
        }
        let ch = random_channel(2, 2, 2, &mut rng).unwrap();
        assert!(max_diff(&apply_to_map(&e, &ch).unwrap(), &e.apply_factored(&ch).unwrap()) < 1e-12);
    }

    #[test]
    fn circular_convolution_examples() {
        let mut rng = seeded(75);
        let x = gaussian_vector(&mut rng, 5, Field::Complex);
        let e1 = crate::linalg::basis_vector(5, 0);
        assert!((circular_convolution(&e1, &x).unwrap() - &x).norm() < 1e-15);
        let s = circular_convolution(&ComplexVector::from_element(1, c(2.0, 0.0)), &ComplexVector::from_element(1, c(3.0, 1.0))).unwrap();
        assert_eq!(s[0], c(6.0, 2.0));
        assert!(circular_convolution(&x, &e1.rows(0, 4).into_owned()).is_err());

        let w = gaussian_vector(&mut rng, 8, Field::Complex);
        let x = gaussian_vector(&mut rng, 8, Field::Complex);
        let f = fourier_matrix(8);
        let lhs = &f * circular_convolution(&w, &x).unwrap();
        let rhs = (&f * &w).component_mul(&(&f * &x)) * cr(8f64.sqrt());
        assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn deconvolution_matches_convolution_pipeline() {
        let mut rng = seeded(76);
        let (n, l, q) = (3, 5, 2);
        let e = deconv_ensemble(n, l, q, &mut rng).unwrap();
        assert_eq!(e.m(), l * q);
        let u = random_unitary(n, &mut rng);
        let v = random_unitary(n, &mut rng);
        let truth = deconv_truth(&u, &v).unwrap();
        let y = apply_to_map(&e, &truth).unwrap();
        assert!(max_diff(&y, &e.apply_factored(&truth).unwrap()) < 1e-12);
        let Factors::Deconv { b, c: cm, h, m, pairs } = &e.factors else { panic!() };
        let f = fourier_matrix(l);
        for (yi, &(li, qi)) in y.iter().zip(pairs) {
            let w = b * &u * &h[qi];
            let x = cm * &v * &m[qi];
            let hadamard = (&f * &w)[li] * (&f * &x)[li];
            assert!((yi - hadamard).norm() < 1e-10);
            let conv = &f * circular_convolution(&w, &x).unwrap();
            assert!((conv[li] - hadamard * cr((l as f64).sqrt())).norm() < 1e-9);
        }
        let fb = &f * b;
        let fc = &f * cm;
        for li in 0..l {
            let s = singular_values(&deconv_e(&fb, &fc, li));
            assert!(s[1] < 1e-12 * s[0].max(1e-300));
        }
        assert!(deconv_ensemble(6, 12, 3, &mut rng).is_ok());
    }

    #[test]
    fn adjoint_identity_on_random_probes() {
        let mut rng = seeded(77);
        let e = structured_ensemble(7, 2, &mut rng, UnitaryGroup::Unitary).unwrap();
        for _ in 0..10 {
            let x = BipartiteOperator::new(complex_gaussian_matrix(&mut rng, 4, 4), 2, 2).unwrap();
            let v: Vec<Complex64> = gaussian_vector(&mut rng, 7, Field::Complex).iter().copied().collect();
            let ax = apply_measurement(&e, &x).unwrap();
            let lhs: Complex64 = ax.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            let rhs = inner(&x.mat, &adjoint(&e, &v).unwrap().mat);
            assert!((lhs - rhs).norm() < 1e-10 * (1.0 + lhs.norm()));
        }
    }

    #[test]
    fn noise_has_exact_norm() {
        let mut rng = seeded(78);
        let y: Vec<Complex64> = (0..6).map(|i| c(i as f64, 1.0)).collect();
        let (same, eps) = add_noise(&y, 0.0, false, &mut rng).unwrap();
        assert_eq!(same, y);
        assert_eq!(eps, 0.0);
        for _ in 0..100 {
            let (noisy, eps) = add_noise(&y, 0.37, false, &mut rng).unwrap();
            assert!((eps - 0.37).abs() < 1e-12);
            assert!(noisy.len() == y.len());
        }
        assert!(add_noise(&y, -1.0, true, &mut rng).is_err());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mut rng = seeded(79);
        let e = gaussian_ensemble(2, (2, 2), Field::Real, &mut rng).unwrap();
        assert!(apply_measurement(&e, &BipartiteOperator::zeros(2, 3)).is_err());
    }
}
