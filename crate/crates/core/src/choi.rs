//! Linear maps `L(V) → L(W)` in Choi, Kraus and functional form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, cr, frobenius, hermitian_part, identity, matrix_unit, partial_trace_w, vec,
    BipartiteOperator, ComplexMatrix, ZERO,
};
use crate::rng::{complex_gaussian_matrix, real_gaussian_matrix, Rng};

/// A linear map stored as its Choi matrix `J(M) = Σ M(E_ij) ⊗ E_ij` on `W ⊗ V`.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMap {
    pub choi: BipartiteOperator,
}

impl OperatorMap {
    pub fn from_choi(choi: BipartiteOperator) -> Self {
        Self { choi }
    }

    pub fn dim_v(&self) -> usize {
        self.choi.dim_v
    }

    pub fn dim_w(&self) -> usize {
        self.choi.dim_w
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        apply_map(self, rho)
    }

    pub fn zero(dim_v: usize, dim_w: usize) -> Self {
        Self { choi: BipartiteOperator::zeros(dim_w, dim_v) }
    }

    pub fn identity(n: usize) -> Self {
        let omega = vec(&identity(n));
        let choi = &omega * omega.adjoint();
        Self { choi: BipartiteOperator { mat: choi, dim_w: n, dim_v: n } }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KrausSet {
    pub operators: Vec<ComplexMatrix>,
}

impl KrausSet {
    pub fn new(operators: Vec<ComplexMatrix>) -> Result<Self> {
        let first = operators.first().ok_or_else(|| Error::shape("empty Kraus set"))?;
        let shape = first.shape();
        if operators.iter().any(|k| k.shape() != shape) {
            return Err(Error::shape("Kraus operators have inconsistent shapes"));
        }
        Ok(Self { operators })
    }

    pub fn rank(&self) -> usize {
        self.operators.len()
    }

    pub fn dim_w(&self) -> usize {
        self.operators[0].nrows()
    }

    pub fn dim_v(&self) -> usize {
        self.operators[0].ncols()
    }

    /// `Σ K_j ρ K_j†`.
    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        self.operators.iter().fold(linalg::zeros(self.dim_w(), self.dim_w()), |acc, k| {
            acc + k * rho * k.adjoint()
        })
    }

    /// `‖Σ K_j†K_j − 1_V‖F`.
    pub fn completeness_residual(&self) -> f64 {
        let sum = self
            .operators
            .iter()
            .fold(linalg::zeros(self.dim_v(), self.dim_v()), |acc, k| acc + k.adjoint() * k);
        frobenius(&(sum - identity(self.dim_v())))
    }
}

/// Choi matrix of the linear map `apply`, built from its action on matrix units.
pub fn choi_of_apply<F>(apply: F, dim_v: usize, dim_w: usize) -> Result<OperatorMap>
where
    F: Fn(&ComplexMatrix) -> ComplexMatrix,
{
    let n = dim_w * dim_v;
    let mut j = linalg::zeros(n, n);
    for a in 0..dim_v {
        for b in 0..dim_v {
            let out = apply(&matrix_unit(dim_v, dim_v, a, b));
            if out.shape() != (dim_w, dim_w) {
                return Err(Error::shape(format!(
                    "map returned {}x{}, expected {dim_w}x{dim_w}",
                    out.nrows(),
                    out.ncols()
                )));
            }
            for w1 in 0..dim_w {
                for w2 in 0..dim_w {
                    j[(w1 * dim_v + a, w2 * dim_v + b)] = out[(w1, w2)];
                }
            }
        }
    }
    Ok(OperatorMap { choi: BipartiteOperator::new(j, dim_w, dim_v)? })
}

/// `M(ρ) = Tr_V[(1_W ⊗ ρᵀ) J(M)]`.
pub fn apply_map(m: &OperatorMap, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (dw, dv) = (m.dim_w(), m.dim_v());
    if rho.shape() != (dv, dv) {
        return Err(Error::shape(format!(
            "map acts on {dv}x{dv} inputs, got {}x{}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    let j = &m.choi.mat;
    Ok(ComplexMatrix::from_fn(dw, dw, |w1, w2| {
        let mut acc = ZERO;
        for a in 0..dv {
            for b in 0..dv {
                acc += rho[(a, b)] * j[(w1 * dv + a, w2 * dv + b)];
            }
        }
        acc
    }))
}

/// `J = Σ_j vec(K_j) vec(K_j)†`.
pub fn kraus_to_choi(k: &KrausSet) -> Result<OperatorMap> {
    let (dw, dv) = (k.dim_w(), k.dim_v());
    let n = dw * dv;
    let j = k.operators.iter().fold(linalg::zeros(n, n), |acc, op| {
        let v = vec(op);
        acc + &v * v.adjoint()
    });
    Ok(OperatorMap { choi: BipartiteOperator::new(j, dw, dv)? })
}

/// Choi matrix of `X ↦ U X V`.
pub fn unitary_pair_map(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<OperatorMap> {
    if !u.is_square() || !v.is_square() || u.nrows() != v.nrows() {
        return Err(Error::shape("unitary pair must be square and of equal size"));
    }
    choi_of_apply(|x| u * x * v, v.nrows(), u.nrows())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CptStatus {
    pub cp: bool,
    pub tp: bool,
}

impl CptStatus {
    pub fn is_channel(&self) -> bool {
        self.cp && self.tp
    }
}

pub fn is_cpt(m: &OperatorMap, tol: f64) -> CptStatus {
    let j = &m.choi.mat;
    let hermitian = frobenius(&(j - j.adjoint())) <= tol;
    let cp = hermitian && linalg::min_eig_hermitian_part(j) >= -tol;
    let tr = partial_trace_w(&hermitian_part(j), m.dim_w(), m.dim_v());
    let tp = frobenius(&(tr - identity(m.dim_v()))) <= tol;
    CptStatus { cp, tp }
}

/// Unitary group to sample from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitaryGroup {
    Orthogonal,
    #[default]
    Unitary,
}

/// Haar-random unitary: QR of a complex Gaussian matrix, with the phases of
/// `R`'s diagonal moved into `Q`.
pub fn random_unitary(n: usize, rng: &mut Rng) -> ComplexMatrix {
    haar_isometry(complex_gaussian_matrix(rng, n, n))
}

/// Haar-random real orthogonal matrix (as a complex matrix with zero imaginary part).
pub fn random_orthogonal(n: usize, rng: &mut Rng) -> ComplexMatrix {
    haar_isometry(real_gaussian_matrix(rng, n, n))
}

pub fn random_group_element(n: usize, group: UnitaryGroup, rng: &mut Rng) -> ComplexMatrix {
    match group {
        UnitaryGroup::Orthogonal => random_orthogonal(n, rng),
        UnitaryGroup::Unitary => random_unitary(n, rng),
    }
}

fn haar_isometry(g: ComplexMatrix) -> ComplexMatrix {
    let cols = g.ncols();
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..cols {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / cr(d.norm()) } else { cr(1.0) };
        for i in 0..q.nrows() {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random Kraus set of a channel with the given Kraus rank: a Haar isometry
/// `V → W ⊗ Cʳ` cut into `r` blocks of `dim_w` rows.
pub fn random_kraus(dim_v: usize, dim_w: usize, rank: usize, rng: &mut Rng) -> Result<KrausSet> {
    if rank == 0 || rank * dim_w < dim_v {
        return Err(Error::InfeasibleIsometry { dim_v, dim_w, rank });
    }
    let iso = haar_isometry(complex_gaussian_matrix(rng, dim_w * rank, dim_v));
    let ops = (0..rank).map(|k| iso.rows(k * dim_w, dim_w).into_owned()).collect();
    KrausSet::new(ops)
}

pub fn random_channel(dim_v: usize, dim_w: usize, rank: usize, rng: &mut Rng) -> Result<OperatorMap> {
    kraus_to_choi(&random_kraus(dim_v, dim_w, rank, rng)?)
}
