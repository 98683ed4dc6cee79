//! Dense complex linear algebra used throughout the crate.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`. Bipartite operators act on
//! `W ⊗ V` with `W` as the first (slow) tensor factor, so the basis index of
//! `e_w ⊗ e_v` is `w * dim_v + v`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Absolute floor applied to every relative tolerance.
pub const ABS_TOL_FLOOR: f64 = 1e-12;

const HERMITIAN_REL_TOL: f64 = 1e-10;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(rows, cols)
}

pub fn from_real_diag(d: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_fn(d.len(), d.len(), |i, j| if i == j { cr(d[i]) } else { ZERO })
}

/// Row-major construction from real entries.
pub fn from_real_rows(rows: usize, cols: usize, data: &[f64]) -> ComplexMatrix {
    assert_eq!(data.len(), rows * cols);
    ComplexMatrix::from_fn(rows, cols, |i, j| cr(data[i * cols + j]))
}

/// Standard basis ket `e_i` of dimension `n`.
pub fn basis_vector(n: usize, i: usize) -> ComplexVector {
    let mut v = ComplexVector::zeros(n);
    v[i] = ONE;
    v
}

/// Matrix unit `E_{i,j} = e_i e_jᵀ`.
pub fn matrix_unit(rows: usize, cols: usize, i: usize, j: usize) -> ComplexMatrix {
    let mut m = zeros(rows, cols);
    m[(i, j)] = ONE;
    m
}

pub fn outer(x: &ComplexVector, y: &ComplexVector) -> ComplexMatrix {
    x * y.adjoint()
}

pub fn trace(x: &ComplexMatrix) -> Complex64 {
    x.diagonal().iter().sum()
}

pub fn frobenius(x: &ComplexMatrix) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Frobenius inner product `Tr(X† Y)`.
pub fn inner(x: &ComplexMatrix, y: &ComplexMatrix) -> Complex64 {
    x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum()
}

pub fn is_finite(x: &ComplexMatrix) -> bool {
    x.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn ensure_finite(x: &ComplexMatrix) -> Result<()> {
    if is_finite(x) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

fn ensure_square(x: &ComplexMatrix) -> Result<()> {
    if x.is_square() {
        Ok(())
    } else {
        Err(Error::shape(format!(
            "expected a square matrix, got {}x{}",
            x.nrows(),
            x.ncols()
        )))
    }
}

/// `‖X − X†‖F ≤ 1e-10·max(1, ‖X‖F)`.
pub fn is_hermitian(x: &ComplexMatrix) -> bool {
    x.is_square() && frobenius(&(x - x.adjoint())) <= HERMITIAN_REL_TOL * frobenius(x).max(1.0)
}

pub fn hermitian_part(x: &ComplexMatrix) -> ComplexMatrix {
    (x + x.adjoint()) * cr(0.5)
}

/// Full singular value decomposition `X = U·diag(σ)·V†`.
#[derive(Clone, Debug)]
pub struct Svd {
    /// Unitary, `rows × rows`.
    pub u: ComplexMatrix,
    /// Descending, length `min(rows, cols)`.
    pub sigma: Vec<f64>,
    /// Unitary, `cols × cols`.
    pub v: ComplexMatrix,
}

impl Svd {
    /// Rebuilds `U·Σ·V†` with the rectangular `Σ`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let (r, c) = (self.u.nrows(), self.v.nrows());
        let mut sigma = zeros(r, c);
        for (k, s) in self.sigma.iter().enumerate() {
            sigma[(k, k)] = cr(*s);
        }
        &self.u * sigma * self.v.adjoint()
    }

    /// Number of singular values above `rel_tol·σ₁` (and the absolute floor).
    pub fn rank(&self, rel_tol: f64) -> usize {
        let top = self.sigma.first().copied().unwrap_or(0.0);
        let cut = (rel_tol * top).max(ABS_TOL_FLOOR);
        self.sigma.iter().filter(|s| **s > cut).count()
    }
}

pub fn svd(x: &ComplexMatrix) -> Result<Svd> {
    ensure_finite(x)?;
    let (r, c) = x.shape();
    let k = r.min(c);
    if k == 0 {
        return Ok(Svd { u: identity(r), sigma: vec![], v: identity(c) });
    }
    let dec = x.clone().svd_unordered(true, true);
    let u_thin = dec.u.expect("requested U");
    let v_t = dec.v_t.expect("requested V†");
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| dec.singular_values[b].total_cmp(&dec.singular_values[a]));
    let sigma = order.iter().map(|&i| dec.singular_values[i]).collect();
    let u_sorted = ComplexMatrix::from_fn(r, k, |i, j| u_thin[(i, order[j])]);
    let v_sorted = ComplexMatrix::from_fn(c, k, |i, j| v_t[(order[j], i)].conj());
    let s = Svd { u: complete_orthonormal(&u_sorted), sigma, v: complete_orthonormal(&v_sorted) };
    if svd_is_accurate(x, &s) {
        return Ok(s);
    }
    // The bidiagonal QR iteration occasionally returns a wrong factorization
    // on highly structured inputs; the dilation route is slower but robust.
    let s = svd_via_dilation(x)?;
    if svd_is_accurate(x, &s) {
        Ok(s)
    } else {
        Err(Error::NumericBreakdown("singular value decomposition failed".into()))
    }
}

fn svd_is_accurate(x: &ComplexMatrix, s: &Svd) -> bool {
    let k = s.sigma.len();
    // the dilation route zeroes singular values below an absolute floor
    let allowed = 1e-10 * frobenius(x) + ABS_TOL_FLOOR * (k as f64).sqrt();
    let uk = s.u.columns(0, k);
    let vk = s.v.columns(0, k);
    let recon = uk * from_real_diag(&s.sigma) * vk.adjoint();
    let ortho = |m: &ComplexMatrix| frobenius(&(m.adjoint() * m - identity(m.ncols())));
    frobenius(&(recon - x)) <= allowed && ortho(&s.u) <= 1e-10 && ortho(&s.v) <= 1e-10
}

/// SVD from the eigendecomposition of `[[0, X], [X†, 0]]`, whose eigenpairs
/// are `±σ` with vectors `(u, ±v)/√2`.
fn svd_via_dilation(x: &ComplexMatrix) -> Result<Svd> {
    let (r, c) = x.shape();
    let k = r.min(c);
    let mut h = zeros(r + c, r + c);
    h.view_mut((0, r), (r, c)).copy_from(x);
    h.view_mut((r, 0), (c, r)).copy_from(&x.adjoint());
    let (vals, vecs) = eigh_unchecked(&h);
    let cut = (1e-13 * vals.iter().fold(0.0f64, |m, v| m.max(v.abs()))).max(ABS_TOL_FLOOR);
    let mut us = Vec::new();
    let mut vs = Vec::new();
    let mut sigma = Vec::new();
    for idx in (0..vals.len()).rev() {
        if vals[idx] <= cut || sigma.len() == k {
            break;
        }
        let col = vecs.column(idx);
        let u = col.rows(0, r).into_owned();
        let v = col.rows(r, c).into_owned();
        let (nu, nv) = (u.norm(), v.norm());
        if nu < 1e-8 || nv < 1e-8 {
            continue;
        }
        us.push(u / cr(nu));
        vs.push(v / cr(nv));
        sigma.push(vals[idx]);
    }
    let u = if us.is_empty() { zeros(r, 0) } else { ComplexMatrix::from_columns(&us) };
    let v = if vs.is_empty() { zeros(c, 0) } else { ComplexMatrix::from_columns(&vs) };
    sigma.resize(k, 0.0);
    Ok(Svd { u: complete_orthonormal(&u), sigma, v: complete_orthonormal(&v) })
}

/// Extends orthonormal columns to a full unitary by Gram–Schmidt against the
/// standard basis.
pub fn complete_orthonormal(cols: &ComplexMatrix) -> ComplexMatrix {
    let n = cols.nrows();
    let mut basis: Vec<ComplexVector> = cols.column_iter().map(|c| c.into_owned()).collect();
    let mut e = 0;
    while basis.len() < n && e < n {
        let mut v = basis_vector(n, e);
        // two passes of modified Gram-Schmidt for stability
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dotc(&v);
                v -= b * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-6 {
            basis.push(v / cr(norm));
        }
        e += 1;
    }
    ComplexMatrix::from_columns(&basis)
}

pub fn singular_values(x: &ComplexMatrix) -> Vec<f64> {
    match svd(x) {
        Ok(s) => s.sigma,
        Err(_) => vec![f64::NAN; x.nrows().min(x.ncols())],
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
///
/// The input is symmetrized before decomposition; it must be Hermitian at
/// the crate-wide tolerance.
pub fn eigh(x: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    ensure_finite(x)?;
    ensure_square(x)?;
    if !is_hermitian(x) {
        return Err(Error::NotHermitian { deviation: frobenius(&(x - x.adjoint())) });
    }
    Ok(eigh_unchecked(&hermitian_part(x)))
}

pub(crate) fn eigh_unchecked(h: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let n = h.nrows();
    if n == 0 {
        return (vec![], zeros(0, 0));
    }
    let dec = nalgebra::SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| dec.eigenvalues[a].total_cmp(&dec.eigenvalues[b]));
    let vals = order.iter().map(|&i| dec.eigenvalues[i]).collect();
    let vecs = ComplexMatrix::from_fn(n, n, |i, j| dec.eigenvectors[(i, order[j])]);
    (vals, vecs)
}

pub fn eigvalsh(x: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(eigh(x)?.0)
}

/// Smallest eigenvalue of the Hermitian part.
pub fn min_eig_hermitian_part(x: &ComplexMatrix) -> f64 {
    eigh_unchecked(&hermitian_part(x)).0.first().copied().unwrap_or(0.0)
}

/// Unique PSD square root. Eigenvalues in `[-tol·‖X‖, 0)` are clipped to
/// zero; anything more negative is rejected.
pub fn sqrt_psd(x: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (vals, vecs) = eigh(x)?;
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = (1e-10 * scale).max(ABS_TOL_FLOOR);
    let mut roots = Vec::with_capacity(vals.len());
    for &v in &vals {
        if v < -tol {
            return Err(Error::NotPsd { eigenvalue: v });
        }
        roots.push(v.max(0.0).sqrt());
    }
    let d = from_real_diag(&roots);
    Ok(&vecs * d * vecs.adjoint())
}

/// `√(XX†)` computed from the SVD; exact PSD by construction.
pub fn abs_left(x: &ComplexMatrix) -> Result<ComplexMatrix> {
    let s = svd(x)?;
    let k = s.sigma.len();
    let u = s.u.columns(0, k);
    Ok(u * from_real_diag(&s.sigma) * u.adjoint())
}

/// `√(X†X)` computed from the SVD.
pub fn abs_right(x: &ComplexMatrix) -> Result<ComplexMatrix> {
    let s = svd(x)?;
    let k = s.sigma.len();
    let v = s.v.columns(0, k);
    Ok(v * from_real_diag(&s.sigma) * v.adjoint())
}

/// Sign matrix `S_X = V U†` of a square `X = UΣV†`. For rank-deficient `X`
/// the SVD bases are completed arbitrarily, so `S_X` is not unique but
/// always unitary with `X·S_X = √(XX†)` and `X†·S_X† = √(X†X)`.
pub fn sign_matrix(x: &ComplexMatrix) -> Result<ComplexMatrix> {
    ensure_square(x)?;
    let s = svd(x)?;
    Ok(&s.v * s.u.adjoint())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schatten {
    One,
    Two,
    Inf,
}

pub fn schatten_norm(x: &ComplexMatrix, p: Schatten) -> f64 {
    match p {
        Schatten::Two => frobenius(x),
        Schatten::One => singular_values(x).iter().sum(),
        Schatten::Inf => singular_values(x).first().copied().unwrap_or(0.0),
    }
}

pub fn nuclear_norm(x: &ComplexMatrix) -> f64 {
    schatten_norm(x, Schatten::One)
}

pub fn spectral_norm(x: &ComplexMatrix) -> f64 {
    schatten_norm(x, Schatten::Inf)
}

/// Row-major vectorization: `vec(E_ij) = e_i ⊗ e_j`.
pub fn vec(x: &ComplexMatrix) -> ComplexVector {
    let (r, c) = x.shape();
    ComplexVector::from_fn(r * c, |k, _| x[(k / c, k % c)])
}

pub fn devec(v: &ComplexVector, rows: usize, cols: usize) -> Result<ComplexMatrix> {
    if rows * cols != v.len() {
        return Err(Error::shape(format!(
            "vector of length {} does not factor as {rows}x{cols}",
            v.len()
        )));
    }
    Ok(ComplexMatrix::from_fn(rows, cols, |i, j| v[i * cols + j]))
}

/// Square devectorization; the length must be a perfect square.
pub fn devec_square(v: &ComplexVector) -> Result<ComplexMatrix> {
    let n = (v.len() as f64).sqrt().round() as usize;
    devec(v, n, n)
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn kron_vec(a: &ComplexVector, b: &ComplexVector) -> ComplexVector {
    a.kronecker(b)
}

/// An operator on `W ⊗ V`.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteOperator {
    pub mat: ComplexMatrix,
    pub dim_w: usize,
    pub dim_v: usize,
}

impl BipartiteOperator {
    pub fn new(mat: ComplexMatrix, dim_w: usize, dim_v: usize) -> Result<Self> {
        let n = dim_w * dim_v;
        if dim_w == 0 || dim_v == 0 || mat.nrows() != n || mat.ncols() != n {
            return Err(Error::shape(format!(
                "bipartite operator {dim_w}x{dim_v} needs a {n}x{n} matrix, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        ensure_finite(&mat)?;
        Ok(Self { mat, dim_w, dim_v })
    }

    pub fn zeros(dim_w: usize, dim_v: usize) -> Self {
        let n = dim_w * dim_v;
        Self { mat: zeros(n, n), dim_w, dim_v }
    }

    pub fn dim(&self) -> usize {
        self.dim_w * self.dim_v
    }

    pub fn nuclear_norm(&self) -> f64 {
        nuclear_norm(&self.mat)
    }

    pub fn partial_trace_w(&self) -> ComplexMatrix {
        partial_trace_w(&self.mat, self.dim_w, self.dim_v)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { mat: &self.mat * cr(s), dim_w: self.dim_w, dim_v: self.dim_v }
    }

    pub fn adjoint(&self) -> Self {
        Self { mat: self.mat.adjoint(), dim_w: self.dim_w, dim_v: self.dim_v }
    }
}

/// `Tr_W` on a raw `(dim_w·dim_v)`-square matrix.
pub fn partial_trace_w(x: &ComplexMatrix, dim_w: usize, dim_v: usize) -> ComplexMatrix {
    assert_eq!(x.nrows(), dim_w * dim_v);
    assert_eq!(x.ncols(), dim_w * dim_v);
    ComplexMatrix::from_fn(dim_v, dim_v, |i, j| {
        (0..dim_w).map(|w| x[(w * dim_v + i, w * dim_v + j)]).sum()
    })
}

/// Partial trace over the first factor of a bipartite operator.
pub fn partial_trace_first(x: &BipartiteOperator) -> ComplexMatrix {
    x.partial_trace_w()
}

/// `Tr_V`: contracts the second factor, leaving an operator on `W`.
pub fn partial_trace_v(x: &ComplexMatrix, dim_w: usize, dim_v: usize) -> ComplexMatrix {
    assert_eq!(x.nrows(), dim_w * dim_v);
    ComplexMatrix::from_fn(dim_w, dim_w, |a, b| {
        (0..dim_v).map(|v| x[(a * dim_v + v, b * dim_v + v)]).sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_gaussian_matrix, seeded};
    use approx::assert_abs_diff_eq;

    fn max_abs(x: &ComplexMatrix) -> f64 {
        x.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    #[test]
    fn svd_of_diagonal() {
        let x = from_real_diag(&[3.0, 1.0]);
        let s = svd(&x).unwrap();
        assert_eq!(s.sigma, vec![3.0, 1.0]);
        assert!(max_abs(&(s.reconstruct() - &x)) < 1e-14);
        // U and V agree up to a common phase per column
        let uv = s.u.adjoint() * &s.v;
        assert!(max_abs(&(uv - identity(2))) < 1e-12);
    }

    #[test]
    fn svd_of_zero() {
        let s = svd(&zeros(2, 2)).unwrap();
        assert_eq!(s.sigma, vec![0.0, 0.0]);
        assert!(max_abs(&(s.u.adjoint() * &s.u - identity(2))) < 1e-12);
    }

    #[test]
    fn svd_of_numerically_zero_matrix() {
        let x = from_real_rows(2, 2, &[1e-17, -3e-17, 2e-17, 0.0]);
        let s = svd(&x).unwrap();
        assert!(s.sigma.iter().all(|v| *v < 1e-15));
        assert!(singular_values(&x).iter().all(|v| v.is_finite()));
    }

    #[test]
    fn svd_of_rank_one_maximally_entangled_projector() {
        let x = from_real_rows(4, 4, &[1., 0., 0., 1., 0., 0., 0., 0., 0., 0., 0., 0., 1., 0., 0., 1.]);
        let s = svd(&x).unwrap();
        assert!((s.sigma[0] - 2.0).abs() < 1e-14 && s.sigma[1].abs() < 1e-14);
        assert!(frobenius(&(abs_left(&x).unwrap() - &x)) < 1e-13);
        let d = svd_via_dilation(&x).unwrap();
        assert!(svd_is_accurate(&x, &d));
    }

    #[test]
    fn svd_reconstructs_random_matrices() {
        let mut rng = seeded(1);
        for (r, c) in [(5, 5), (3, 6), (6, 2)] {
            let x = complex_gaussian_matrix(&mut rng, r, c);
            let s = svd(&x).unwrap();
            assert!(frobenius(&(s.reconstruct() - &x)) <= 1e-10 * frobenius(&x));
            assert!(max_abs(&(s.u.adjoint() * &s.u - identity(r))) < 1e-10);
            assert!(max_abs(&(s.v.adjoint() * &s.v - identity(c))) < 1e-10);
            assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn svd_rejects_nan() {
        let mut x = identity(2);
        x[(0, 1)] = c(f64::NAN, 0.0);
        assert!(matches!(svd(&x), Err(Error::NonFinite)));
    }

    #[test]
    fn sqrt_psd_examples() {
        let r = sqrt_psd(&from_real_diag(&[4.0, 9.0])).unwrap();
        assert!(max_abs(&(r - from_real_diag(&[2.0, 3.0]))) < 1e-14);
        assert!(max_abs(&sqrt_psd(&zeros(3, 3)).unwrap()) == 0.0);

        let mut rng = seeded(2);
        let g = complex_gaussian_matrix(&mut rng, 6, 6);
        let p = &g * g.adjoint();
        let r = sqrt_psd(&p).unwrap();
        assert!(max_abs(&(&r * &r - &p)) <= 1e-9 * spectral_norm(&p));
        assert!(min_eig_hermitian_part(&r) >= -1e-12);
    }

    #[test]
    fn sqrt_psd_rejects_negative_spectrum() {
        let err = sqrt_psd(&from_real_diag(&[1.0, -0.5])).unwrap_err();
        match err {
            Error::NotPsd { eigenvalue } => assert_abs_diff_eq!(eigenvalue, -0.5, epsilon = 1e-14),
            other => panic!("unexpected {other:?}"),
        }
        // tiny negative rounding noise is clipped
        assert!(sqrt_psd(&from_real_diag(&[1.0, -1e-15])).is_ok());
    }

    #[test]
    fn sign_matrix_positive_definite_is_identity() {
        let mut rng = seeded(3);
        let g = complex_gaussian_matrix(&mut rng, 4, 4);
        let p = &g * g.adjoint() + identity(4);
        let s = sign_matrix(&p).unwrap();
        assert!(max_abs(&(s - identity(4))) < 1e-9);
    }

    #[test]
    fn sign_matrix_nilpotent() {
        let x = from_real_rows(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let s = sign_matrix(&x).unwrap();
        let xs = &x * &s;
        // independent oracle: √(XX†) from the eigendecomposition route
        let oracle = sqrt_psd(&(&x * x.adjoint())).unwrap();
        assert!(max_abs(&(&xs - &oracle)) < 1e-12);
        assert!(max_abs(&(xs - from_real_diag(&[1.0, 0.0]))) < 1e-12);
        assert!(max_abs(&(s.adjoint() * &s - identity(2))) < 1e-12);
    }

    #[test]
    fn sign_matrix_hermitian_matches_classical_sign() {
        let s = sign_matrix(&from_real_diag(&[1.0, -2.0])).unwrap();
        assert!(max_abs(&(s - from_real_diag(&[1.0, -1.0]))) < 1e-12);
    }

    #[test]
    fn sign_matrix_identities_random() {
        let mut rng = seeded(4);
        for n in [1, 3, 6] {
            let x = complex_gaussian_matrix(&mut rng, n, n);
            let s = sign_matrix(&x).unwrap();
            let left = sqrt_psd(&(&x * x.adjoint())).unwrap();
            let right = sqrt_psd(&(x.adjoint() * &x)).unwrap();
            assert!(max_abs(&(&x * &s - left)) < 1e-9);
            assert!(max_abs(&(x.adjoint() * s.adjoint() - right)) < 1e-9);
            let tr = trace(&(&x * &s));
            assert_abs_diff_eq!(tr.re, nuclear_norm(&x), epsilon = 1e-9);
            assert_abs_diff_eq!(tr.im, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn sign_matrix_rank_deficient_is_unitary() {
        let mut rng = seeded(5);
        let a = complex_gaussian_matrix(&mut rng, 4, 1);
        let b = complex_gaussian_matrix(&mut rng, 1, 4);
        let x = a * b;
        let s = sign_matrix(&x).unwrap();
        assert!(max_abs(&(s.adjoint() * &s - identity(4))) < 1e-10);
        assert!(max_abs(&(&x * &s - abs_left(&x).unwrap())) < 1e-9);
    }

    #[test]
    fn partial_trace_examples() {
        let mut rng = seeded(6);
        let x = complex_gaussian_matrix(&mut rng, 3, 3);
        let y = kron(&identity(2), &x);
        let pt = partial_trace_first(&BipartiteOperator::new(y, 2, 3).unwrap());
        assert!(max_abs(&(pt - &x * cr(2.0))) < 1e-14);

        // vec(1)vec(1)† on 2⊗2: explicit index sum gives Σ_i E_ii = 1
        let v1 = vec(&identity(2));
        let omega = outer(&v1, &v1);
        let mut oracle = zeros(2, 2);
        for w in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    oracle[(i, j)] += omega[(w * 2 + i, w * 2 + j)];
                }
            }
        }
        let pt = partial_trace_w(&omega, 2, 2);
        assert!(max_abs(&(&pt - &oracle)) == 0.0);
        assert!(max_abs(&(pt - identity(2))) == 0.0);
    }

    #[test]
    fn partial_trace_preserves_trace_and_is_adjoint_of_tensoring() {
        let mut rng = seeded(7);
        for (a, b) in [(2, 2), (2, 3), (3, 2)] {
            let x = complex_gaussian_matrix(&mut rng, a * b, a * b);
            let y = complex_gaussian_matrix(&mut rng, b, b);
            let pt = partial_trace_w(&x, a, b);
            assert!((trace(&pt) - trace(&x)).norm() < 1e-12);
            let lhs = inner(&pt, &y);
            let rhs = inner(&x, &kron(&identity(a), &y));
            assert!((lhs - rhs).norm() < 1e-10);
        }
    }

    #[test]
    fn bipartite_shape_errors() {
        assert!(BipartiteOperator::new(identity(5), 2, 2).is_err());
        assert!(BipartiteOperator::new(identity(4), 2, 2).is_ok());
    }

    #[test]
    fn schatten_examples() {
        let x = from_real_diag(&[1.0, -2.0]);
        assert_abs_diff_eq!(schatten_norm(&x, Schatten::One), 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(schatten_norm(&x, Schatten::Two), 5f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(schatten_norm(&x, Schatten::Inf), 2.0, epsilon = 1e-14);

        let mut rng = seeded(8);
        let u = crate::choi::random_unitary(5, &mut rng);
        assert_abs_diff_eq!(schatten_norm(&u, Schatten::One), 5.0, epsilon = 1e-10);
        assert_abs_diff_eq!(schatten_norm(&u, Schatten::Inf), 1.0, epsilon = 1e-10);

        let x = complex_gaussian_matrix(&mut rng, 4, 3);
        let sigma_sum: f64 = svd(&x).unwrap().sigma.iter().sum();
        assert_abs_diff_eq!(schatten_norm(&x, Schatten::One), sigma_sum, epsilon = 1e-10);
    }

    #[test]
    fn norm_ordering_on_random_matrices() {
        let mut rng = seeded(9);
        for k in 0..500 {
            let (r, c) = (1 + k % 5, 1 + (k / 5) % 4);
            let x = complex_gaussian_matrix(&mut rng, r, c);
            let (n1, n2, ninf) = (
                schatten_norm(&x, Schatten::One),
                schatten_norm(&x, Schatten::Two),
                schatten_norm(&x, Schatten::Inf),
            );
            assert!(ninf <= n2 * (1.0 + 1e-12) && n2 <= n1 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn vec_examples() {
        let e12 = matrix_unit(2, 2, 0, 1);
        let v = vec(&e12);
        assert_eq!(v.as_slice(), &[ZERO, ONE, ZERO, ZERO]);
        assert_eq!(v, kron_vec(&basis_vector(2, 0), &basis_vector(2, 1)));

        let mut rng = seeded(10);
        let x = complex_gaussian_matrix(&mut rng, 3, 4);
        let v = vec(&x);
        assert_eq!(devec(&v, 3, 4).unwrap(), x);
        assert_abs_diff_eq!(v.norm(), frobenius(&x), epsilon = 1e-12);
        assert!(devec(&v, 5, 2).is_err());

        // vec(K) = (K ⊗ 1) vec(1)
        let k = complex_gaussian_matrix(&mut rng, 3, 3);
        let rhs = kron(&k, &identity(3)) * vec(&identity(3));
        assert!((vec(&k) - rhs).norm() < 1e-12);
    }

    #[test]
    fn kron_examples() {
        assert_eq!(kron(&identity(2), &identity(3)), identity(6));
        let mut rng = seeded(11);
        let a = complex_gaussian_matrix(&mut rng, 2, 3);
        let b = complex_gaussian_matrix(&mut rng, 3, 2);
        let x = complex_gaussian_matrix(&mut rng, 3, 1).column(0).into_owned();
        let y = complex_gaussian_matrix(&mut rng, 2, 1).column(0).into_owned();
        let lhs = kron(&a, &b) * kron_vec(&x, &y);
        let rhs = kron_vec(&(&a * &x), &(&b * &y));
        assert!((lhs - rhs).norm() < 1e-12);
        let n_ab = nuclear_norm(&kron(&a, &b));
        assert_abs_diff_eq!(n_ab, nuclear_norm(&a) * nuclear_norm(&b), epsilon = 1e-9);
    }

    #[test]
    fn eigh_rejects_non_hermitian() {
        let x = from_real_rows(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(eigh(&x), Err(Error::NotHermitian { .. })));
    }
}
