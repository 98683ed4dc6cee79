use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::SQRT_2;

/// A segment of the slack vector `s`.
///
/// `Psd(n)` occupies `n(n+1)/2` rows holding the scaled lower triangle of a
/// symmetric matrix (see [`svec`]).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cone {
    Zero(usize),
    NonNeg(usize),
    Soc(usize),
    Psd(usize),
}

impl Cone {
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Zero(k) | Cone::NonNeg(k) | Cone::Soc(k) => k,
            Cone::Psd(n) => n * (n + 1) / 2,
        }
    }

    /// Whether per-row scaling inside the segment must be uniform.
    pub(crate) fn needs_uniform_scaling(&self) -> bool {
        matches!(self, Cone::Soc(_) | Cone::Psd(_))
    }

    /// Euclidean projection onto the cone, in place.
    pub fn project(&self, v: &mut [f64]) {
        match *self {
            Cone::Zero(_) => v.iter_mut().for_each(|x| *x = 0.0),
            Cone::NonNeg(_) => v.iter_mut().for_each(|x| *x = x.max(0.0)),
            Cone::Soc(_) => project_soc(v),
            Cone::Psd(n) => project_psd(v, n),
        }
    }

    /// Euclidean projection onto the dual cone, in place.
    pub fn project_dual(&self, v: &mut [f64]) {
        match self {
            Cone::Zero(_) => {}
            _ => self.project(v),
        }
    }
}

/// Scaled lower-triangle vectorization, column by column, with off-diagonal
/// entries multiplied by `√2` so that `svec(A)·svec(B) = Tr(AB)`.
pub fn svec(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut v = Vec::with_capacity(n * (n + 1) / 2);
    for j in 0..n {
        v.push(m[(j, j)]);
        for i in j + 1..n {
            v.push(SQRT_2 * 0.5 * (m[(i, j)] + m[(j, i)]));
        }
    }
    v
}

pub fn smat(v: &[f64], n: usize) -> DMatrix<f64> {
    debug_assert_eq!(v.len(), n * (n + 1) / 2);
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for j in 0..n {
        m[(j, j)] = v[k];
        k += 1;
        for i in j + 1..n {
            let x = v[k] / SQRT_2;
            m[(i, j)] = x;
            m[(j, i)] = x;
            k += 1;
        }
    }
    m
}

/// Position of entry `(i, j)`, `i ≥ j`, inside `svec`.
pub fn svec_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i >= j && i < n);
    j * n - j * j.saturating_sub(1) / 2 + (i - j)
}

fn project_soc(v: &mut [f64]) {
    let t = v[0];
    let norm = v[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm <= t {
        return;
    }
    if norm <= -t {
        v.iter_mut().for_each(|x| *x = 0.0);
        return;
    }
    let a = 0.5 * (t + norm);
    v[0] = a;
    let f = a / norm;
    v[1..].iter_mut().for_each(|x| *x *= f);
}

fn project_psd(v: &mut [f64], n: usize) {
    if n == 1 {
        v[0] = v[0].max(0.0);
        return;
    }
    let m = smat(v, n);
    let eig = SymmetricEigen::new(m);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min >= 0.0 {
        return;
    }
    let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max <= 0.0 {
        v.iter_mut().for_each(|x| *x = 0.0);
        return;
    }
    let mut out = DMatrix::zeros(n, n);
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam > 0.0 {
            let q = eig.eigenvectors.column(k);
            out.ger(lam, &q, &q, 1.0);
        }
    }
    v.copy_from_slice(&svec(&out));
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn svec_is_an_isometry() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 5.0, 3.0, 5.0, 6.0]);
        let b = DMatrix::from_row_slice(3, 3, &[0.5, -1.0, 0.0, -1.0, 2.0, 1.0, 0.0, 1.0, -3.0]);
        let dot: f64 = svec(&a).iter().zip(svec(&b)).map(|(x, y)| x * y).sum();
        assert!((dot - (&a * &b).trace()).abs() < 1e-12);
        assert_eq!(smat(&svec(&a), 3), a);
    }

    #[test]
    fn svec_index_matches_layout() {
        for n in 1..6 {
            let mut k = 0;
            for j in 0..n {
                for i in j..n {
                    assert_eq!(svec_index(n, i, j), k, "n={n} i={i} j={j}");
                    k += 1;
                }
            }
        }
    }

    #[test]
    fn soc_projection_cases() {
        let mut inside = [2.0, 1.0, 1.0];
        Cone::Soc(3).project(&mut inside);
        assert_eq!(inside, [2.0, 1.0, 1.0]);
        let mut polar = [-2.0, 1.0, 0.0];
        Cone::Soc(3).project(&mut polar);
        assert_eq!(polar, [0.0, 0.0, 0.0]);
        let mut v = [0.0, 3.0, 4.0];
        Cone::Soc(3).project(&mut v);
        assert!((v[0] - 2.5).abs() < 1e-15 && (v[1] - 1.5).abs() < 1e-15 && (v[2] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn psd_projection_clips_negative_eigenvalues() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let mut v = svec(&m);
        Cone::Psd(2).project(&mut v);
        let p = smat(&v, 2);
        assert!((p[(0, 0)] - 1.0).abs() < 1e-14 && p[(1, 1)].abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn projections_are_idempotent_and_moreau(vals in proptest::collection::vec(-5.0f64..5.0, 10)) {
            for cone in [Cone::NonNeg(10), Cone::Soc(10), Cone::Psd(4)] {
                let mut p = vals.clone();
                cone.project(&mut p);
                let mut pp = p.clone();
                cone.project(&mut pp);
                for (a, b) in p.iter().zip(&pp) {
                    prop_assert!((a - b).abs() < 1e-9);
                }
                // Moreau: v = Π_K(v) − Π_K(−v), the two parts orthogonal
                let mut neg: Vec<f64> = vals.iter().map(|x| -x).collect();
                cone.project(&mut neg);
                let dot: f64 = p.iter().zip(&neg).map(|(a, b)| a * b).sum();
                prop_assert!(dot.abs() < 1e-8);
                for k in 0..vals.len() {
                    prop_assert!((p[k] - neg[k] - vals[k]).abs() < 1e-9);
                }
            }
        }
    }
}
