//! Seeded random sources shared by the samplers.

use num_complex::Complex64;
use rand::{Rng as _, SeedableRng};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::linalg::{ComplexMatrix, ComplexVector};

pub type Rng = rand_chacha::ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Scalar field of signals and measurement data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    #[default]
    Complex,
}

pub fn gaussian(rng: &mut Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Real and imaginary parts i.i.d. N(0, 1).
pub fn complex_gaussian(rng: &mut Rng) -> Complex64 {
    let re = gaussian(rng);
    let im = gaussian(rng);
    Complex64::new(re, im)
}

pub fn field_gaussian(rng: &mut Rng, field: Field) -> Complex64 {
    match field {
        Field::Real => Complex64::new(gaussian(rng), 0.0),
        Field::Complex => complex_gaussian(rng),
    }
}

pub fn complex_gaussian_matrix(rng: &mut Rng, rows: usize, cols: usize) -> ComplexMatrix {
    gaussian_matrix(rng, rows, cols, Field::Complex)
}

pub fn real_gaussian_matrix(rng: &mut Rng, rows: usize, cols: usize) -> ComplexMatrix {
    gaussian_matrix(rng, rows, cols, Field::Real)
}

/// Row-major fill so that draws are reproducible independent of storage order.
pub fn gaussian_matrix(rng: &mut Rng, rows: usize, cols: usize, field: Field) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = field_gaussian(rng, field);
        }
    }
    m
}

pub fn gaussian_vector(rng: &mut Rng, n: usize, field: Field) -> ComplexVector {
    ComplexVector::from_fn(n, |_, _| field_gaussian(rng, field))
}

/// Uniform on the unit sphere of `Fⁿ`.
pub fn unit_vector(rng: &mut Rng, n: usize, field: Field) -> ComplexVector {
    loop {
        let v = gaussian_vector(rng, n, field);
        let norm = v.norm();
        if norm > 1e-12 {
            return v / Complex64::new(norm, 0.0);
        }
    }
}

/// Hermitian Gaussian (GUE-like) matrix `(G + G†)/2`.
pub fn hermitian_gaussian(rng: &mut Rng, n: usize, field: Field) -> ComplexMatrix {
    let g = gaussian_matrix(rng, n, n, field);
    (&g + g.adjoint()) * Complex64::new(0.5, 0.0)
}
