//! Low-rank recovery of matrices and linear maps with square-norm
//! (diamond-norm) regularization.
//!
//! The crate bundles a small first-order conic solver ([`conic`]), the
//! square/diamond norm and its extremality theory ([`norms`]), measurement
//! ensembles ([`measure`]), the recovery programs ([`recovery`]), a sweep
//! runner ([`harness`]) and sampled descent-cone checks ([`geometry`]).

pub mod choi;
pub mod conic;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod measure;
pub mod norms;
pub mod recovery;
pub mod rng;

pub use error::{Error, Result};
pub use linalg::{BipartiteOperator, ComplexMatrix, ComplexVector};
pub use rng::Field;
