//! A first-order conic solver and the modeling helpers built on it.
//!
//! Programs are stated as
//!
//! ```text
//! minimize  cᵀx   subject to  A x + s = b,  s ∈ K
//! ```
//!
//! with `K` a product of zero, nonnegative, second-order and PSD cones. The
//! dual is `maximize −bᵀy  subject to  Aᵀy + c = 0,  y ∈ K*`.

mod cones;
mod kkt;
pub mod model;
pub mod sdp;
mod solver;
mod sparse;

use std::io::Write;

pub use cones::{smat, svec, svec_index, Cone};
pub use kkt::{verify_kkt, KktReport};
pub use sdp::{
    build_standard_sdp, embed_adjoint, embed_complex, hmat, hvec, verify_sdp_kkt, HermitianMap,
    SdpKktReport, SdpSolution, StandardSdp,
};
pub use solver::{solve, Residuals, SolverOptions, SolverResult, Status};
pub use sparse::SparseMatrix;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ConicProgram {
    pub c: Vec<f64>,
    pub a: SparseMatrix,
    pub b: Vec<f64>,
    pub cones: Vec<Cone>,
}

impl ConicProgram {
    pub fn new(c: Vec<f64>, a: SparseMatrix, b: Vec<f64>, cones: Vec<Cone>) -> Result<Self> {
        let p = Self { c, a, b, cones };
        p.validate()?;
        Ok(p)
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn num_rows(&self) -> usize {
        self.b.len()
    }

    pub fn validate(&self) -> Result<()> {
        let rows: usize = self.cones.iter().map(Cone::dim).sum();
        if rows != self.b.len() || self.a.nrows() != self.b.len() {
            return Err(Error::shape(format!(
                "cones cover {rows} rows, b has {}, A has {}",
                self.b.len(),
                self.a.nrows()
            )));
        }
        if self.a.ncols() != self.c.len() {
            return Err(Error::shape(format!(
                "A has {} columns but c has {} entries",
                self.a.ncols(),
                self.c.len()
            )));
        }
        if self.cones.iter().any(|k| matches!(k, Cone::Soc(0))) {
            return Err(Error::shape("second-order cone of dimension 0"));
        }
        let finite = self.c.iter().chain(&self.b).all(|v| v.is_finite())
            && self.a.triplets().all(|(_, _, v)| v.is_finite());
        if !finite {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    /// Row ranges of the cone segments, in order.
    pub fn segments(&self) -> Vec<(Cone, std::ops::Range<usize>)> {
        let mut start = 0;
        self.cones
            .iter()
            .map(|k| {
                let r = start..start + k.dim();
                start = r.end;
                (*k, r)
            })
            .collect()
    }

    /// Plain-text dump for cross-checking with other solvers.
    ///
    /// Layout: a `dims n m` line, one `cone <kind> <size>` line per segment,
    /// then `c j v`, `b i v` and `A i j v` lines (zero-based indices, values
    /// printed with 17 significant digits).
    pub fn write_triplets<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "dims {} {}", self.num_vars(), self.num_rows())?;
        for k in &self.cones {
            let (kind, size) = match *k {
                Cone::Zero(n) => ("zero", n),
                Cone::NonNeg(n) => ("nonneg", n),
                Cone::Soc(n) => ("soc", n),
                Cone::Psd(n) => ("psd", n),
            };
            writeln!(w, "cone {kind} {size}")?;
        }
        for (j, v) in self.c.iter().enumerate().filter(|(_, v)| **v != 0.0) {
            writeln!(w, "c {j} {v:.16e}")?;
        }
        for (i, v) in self.b.iter().enumerate().filter(|(_, v)| **v != 0.0) {
            writeln!(w, "b {i} {v:.16e}")?;
        }
        for (i, j, v) in self.a.triplets() {
            writeln!(w, "A {i} {j} {v:.16e}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_catches_row_mismatch() {
        let a = SparseMatrix::from_triplets(2, 1, &[(0, 0, 1.0), (1, 0, 1.0)]);
        assert!(ConicProgram::new(vec![1.0], a.clone(), vec![0.0, 0.0], vec![Cone::NonNeg(1)]).is_err());
        assert!(ConicProgram::new(vec![1.0], a, vec![0.0, 0.0], vec![Cone::NonNeg(2)]).is_ok());
    }

    #[test]
    fn triplet_dump_lists_every_entry() {
        let a = SparseMatrix::from_triplets(3, 1, &[(0, 0, -1.0), (2, 0, -1.0)]);
        let p = ConicProgram::new(vec![1.0], a, vec![0.0, 1.0, 0.0], vec![Cone::Psd(2)]).unwrap();
        let mut out = Vec::new();
        p.write_triplets(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("dims 1 3\ncone psd 2\n"));
        assert_eq!(text.lines().filter(|l| l.starts_with("A ")).count(), 2);
        assert_eq!(text.lines().filter(|l| l.starts_with("b ")).count(), 1);
    }
}
