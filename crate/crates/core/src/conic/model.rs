//! A thin modeling layer: real affine expressions over the solver's variable
//! vector, complex matrix expressions built from them, and constraint
//! helpers that emit cone segments.

use std::f64::consts::FRAC_1_SQRT_2;
use std::ops::Range;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::cones::{smat, Cone};
use super::sdp::embed_adjoint;
use super::solver::{solve, SolverOptions, SolverResult};
use super::sparse::SparseMatrix;
use super::ConicProgram;
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

/// `constant + Σ coef·x[var]`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Affine {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl Affine {
    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn var(i: usize) -> Self {
        Self { terms: vec![(i, 1.0)], constant: 0.0 }
    }

    pub fn term(i: usize, coef: f64) -> Self {
        Self { terms: vec![(i, coef)], constant: 0.0 }
    }

    pub fn add_scaled(&mut self, other: &Affine, a: f64) {
        if a == 0.0 {
            return;
        }
        self.constant += a * other.constant;
        self.terms.extend(other.terms.iter().map(|(i, c)| (*i, a * c)));
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = Affine::default();
        out.add_scaled(self, a);
        out
    }

    pub fn plus(&self, other: &Affine) -> Self {
        let mut out = self.clone();
        out.add_scaled(other, 1.0);
        out
    }

    pub fn minus(&self, other: &Affine) -> Self {
        let mut out = self.clone();
        out.add_scaled(other, -1.0);
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|(i, c)| c * x[*i]).sum::<f64>()
    }

    /// Merges repeated variables and drops zero coefficients.
    pub fn compact(&mut self) {
        self.terms.sort_by_key(|t| t.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(self.terms.len());
        for &(i, c) in &self.terms {
            match out.last_mut() {
                Some(last) if last.0 == i => last.1 += c,
                _ => out.push((i, c)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        self.terms = out;
    }
}

/// Complex affine scalar `re + i·im`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CAffine {
    pub re: Affine,
    pub im: Affine,
}

impl CAffine {
    pub fn constant(z: Complex64) -> Self {
        Self { re: Affine::constant(z.re), im: Affine::constant(z.im) }
    }

    pub fn real(a: Affine) -> Self {
        Self { re: a, im: Affine::default() }
    }

    /// `self += z·other`.
    pub fn add_scaled(&mut self, other: &CAffine, z: Complex64) {
        self.re.add_scaled(&other.re, z.re);
        self.re.add_scaled(&other.im, -z.im);
        self.im.add_scaled(&other.im, z.re);
        self.im.add_scaled(&other.re, z.im);
    }

    pub fn scaled(&self, z: Complex64) -> Self {
        let mut out = CAffine::default();
        out.add_scaled(self, z);
        out
    }

    pub fn conj(&self) -> Self {
        Self { re: self.re.clone(), im: self.im.scaled(-1.0) }
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        Complex64::new(self.re.eval(x), self.im.eval(x))
    }
}

/// A matrix whose entries are complex affine functions of the variables.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatExpr {
    rows: usize,
    cols: usize,
    entries: Vec<CAffine>,
}

impl CMatExpr {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: vec![CAffine::default(); rows * cols] }
    }

    pub fn constant(m: &ComplexMatrix) -> Self {
        let mut e = Self::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                *e.at_mut(i, j) = CAffine::constant(m[(i, j)]);
            }
        }
        e
    }

    /// `a·1ₙ` for a real affine scalar `a`.
    pub fn scalar_identity(a: &Affine, n: usize) -> Self {
        let mut e = Self::zeros(n, n);
        for i in 0..n {
            *e.at_mut(i, i) = CAffine::real(a.clone());
        }
        e
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, i: usize, j: usize) -> &CAffine {
        &self.entries[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut CAffine {
        &mut self.entries[i * self.cols + j]
    }

    fn zip(&self, other: &Self, f: impl Fn(&CAffine, &CAffine) -> CAffine) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "expression shape mismatch");
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| f(a, b)).collect();
        Self { rows: self.rows, cols: self.cols, entries }
    }

    pub fn plus(&self, other: &Self) -> Self {
        self.zip(other, |a, b| {
            let mut out = a.clone();
            out.add_scaled(b, Complex64::new(1.0, 0.0));
            out
        })
    }

    pub fn minus(&self, other: &Self) -> Self {
        self.zip(other, |a, b| {
            let mut out = a.clone();
            out.add_scaled(b, Complex64::new(-1.0, 0.0));
            out
        })
    }

    pub fn scaled(&self, z: Complex64) -> Self {
        Self { rows: self.rows, cols: self.cols, entries: self.entries.iter().map(|e| e.scaled(z)).collect() }
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                *out.at_mut(j, i) = self.at(i, j).conj();
            }
        }
        out
    }

    /// `[[a, b], [c, d]]`.
    pub fn block2(a: &Self, b: &Self, c: &Self, d: &Self) -> Self {
        assert_eq!(a.rows, b.rows);
        assert_eq!(c.rows, d.rows);
        assert_eq!(a.cols, c.cols);
        assert_eq!(b.cols, d.cols);
        let (r, cl) = (a.rows + c.rows, a.cols + b.cols);
        let mut out = Self::zeros(r, cl);
        for i in 0..r {
            for j in 0..cl {
                let src = match (i < a.rows, j < a.cols) {
                    (true, true) => a.at(i, j),
                    (true, false) => b.at(i, j - a.cols),
                    (false, true) => c.at(i - a.rows, j),
                    (false, false) => d.at(i - a.rows, j - a.cols),
                };
                *out.at_mut(i, j) = src.clone();
            }
        }
        out
    }

    /// `Tr_W` of an expression on `W ⊗ V`.
    pub fn partial_trace_w(&self, dim_w: usize, dim_v: usize) -> Self {
        assert_eq!(self.rows, dim_w * dim_v);
        assert_eq!(self.cols, dim_w * dim_v);
        let mut out = Self::zeros(dim_v, dim_v);
        let one = Complex64::new(1.0, 0.0);
        for i in 0..dim_v {
            for j in 0..dim_v {
                let acc = out.at_mut(i, j);
                for w in 0..dim_w {
                    acc.add_scaled(self.at(w * dim_v + i, w * dim_v + j), one);
                }
            }
        }
        out
    }

    pub fn trace(&self) -> CAffine {
        assert_eq!(self.rows, self.cols);
        let mut acc = CAffine::default();
        for i in 0..self.rows {
            acc.add_scaled(self.at(i, i), Complex64::new(1.0, 0.0));
        }
        acc
    }

    /// `⟨F, X⟩ = Tr(F† X) = Σ conj(F_ij) X_ij`.
    pub fn inner_with(&self, f: &ComplexMatrix) -> CAffine {
        assert_eq!((self.rows, self.cols), f.shape());
        let mut acc = CAffine::default();
        for i in 0..self.rows {
            for j in 0..self.cols {
                let coef = f[(i, j)].conj();
                if coef != Complex64::new(0.0, 0.0) {
                    acc.add_scaled(self.at(i, j), coef);
                }
            }
        }
        acc.re.compact();
        acc.im.compact();
        acc
    }

    pub fn eval(&self, x: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.rows, self.cols, |i, j| self.at(i, j).eval(x))
    }
}

/// Handle to a constraint block, used to read back its dual multiplier.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConstraintId(usize);

#[derive(Clone, Debug)]
enum BlockKind {
    Zero,
    NonNeg,
    Soc,
    PsdReal(usize),
    PsdHermitian(usize),
}

#[derive(Clone, Debug)]
struct Block {
    kind: BlockKind,
    rows: Vec<Affine>,
}

/// Builder for `minimize f(x)` over cone constraints `g_k(x) ∈ K_k`.
#[derive(Clone, Debug, Default)]
pub struct Model {
    nvars: usize,
    objective: Affine,
    blocks: Vec<Block>,
}

impl Model {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.nvars
    }

    pub fn add_vars(&mut self, k: usize) -> Range<usize> {
        let r = self.nvars..self.nvars + k;
        self.nvars += k;
        r
    }

    pub fn add_var(&mut self) -> Affine {
        Affine::var(self.add_vars(1).start)
    }

    /// A Hermitian `n×n` variable in orthonormal coordinates: per row `i`, the
    /// diagonal entry, then `√2·Re` and `√2·Im` of each entry `(i, j > i)`.
    pub fn hermitian(&mut self, n: usize) -> CMatExpr {
        let start = self.add_vars(n * n).start;
        let mut e = CMatExpr::zeros(n, n);
        let mut k = start;
        for i in 0..n {
            *e.at_mut(i, i) = CAffine::real(Affine::var(k));
            k += 1;
            for j in i + 1..n {
                let (a, b) = (k, k + 1);
                k += 2;
                *e.at_mut(i, j) =
                    CAffine { re: Affine::term(a, FRAC_1_SQRT_2), im: Affine::term(b, FRAC_1_SQRT_2) };
                *e.at_mut(j, i) =
                    CAffine { re: Affine::term(a, FRAC_1_SQRT_2), im: Affine::term(b, -FRAC_1_SQRT_2) };
            }
        }
        e
    }

    /// A real symmetric `n×n` variable (same layout as [`Model::hermitian`]
    /// without imaginary coordinates).
    pub fn real_symmetric(&mut self, n: usize) -> CMatExpr {
        let start = self.add_vars(n * (n + 1) / 2).start;
        let mut e = CMatExpr::zeros(n, n);
        let mut k = start;
        for i in 0..n {
            *e.at_mut(i, i) = CAffine::real(Affine::var(k));
            k += 1;
            for j in i + 1..n {
                *e.at_mut(i, j) = CAffine::real(Affine::term(k, FRAC_1_SQRT_2));
                *e.at_mut(j, i) = CAffine::real(Affine::term(k, FRAC_1_SQRT_2));
                k += 1;
            }
        }
        e
    }

    /// A general complex matrix variable (`Re`, `Im` per entry, row-major).
    pub fn complex_matrix(&mut self, rows: usize, cols: usize) -> CMatExpr {
        let start = self.add_vars(2 * rows * cols).start;
        let mut e = CMatExpr::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let k = start + 2 * (i * cols + j);
                *e.at_mut(i, j) = CAffine { re: Affine::var(k), im: Affine::var(k + 1) };
            }
        }
        e
    }

    pub fn real_matrix(&mut self, rows: usize, cols: usize) -> CMatExpr {
        let start = self.add_vars(rows * cols).start;
        let mut e = CMatExpr::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                *e.at_mut(i, j) = CAffine::real(Affine::var(start + i * cols + j));
            }
        }
        e
    }

    pub fn minimize(&mut self, objective: Affine) {
        self.objective = objective;
    }

    fn push(&mut self, kind: BlockKind, rows: Vec<Affine>) -> ConstraintId {
        self.blocks.push(Block { kind, rows });
        ConstraintId(self.blocks.len() - 1)
    }

    /// `rows(x) = 0`.
    pub fn add_zero(&mut self, rows: Vec<Affine>) -> ConstraintId {
        self.push(BlockKind::Zero, rows)
    }

    /// `rows(x) ≥ 0`.
    pub fn add_nonneg(&mut self, rows: Vec<Affine>) -> ConstraintId {
        self.push(BlockKind::NonNeg, rows)
    }

    /// `‖xs‖₂ ≤ t`.
    pub fn add_soc(&mut self, t: Affine, xs: Vec<Affine>) -> ConstraintId {
        let mut rows = Vec::with_capacity(xs.len() + 1);
        rows.push(t);
        rows.extend(xs);
        self.push(BlockKind::Soc, rows)
    }

    /// Both real and imaginary parts of every entry vanish.
    pub fn add_zero_matrix(&mut self, e: &CMatExpr) -> ConstraintId {
        let mut rows = Vec::with_capacity(2 * e.entries.len());
        for a in &e.entries {
            rows.push(a.re.clone());
            rows.push(a.im.clone());
        }
        rows.retain(|r| !r.terms.is_empty() || r.constant != 0.0);
        self.push(BlockKind::Zero, rows)
    }

    /// `Re(e) ⪰ 0` for a real symmetric expression (symmetrized).
    pub fn add_psd_real(&mut self, e: &CMatExpr) -> ConstraintId {
        let n = e.rows;
        assert_eq!(n, e.cols);
        let mut rows = Vec::with_capacity(n * (n + 1) / 2);
        for j in 0..n {
            rows.push(e.at(j, j).re.clone());
            for i in j + 1..n {
                let mut r = e.at(i, j).re.scaled(FRAC_1_SQRT_2);
                r.add_scaled(&e.at(j, i).re, FRAC_1_SQRT_2);
                rows.push(r);
            }
        }
        self.push(BlockKind::PsdReal(n), rows)
    }

    /// `e ⪰ 0` for a Hermitian expression, via the real embedding
    /// `[[Re, −Im], [Im, Re]]` of its Hermitian part.
    pub fn add_psd_hermitian(&mut self, e: &CMatExpr) -> ConstraintId {
        let n = e.rows;
        assert_eq!(n, e.cols);
        let half = Complex64::new(0.5, 0.0);
        // Hermitian part entry (i, j) = (e_ij + conj(e_ji)) / 2
        let herm = |i: usize, j: usize| {
            let mut a = e.at(i, j).scaled(half);
            a.add_scaled(&e.at(j, i).conj(), half);
            a
        };
        let big = 2 * n;
        let entry = |i: usize, j: usize| -> Affine {
            // embedding entry (i, j) of [[A, −B], [B, A]]
            let (bi, bj) = (i / n, j / n);
            let h = herm(i % n, j % n);
            match (bi, bj) {
                (0, 0) | (1, 1) => h.re,
                (0, 1) => h.im.scaled(-1.0),
                _ => h.im,
            }
        };
        let mut rows = Vec::with_capacity(big * (big + 1) / 2);
        for j in 0..big {
            rows.push(entry(j, j));
            for i in j + 1..big {
                rows.push(entry(i, j).scaled(std::f64::consts::SQRT_2));
            }
        }
        self.push(BlockKind::PsdHermitian(n), rows)
    }

    pub fn build(&self) -> Result<ConicProgram> {
        let mut triplets = Vec::new();
        let mut b = Vec::new();
        let mut cones = Vec::new();
        let mut row = 0;
        for block in &self.blocks {
            for r in &block.rows {
                let mut r = r.clone();
                r.compact();
                for (j, coef) in r.terms {
                    triplets.push((row, j, -coef));
                }
                b.push(r.constant);
                row += 1;
            }
            let k = block.rows.len();
            cones.push(match block.kind {
                BlockKind::Zero => Cone::Zero(k),
                BlockKind::NonNeg => Cone::NonNeg(k),
                BlockKind::Soc => Cone::Soc(k),
                BlockKind::PsdReal(n) => Cone::Psd(n),
                BlockKind::PsdHermitian(n) => Cone::Psd(2 * n),
            });
        }
        cones.retain(|c| c.dim() > 0);
        let mut obj = self.objective.clone();
        obj.compact();
        let mut c = vec![0.0; self.nvars];
        for (j, coef) in obj.terms {
            c[j] += coef;
        }
        let a = SparseMatrix::from_triplets(row, self.nvars, &triplets);
        ConicProgram::new(c, a, b, cones)
    }

    pub fn solve(&self, opts: &SolverOptions) -> Result<ModelSolution> {
        let program = self.build()?;
        let result = solve(&program, opts)?;
        let mut offsets = Vec::with_capacity(self.blocks.len());
        let mut row = 0;
        for block in &self.blocks {
            offsets.push(row..row + block.rows.len());
            row += block.rows.len();
        }
        let kinds = self.blocks.iter().map(|b| b.kind.clone()).collect();
        Ok(ModelSolution { result, offset: self.objective.constant, offsets, kinds })
    }
}

/// Solver output together with the layout needed to interpret it.
#[derive(Clone, Debug)]
pub struct ModelSolution {
    pub result: SolverResult,
    offset: f64,
    offsets: Vec<Range<usize>>,
    kinds: Vec<BlockKind>,
}

impl ModelSolution {
    pub fn x(&self) -> &[f64] {
        &self.result.x
    }

    /// Objective at the primal point, including its constant term.
    pub fn primal_value(&self) -> f64 {
        self.result.primal_value + self.offset
    }

    /// Dual objective, including the objective's constant term.
    pub fn dual_value(&self) -> f64 {
        self.result.dual_value + self.offset
    }

    pub fn eval(&self, e: &CMatExpr) -> ComplexMatrix {
        e.eval(&self.result.x)
    }

    pub fn eval_affine(&self, a: &Affine) -> f64 {
        a.eval(&self.result.x)
    }

    pub fn dual(&self, id: ConstraintId) -> &[f64] {
        &self.result.y[self.offsets[id.0].clone()]
    }

    /// Multiplier of a PSD block as a matrix `W` with `Σ yᵢ gᵢ(x) = Re Tr(W·G(x))`.
    pub fn dual_matrix(&self, id: ConstraintId) -> Result<ComplexMatrix> {
        let y = self.dual(id);
        match self.kinds[id.0] {
            BlockKind::PsdReal(n) => Ok(smat(y, n).map(|v| Complex64::new(v, 0.0))),
            BlockKind::PsdHermitian(n) => Ok(embed_adjoint(&smat(y, 2 * n))),
            _ => Err(Error::precondition("constraint is not a PSD block")),
        }
    }
}

/// Real symmetric matrix to complex.
pub fn complexify(m: &DMatrix<f64>) -> ComplexMatrix {
    m.map(|v| Complex64::new(v, 0.0))
}
