//! JSON interchange formats.
//!
//! Matrices are `{"rows": r, "cols": c, "data": [[re, im], ...]}` in
//! row-major order; bipartite operators and Choi matrices add `dimW` and
//! `dimV`; Kraus sets are arrays of matrices.

use std::path::Path;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::choi::{KrausSet, OperatorMap, UnitaryGroup};
use crate::conic::{Residuals, Status};
use crate::error::{Error, Result};
use crate::linalg::{c, is_finite, nuclear_norm, BipartiteOperator, ComplexMatrix};
use crate::measure::{EnsembleKind, EnsembleSpec, MeasurementEnsemble};
use crate::norms::SquareNormReport;
use crate::recovery::{RecoveryProblem, RecoveryResult, Regularizer};
use crate::rng::Field;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixJson {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        let (rows, cols) = m.shape();
        let data = (0..rows).flat_map(|i| (0..cols).map(move |j| [m[(i, j)].re, m[(i, j)].im])).collect();
        Self { rows, cols, data }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::shape(format!(
                "{} entries for a {}x{} matrix",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        let m = ComplexMatrix::from_fn(self.rows, self.cols, |i, j| {
            let [re, im] = self.data[i * self.cols + j];
            c(re, im)
        });
        if !is_finite(&m) {
            return Err(Error::NonFinite);
        }
        Ok(m)
    }
}

/// A matrix with optional tensor-factor dimensions. Missing dimensions are
/// supplied by the caller (for instance from the command line).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BipartiteJson {
    #[serde(flatten)]
    pub matrix: MatrixJson,
    #[serde(rename = "dimW", default, skip_serializing_if = "Option::is_none")]
    pub dim_w: Option<usize>,
    #[serde(rename = "dimV", default, skip_serializing_if = "Option::is_none")]
    pub dim_v: Option<usize>,
}

impl BipartiteJson {
    pub fn from_operator(x: &BipartiteOperator) -> Self {
        Self { matrix: MatrixJson::from_matrix(&x.mat), dim_w: Some(x.dim_w), dim_v: Some(x.dim_v) }
    }

    /// `dims` overrides the stored dimensions.
    pub fn to_operator(&self, dims: Option<(usize, usize)>) -> Result<BipartiteOperator> {
        let (dw, dv) = match (dims, self.dim_w, self.dim_v) {
            (Some(d), _, _) => d,
            (None, Some(a), Some(b)) => (a, b),
            _ => return Err(Error::config("bipartite operator needs dimW and dimV")),
        };
        BipartiteOperator::new(self.matrix.to_matrix()?, dw, dv)
    }
}

pub fn map_to_json(m: &OperatorMap) -> BipartiteJson {
    BipartiteJson::from_operator(&m.choi)
}

pub fn map_from_json(j: &BipartiteJson) -> Result<OperatorMap> {
    Ok(OperatorMap::from_choi(j.to_operator(None)?))
}

pub fn kraus_to_json(k: &KrausSet) -> Vec<MatrixJson> {
    k.operators.iter().map(MatrixJson::from_matrix).collect()
}

pub fn kraus_from_json(ops: &[MatrixJson]) -> Result<KrausSet> {
    KrausSet::new(ops.iter().map(MatrixJson::to_matrix).collect::<Result<_>>()?)
}

fn complex_to_pairs(v: &[Complex64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn pairs_to_complex(v: &[[f64; 2]]) -> Vec<Complex64> {
    v.iter().map(|&[re, im]| c(re, im)).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SquareNormReportJson {
    pub dim_w: usize,
    pub dim_v: usize,
    pub value: f64,
    /// `value / dimV`, the diamond norm of the map with this Choi matrix.
    pub diamond: f64,
    pub nuclear: f64,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub status: Status,
    pub iterations: usize,
    pub primal_z: MatrixJson,
    pub rho: MatrixJson,
    pub sigma: MatrixJson,
    pub dual_y: MatrixJson,
    pub dual_z: MatrixJson,
}

impl SquareNormReportJson {
    pub fn new(x: &BipartiteOperator, r: &SquareNormReport) -> Self {
        Self {
            dim_w: x.dim_w,
            dim_v: x.dim_v,
            value: r.value,
            diamond: r.value / x.dim_v as f64,
            nuclear: nuclear_norm(&x.mat),
            primal_value: r.primal_value,
            dual_value: r.dual_value,
            gap: r.gap,
            status: r.status,
            iterations: r.iterations,
            primal_z: MatrixJson::from_matrix(&r.primal_z),
            rho: MatrixJson::from_matrix(&r.rho),
            sigma: MatrixJson::from_matrix(&r.sigma),
            dual_y: MatrixJson::from_matrix(&r.dual_y),
            dual_z: MatrixJson::from_matrix(&r.dual_z),
        }
    }
}

/// An ensemble given either by seed (any drawn kind) or by explicit
/// functionals `F_i` with `𝒜(X)_i = Tr(F_i† X)` (`kind = "explicit"`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleJson {
    pub kind: EnsembleKind,
    pub dims: [usize; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<UnitaryGroup>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functionals: Option<Vec<MatrixJson>>,
}

impl EnsembleJson {
    pub fn from_spec(s: &EnsembleSpec) -> Self {
        Self {
            kind: s.kind,
            dims: s.dims,
            m: Some(s.m),
            seed: Some(s.seed),
            group: s.group,
            q: s.q,
            functionals: None,
        }
    }

    /// Exports the materialized functionals for external verification.
    pub fn explicit(e: &MeasurementEnsemble) -> Self {
        Self {
            kind: EnsembleKind::Explicit,
            dims: [e.dim_w, e.dim_v],
            m: Some(e.m()),
            seed: None,
            group: None,
            q: None,
            functionals: Some(e.functionals.iter().map(MatrixJson::from_matrix).collect()),
        }
    }

    pub fn materialize(&self) -> Result<MeasurementEnsemble> {
        let [dw, dv] = self.dims;
        if self.kind == EnsembleKind::Explicit {
            let fs = self.functionals.as_ref().ok_or_else(|| Error::config("explicit ensemble without functionals"))?;
            let fs = fs.iter().map(MatrixJson::to_matrix).collect::<Result<Vec<_>>>()?;
            if self.m.is_some_and(|m| m != fs.len()) {
                return Err(Error::config("m disagrees with the number of functionals"));
            }
            return MeasurementEnsemble::from_functionals(dw, dv, fs);
        }
        if self.functionals.is_some() {
            return Err(Error::config("functionals are only accepted for kind \"explicit\""));
        }
        let spec = EnsembleSpec {
            kind: self.kind,
            m: self.m.ok_or_else(|| Error::config("seeded ensemble needs m"))?,
            dims: self.dims,
            seed: self.seed.ok_or_else(|| Error::config("seeded ensemble needs seed"))?,
            group: self.group,
            q: self.q,
        };
        spec.materialize()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoveryProblemJson {
    pub ensemble: EnsembleJson,
    pub y: Vec<[f64; 2]>,
    #[serde(default)]
    pub eta: f64,
    pub regularizer: Regularizer,
    #[serde(default)]
    pub cpt: bool,
    #[serde(default)]
    pub field: Field,
    /// Optional ground truth; the result then reports the Frobenius error.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<BipartiteJson>,
}

impl RecoveryProblemJson {
    pub fn new(p: &RecoveryProblem, ensemble: EnsembleJson, truth: Option<&BipartiteOperator>) -> Self {
        Self {
            ensemble,
            y: complex_to_pairs(&p.y),
            eta: p.eta,
            regularizer: p.regularizer,
            cpt: p.cpt,
            field: p.field,
            truth: truth.map(BipartiteJson::from_operator),
        }
    }

    pub fn to_problem(&self) -> Result<(RecoveryProblem, Option<BipartiteOperator>)> {
        let e = self.ensemble.materialize()?;
        let dims = (e.dim_w, e.dim_v);
        let p = RecoveryProblem::new(e, pairs_to_complex(&self.y), self.eta, self.regularizer, self.cpt, self.field)?;
        let truth = self.truth.as_ref().map(|t| t.to_operator(Some(dims))).transpose()?;
        Ok((p, truth))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecoveryResultJson {
    pub estimate: BipartiteJson,
    pub objective: f64,
    pub status: Status,
    pub iterations: usize,
    pub residuals: Residuals,
    pub data_misfit: f64,
    pub eta_used: f64,
    pub solve_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frob_error: Option<f64>,
}

impl From<&RecoveryResult> for RecoveryResultJson {
    fn from(r: &RecoveryResult) -> Self {
        Self {
            estimate: BipartiteJson::from_operator(&r.estimate),
            objective: r.objective,
            status: r.status,
            iterations: r.iterations,
            residuals: r.residuals,
            data_misfit: r.data_misfit,
            eta_used: r.eta_used,
            solve_ms: r.solve_ms,
            frob_error: r.frob_error,
        }
    }
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
