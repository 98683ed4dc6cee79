//! Phase-transition sweeps: success counts of nuclear- and square-norm
//! recovery as the number of measurements grows.
//!
//! Every trial draws its own ground truth and ensemble from a seed derived
//! from `(master seed, regularizer, m, trial)`, so trials are independent and
//! run in parallel while the output stays deterministic.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use log::{debug, info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::choi::{random_channel, random_group_element, unitary_pair_map, UnitaryGroup};
use crate::conic::{SolverOptions, Status};
use crate::error::{Error, Result};
use crate::linalg::{cr, frobenius, BipartiteOperator, ComplexMatrix};
use crate::measure::{
    add_noise, apply_measurement, deconv_ensemble, deconv_truth, gaussian_ensemble,
    process_tomo_ensemble, rank_one_gaussian_ensemble, structured_ensemble, vector_norm,
    EnsembleKind, MeasurementEnsemble,
};
use crate::recovery::{frobenius_error, recover, RecoveryProblem, Regularizer};
use crate::rng::{gaussian_vector, seeded, Field, Rng};

/// Machine precision used by the `"eps"` noise policy.
pub const MACHINE_EPS: f64 = f64::EPSILON;

/// Column order of the results file.
pub const CSV_HEADER: [&str; 8] =
    ["experiment", "regularizer", "m", "trials", "successes", "mean_frob_error", "median_solve_ms", "seed"];

const MAX_PACKED: usize = 1 << 31;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    UvRetrieval,
    ProcessTomo,
    Deconv,
    LowrankGaussian,
}

impl ExperimentKind {
    pub fn id(self) -> &'static str {
        match self {
            ExperimentKind::UvRetrieval => "uv_retrieval",
            ExperimentKind::ProcessTomo => "process_tomo",
            ExperimentKind::Deconv => "deconv",
            ExperimentKind::LowrankGaussian => "lowrank_gaussian",
        }
    }
}

/// Noise bound: a number, or `"eps"` for `η = eps·‖y‖`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum NoiseBound {
    #[default]
    Eps,
    Value(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum EpsTag {
    Eps,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NoiseBoundRepr {
    Tag(EpsTag),
    Value(f64),
}

impl Serialize for NoiseBound {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            NoiseBound::Eps => NoiseBoundRepr::Tag(EpsTag::Eps),
            NoiseBound::Value(v) => NoiseBoundRepr::Value(v),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for NoiseBound {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(match NoiseBoundRepr::deserialize(d)? {
            NoiseBoundRepr::Tag(EpsTag::Eps) => NoiseBound::Eps,
            NoiseBoundRepr::Value(v) => NoiseBound::Value(v),
        })
    }
}

/// A sweep description. Fields that do not apply to the chosen experiment
/// are ignored; missing ones fall back to the defaults noted below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Local dimension for `uv_retrieval` (default 2) and `process_tomo`
    /// (default 2).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Signal dimension for `deconv` (default 3).
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub big_n: Option<usize>,
    /// Number of input pairs for `deconv` (default `N²`). The map is only
    /// observed on the span of the `Q` inputs `h_q m_qᵀ`: below `N` even the
    /// square norm cannot pin down `U, V`, below `N²` the nuclear norm cannot.
    #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    /// Kraus rank of `process_tomo` truths (default 2).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kraus_rank: Option<usize>,
    /// `[dimW, dimV]` for `lowrank_gaussian` (default `[2, 2]`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<[usize; 2]>,
    /// Rank of `lowrank_gaussian` truths (default 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    /// Group of `U, V` for `uv_retrieval` (default orthogonal) and `deconv`
    /// (default unitary). The orthogonal group makes the problem real.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<UnitaryGroup>,
    /// Field of `lowrank_gaussian` truths and measurements (default complex).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<Field>,
    /// Measurement ensemble override: `gaussian_real`/`gaussian_complex`
    /// for `uv_retrieval` (default `structured_udv`), `rank_one_gaussian`
    /// for `lowrank_gaussian`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleKind>,
    pub m_sweep: Vec<usize>,
    pub trials: usize,
    #[serde(default = "default_threshold")]
    pub success_threshold: f64,
    #[serde(default)]
    pub eta: NoiseBound,
    pub regularizers: Vec<Regularizer>,
    #[serde(default)]
    pub cpt: bool,
    pub seed: u64,
    /// Record solve times; disable for byte-reproducible output.
    #[serde(default = "default_true")]
    pub timing: bool,
    /// Defaults to [`sweep_solver_options`]; a partial object falls back to
    /// the library defaults for the missing keys.
    #[serde(default = "sweep_solver_options")]
    pub solver: SolverOptions,
}

fn default_threshold() -> f64 {
    1e-5
}

fn default_true() -> bool {
    true
}

/// Solver settings for sweeps: tolerance 1e-10 rather than the library's
/// 1e-8. Estimate errors scale with the tolerance times the conditioning of
/// the measurement map, which for deconvolution put errors at 1e-6..1e-5
/// under 1e-8, close enough to the success threshold to flip labels.
pub fn sweep_solver_options() -> SolverOptions {
    SolverOptions { tol: 1e-10, ..SolverOptions::default() }
}

impl ExperimentConfig {
    /// A config with the defaults filled in for everything but the sweep.
    pub fn new(experiment: ExperimentKind, m_sweep: Vec<usize>, trials: usize, seed: u64) -> Self {
        Self {
            experiment,
            n: None,
            big_n: None,
            q: None,
            kraus_rank: None,
            dims: None,
            rank: None,
            group: None,
            field: None,
            ensemble: None,
            m_sweep,
            trials,
            success_threshold: default_threshold(),
            eta: NoiseBound::Eps,
            regularizers: vec![Regularizer::Nuclear, Regularizer::Square],
            cpt: false,
            seed,
            timing: true,
            solver: sweep_solver_options(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 || self.trials >= MAX_PACKED {
            return Err(Error::config(format!("trials must lie in [1, 2^31), got {}", self.trials)));
        }
        if self.m_sweep.is_empty() {
            return Err(Error::config("m sweep is empty"));
        }
        if self.m_sweep[0] == 0 || self.m_sweep.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("m sweep must be positive and strictly increasing"));
        }
        if *self.m_sweep.last().unwrap() >= MAX_PACKED {
            return Err(Error::config("measurement counts must be below 2^31"));
        }
        if self.regularizers.is_empty() {
            return Err(Error::config("no regularizer selected"));
        }
        let mut regs = self.regularizers.clone();
        regs.sort();
        regs.dedup();
        if regs.len() != self.regularizers.len() {
            return Err(Error::config("regularizers listed twice"));
        }
        if !(self.success_threshold > 0.0 && self.success_threshold.is_finite()) {
            return Err(Error::config("success threshold must be positive"));
        }
        if let NoiseBound::Value(eta) = self.eta {
            if !(eta >= 0.0 && eta.is_finite()) {
                return Err(Error::config("eta must be finite and nonnegative"));
            }
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iters == 0 {
            return Err(Error::config("solver needs a positive tolerance and iteration budget"));
        }
        match self.experiment {
            ExperimentKind::UvRetrieval => {
                let n = self.local_dim();
                match self.ensemble.unwrap_or(EnsembleKind::StructuredUdv) {
                    EnsembleKind::StructuredUdv if n == 0 || n % 2 == 1 => {
                        return Err(Error::config("the structured ensemble needs an even n"))
                    }
                    EnsembleKind::StructuredUdv => {}
                    EnsembleKind::GaussianReal | EnsembleKind::GaussianComplex if n > 0 => {}
                    other => return Err(Error::config(format!("ensemble {other:?} is not available for uv_retrieval"))),
                }
            }
            ExperimentKind::ProcessTomo => {
                let n = self.local_dim();
                let r = self.kraus_rank.unwrap_or(2);
                if n == 0 || r == 0 || r > n * n {
                    return Err(Error::config(format!("Kraus rank {r} impossible for n = {n}")));
                }
                self.no_ensemble_override()?;
            }
            ExperimentKind::Deconv => {
                if self.big_n.unwrap_or(3) == 0 || self.q == Some(0) {
                    return Err(Error::config("deconv needs N, Q ≥ 1"));
                }
                self.no_ensemble_override()?;
            }
            ExperimentKind::LowrankGaussian => {
                let [dw, dv] = self.dims.unwrap_or([2, 2]);
                let r = self.rank.unwrap_or(1);
                if dw == 0 || dv == 0 || r == 0 || r > dw * dv {
                    return Err(Error::config(format!("rank {r} impossible on {dw}x{dv}")));
                }
                match self.ensemble {
                    None | Some(EnsembleKind::GaussianReal | EnsembleKind::GaussianComplex) => {}
                    Some(EnsembleKind::RankOneGaussian) if self.lowrank_field() == Field::Complex => {}
                    Some(other) => {
                        return Err(Error::config(format!("ensemble {other:?} is not available for lowrank_gaussian")))
                    }
                }
            }
        }
        Ok(())
    }

    fn no_ensemble_override(&self) -> Result<()> {
        match self.ensemble {
            None => Ok(()),
            Some(k) => Err(Error::config(format!("{} has a fixed ensemble, got {k:?}", self.experiment.id()))),
        }
    }

    fn local_dim(&self) -> usize {
        self.n.unwrap_or(2)
    }

    fn lowrank_field(&self) -> Field {
        match self.ensemble {
            Some(EnsembleKind::GaussianReal) => Field::Real,
            Some(EnsembleKind::GaussianComplex) => Field::Complex,
            _ => self.field.unwrap_or_default(),
        }
    }

    /// Field of the Choi matrices recovered in this experiment.
    pub fn recovery_field(&self) -> Field {
        match self.experiment {
            ExperimentKind::UvRetrieval | ExperimentKind::Deconv => {
                let default = if self.experiment == ExperimentKind::UvRetrieval {
                    UnitaryGroup::Orthogonal
                } else {
                    UnitaryGroup::Unitary
                };
                match self.group.unwrap_or(default) {
                    UnitaryGroup::Orthogonal => Field::Real,
                    UnitaryGroup::Unitary => Field::Complex,
                }
            }
            ExperimentKind::ProcessTomo => Field::Complex,
            ExperimentKind::LowrankGaussian => self.lowrank_field(),
        }
    }

    fn group(&self) -> UnitaryGroup {
        match self.recovery_field() {
            Field::Real => UnitaryGroup::Orthogonal,
            Field::Complex => UnitaryGroup::Unitary,
        }
    }
}

/// One CSV line: aggregate of all trials at a given `(regularizer, m)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub regularizer: Regularizer,
    pub m: usize,
    pub trials: usize,
    pub successes: usize,
    /// Mean over trials that returned an estimate; NaN if none did.
    pub mean_frob_error: f64,
    /// Zero when timing is disabled.
    pub median_solve_ms: f64,
    /// Master seed of the sweep.
    pub seed: u64,
}

impl ResultRow {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub regularizer: Regularizer,
    pub m: usize,
    pub trial: usize,
    pub seed: u64,
    /// `None` when drawing or solving failed.
    pub frob_error: Option<f64>,
    pub status: Option<Status>,
    pub solve_ms: f64,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub rows: Vec<ResultRow>,
    pub trials: Vec<TrialOutcome>,
    /// Trials whose draw or solve returned an error.
    pub failed_trials: usize,
}

impl ExperimentOutcome {
    pub fn row(&self, regularizer: Regularizer, m: usize) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.regularizer == regularizer && r.m == m)
    }

    pub fn successes(&self, regularizer: Regularizer) -> Vec<usize> {
        self.rows.iter().filter(|r| r.regularizer == regularizer).map(|r| r.successes).collect()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-trial seed: `splitmix64(pack ⊕ splitmix64(master))` with
/// `pack = reg << 62 | m << 31 | trial` (`reg` = 0 nuclear, 1 square).
///
/// Every step is a bijection on `u64`, so seeds are distinct for distinct
/// `(regularizer, m, trial)` with `m, trial < 2^31` under one master seed.
/// Larger values are reduced mod `2^31`.
pub fn derive_trial_seed(master: u64, regularizer: Regularizer, m: usize, trial: usize) -> u64 {
    let reg = match regularizer {
        Regularizer::Nuclear => 0u64,
        Regularizer::Square => 1u64,
    };
    let mask = (MAX_PACKED - 1) as u64;
    let pack = (reg << 62) | ((m as u64 & mask) << 31) | (trial as u64 & mask);
    splitmix64(pack ^ splitmix64(master))
}

/// Ground truth and ensemble of one trial.
pub struct TrialInstance {
    pub truth: BipartiteOperator,
    pub ensemble: MeasurementEnsemble,
}

/// Draws the truth, then the ensemble, from `rng`.
pub fn draw_instance(cfg: &ExperimentConfig, m: usize, rng: &mut Rng) -> Result<TrialInstance> {
    let field = cfg.recovery_field();
    match cfg.experiment {
        ExperimentKind::UvRetrieval => {
            let n = cfg.local_dim();
            let u = random_group_element(n, cfg.group(), rng);
            let v = random_group_element(n, cfg.group(), rng);
            let truth = unitary_pair_map(&u, &v)?.choi;
            let ensemble = match cfg.ensemble.unwrap_or(EnsembleKind::StructuredUdv) {
                EnsembleKind::GaussianReal => gaussian_ensemble(m, (n, n), Field::Real, rng)?,
                EnsembleKind::GaussianComplex => gaussian_ensemble(m, (n, n), Field::Complex, rng)?,
                _ => structured_ensemble(m, n, rng, cfg.group())?,
            };
            Ok(TrialInstance { truth, ensemble })
        }
        ExperimentKind::ProcessTomo => {
            let n = cfg.local_dim();
            let truth = random_channel(n, n, cfg.kraus_rank.unwrap_or(2), rng)?.choi;
            let ensemble = process_tomo_ensemble(m, (n, n), rng)?;
            Ok(TrialInstance { truth, ensemble })
        }
        ExperimentKind::Deconv => {
            let n = cfg.big_n.unwrap_or(3);
            let q = cfg.q.unwrap_or(n * n);
            let u = random_group_element(n, cfg.group(), rng);
            let v = random_group_element(n, cfg.group(), rng);
            let truth = deconv_truth(&u, &v)?.choi;
            let mut ensemble = deconv_ensemble(n, m.div_ceil(q), q, rng)?;
            ensemble.truncate(m)?;
            Ok(TrialInstance { truth, ensemble })
        }
        ExperimentKind::LowrankGaussian => {
            let [dw, dv] = cfg.dims.unwrap_or([2, 2]);
            let truth = lowrank_truth(dw, dv, cfg.rank.unwrap_or(1), field, rng)?;
            let ensemble = match cfg.ensemble {
                Some(EnsembleKind::RankOneGaussian) => rank_one_gaussian_ensemble(m, (dw, dv), rng)?,
                _ => gaussian_ensemble(m, (dw, dv), field, rng)?,
            };
            Ok(TrialInstance { truth, ensemble })
        }
    }
}

/// Unit-Frobenius rank-`r` truth: Hermitian PSD `Σ a_k a_k†` over ℂ, a
/// general `Σ a_k b_kᵀ` over ℝ.
pub fn lowrank_truth(dw: usize, dv: usize, r: usize, field: Field, rng: &mut Rng) -> Result<BipartiteOperator> {
    let n = dw * dv;
    let mut x = ComplexMatrix::zeros(n, n);
    for _ in 0..r {
        let a = gaussian_vector(rng, n, field);
        match field {
            Field::Complex => x += &a * a.adjoint(),
            Field::Real => x += &a * gaussian_vector(rng, n, field).transpose(),
        }
    }
    let s = frobenius(&x);
    BipartiteOperator::new(x * cr(1.0 / s), dw, dv)
}

fn run_trial(cfg: &ExperimentConfig, regularizer: Regularizer, m: usize, trial: usize) -> TrialOutcome {
    let seed = derive_trial_seed(cfg.seed, regularizer, m, trial);
    let mut out = TrialOutcome { regularizer, m, trial, seed, frob_error: None, status: None, solve_ms: 0.0 };
    let attempt = || -> Result<(f64, Status, f64)> {
        let mut rng = seeded(seed);
        let inst = draw_instance(cfg, m, &mut rng)?;
        let clean = apply_measurement(&inst.ensemble, &inst.truth)?;
        let (y, eta) = match cfg.eta {
            NoiseBound::Eps => {
                let eta = MACHINE_EPS * vector_norm(&clean);
                (clean, eta)
            }
            NoiseBound::Value(eta) => {
                let real = cfg.recovery_field() == Field::Real;
                (add_noise(&clean, eta, real, &mut rng)?.0, eta)
            }
        };
        let p = RecoveryProblem::new(inst.ensemble, y, eta, regularizer, cfg.cpt, cfg.recovery_field())?;
        let r = recover(&p, &cfg.solver)?;
        Ok((frobenius_error(&r.estimate, &inst.truth)?, r.status, r.solve_ms))
    };
    match attempt() {
        Ok((err, status, ms)) => {
            if status != Status::Optimal {
                debug!("{} {} m={m} trial={trial}: solver stopped with {status:?}", cfg.experiment.id(), regularizer.name());
            }
            out.frob_error = Some(err);
            out.status = Some(status);
            out.solve_ms = if cfg.timing { ms } else { 0.0 };
        }
        Err(e) => warn!("{} {} m={m} trial={trial} failed: {e}", cfg.experiment.id(), regularizer.name()),
    }
    out
}

/// Runs the sweep on the current rayon pool. Rows are ordered by
/// regularizer (as listed), then `m`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let tasks: Vec<(Regularizer, usize, usize)> = cfg
        .regularizers
        .iter()
        .flat_map(|&r| cfg.m_sweep.iter().flat_map(move |&m| (0..cfg.trials).map(move |t| (r, m, t))))
        .collect();
    info!("{}: {} trials", cfg.experiment.id(), tasks.len());
    let trials: Vec<TrialOutcome> = tasks.par_iter().map(|&(r, m, t)| run_trial(cfg, r, m, t)).collect();
    let rows = trials.chunks(cfg.trials).map(|chunk| aggregate(cfg, chunk)).collect();
    let failed_trials = trials.iter().filter(|t| t.frob_error.is_none()).count();
    Ok(ExperimentOutcome { rows, trials, failed_trials })
}

fn aggregate(cfg: &ExperimentConfig, chunk: &[TrialOutcome]) -> ResultRow {
    let errors: Vec<f64> = chunk.iter().filter_map(|t| t.frob_error).collect();
    let successes = errors.iter().filter(|&&e| e <= cfg.success_threshold).count();
    let mean = if errors.is_empty() { f64::NAN } else { errors.iter().sum::<f64>() / errors.len() as f64 };
    let mut times: Vec<f64> = chunk.iter().filter(|t| t.frob_error.is_some()).map(|t| t.solve_ms).collect();
    times.sort_by(f64::total_cmp);
    let median = match times.len() {
        0 => 0.0,
        k if k % 2 == 1 => times[k / 2],
        k => 0.5 * (times[k / 2 - 1] + times[k / 2]),
    };
    let row = ResultRow {
        experiment: cfg.experiment.id().to_string(),
        regularizer: chunk[0].regularizer,
        m: chunk[0].m,
        trials: chunk.len(),
        successes,
        mean_frob_error: mean,
        median_solve_ms: median,
        seed: cfg.seed,
    };
    info!("{} {} m={}: {}/{}", row.experiment, row.regularizer.name(), row.m, row.successes, row.trials);
    row
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::config(format!("csv: {other:?}")),
    }
}

/// Writes the rows in the fixed column order. Errors use six significant
/// decimals in scientific notation, times three decimals.
pub fn write_csv_to<W: Write>(rows: &[ResultRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(CSV_HEADER).map_err(csv_error)?;
    for r in rows {
        wr.write_record([
            r.experiment.clone(),
            r.regularizer.name().to_string(),
            r.m.to_string(),
            r.trials.to_string(),
            r.successes.to_string(),
            format!("{:.6e}", r.mean_frob_error),
            format!("{:.3}", r.median_solve_ms),
            r.seed.to_string(),
        ])
        .map_err(csv_error)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_csv(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    write_csv_to(rows, File::create(path)?)
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let mut rd = csv::Reader::from_path(path).map_err(csv_error)?;
    let header = rd.headers().map_err(csv_error)?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::config(format!("unexpected header {header:?}")));
    }
    rd.deserialize().map(|r| r.map_err(csv_error)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn tiny(kind: ExperimentKind, m: Vec<usize>, trials: usize) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(kind, m, trials, 7);
        cfg.timing = false;
        cfg
    }

    #[test]
    fn seeds_are_stable_and_distinct() {
        let a = derive_trial_seed(1, Regularizer::Nuclear, 10, 3);
        assert_eq!(a, derive_trial_seed(1, Regularizer::Nuclear, 10, 3));
        assert_ne!(a, derive_trial_seed(1, Regularizer::Nuclear, 10, 4));
        assert_ne!(a, derive_trial_seed(1, Regularizer::Square, 10, 3));
        assert_ne!(a, derive_trial_seed(2, Regularizer::Nuclear, 10, 3));
        // pinned so that a change of the mixing function is noticed
        assert_eq!(derive_trial_seed(0, Regularizer::Nuclear, 0, 0), splitmix64(splitmix64(0)));
    }

    #[test]
    fn no_seed_collisions_in_a_large_scan() {
        let mut seen = HashSet::new();
        for reg in [Regularizer::Nuclear, Regularizer::Square] {
            for m in 0..250 {
                for t in 0..200 {
                    assert!(seen.insert(derive_trial_seed(42, reg, m, t)));
                }
            }
        }
        assert_eq!(seen.len(), 100_000);
    }

    #[test]
    fn config_json_uses_spec_names_and_eps_tag() {
        let cfg = ExperimentConfig::from_json(
            r#"{"experiment":"deconv","N":3,"Q":2,"m_sweep":[4,6],"trials":2,"eta":"eps",
                "regularizers":["square"],"seed":5}"#,
        )
        .unwrap();
        assert_eq!(cfg.big_n, Some(3));
        assert_eq!(cfg.eta, NoiseBound::Eps);
        assert_eq!(cfg.success_threshold, 1e-5);
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        let v = ExperimentConfig::from_json(
            r#"{"experiment":"uv_retrieval","m_sweep":[4],"trials":1,"eta":0.01,"regularizers":["nuclear"],"seed":1}"#,
        )
        .unwrap();
        assert_eq!(v.eta, NoiseBound::Value(0.01));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let base = tiny(ExperimentKind::UvRetrieval, vec![4, 6], 2);
        let mut c = base.clone();
        c.trials = 0;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.m_sweep = vec![];
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.m_sweep = vec![6, 6];
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.n = Some(3);
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.regularizers = vec![Regularizer::Square, Regularizer::Square];
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.eta = NoiseBound::Value(-1.0);
        assert!(c.validate().is_err());
        assert!(ExperimentConfig::from_json(r#"{"experiment":"deconv","bogus":1}"#).is_err());
    }

    #[test]
    fn complete_measurements_succeed_for_both_regularizers() {
        // 16 real unknowns for a real 2⊗2 Choi matrix
        let mut cfg = tiny(ExperimentKind::LowrankGaussian, vec![16], 1);
        cfg.field = Some(Field::Real);
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.failed_trials, 0);
        for r in &out.rows {
            assert_eq!(r.successes, 1, "{r:?}");
        }
    }

    #[test]
    fn identical_seeds_give_identical_bytes() {
        let cfg = tiny(ExperimentKind::UvRetrieval, vec![6, 12], 2);
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_csv_to(&run_experiment(&cfg).unwrap().rows, &mut a).unwrap();
        write_csv_to(&run_experiment(&cfg).unwrap().rows, &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.starts_with("experiment,regularizer,m,trials,successes,mean_frob_error,median_solve_ms,seed\n"));
    }

    #[test]
    fn rows_are_ordered_and_bounded() {
        let cfg = tiny(ExperimentKind::ProcessTomo, vec![8, 12], 2);
        let out = run_experiment(&cfg).unwrap();
        let keys: Vec<_> = out.rows.iter().map(|r| (r.regularizer, r.m)).collect();
        assert_eq!(
            keys,
            vec![(Regularizer::Nuclear, 8), (Regularizer::Nuclear, 12), (Regularizer::Square, 8), (Regularizer::Square, 12)]
        );
        assert!(out.rows.iter().all(|r| r.successes <= r.trials && r.trials == 2));
        assert!(out.trials.windows(2).all(|w| (w[0].regularizer, w[0].m, w[0].trial) < (w[1].regularizer, w[1].m, w[1].trial)));
    }

    #[test]
    fn deconv_instance_sizes_follow_m() {
        let mut cfg = tiny(ExperimentKind::Deconv, vec![5], 1);
        cfg.q = Some(2);
        let inst = draw_instance(&cfg, 5, &mut seeded(3)).unwrap();
        assert_eq!(inst.ensemble.m(), 5);
        assert_eq!((inst.truth.dim_w, inst.truth.dim_v), (3, 3));
    }

    #[test]
    fn csv_round_trip_and_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        write_csv(&[], &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), CSV_HEADER.join(",") + "\n");
        assert!(read_csv(&path).unwrap().is_empty());

        let rows = vec![
            ResultRow {
                experiment: "uv_retrieval".into(),
                regularizer: Regularizer::Square,
                m: 12,
                trials: 20,
                successes: 17,
                mean_frob_error: 1.25e-3,
                median_solve_ms: 4.5,
                seed: 99,
            },
            ResultRow {
                experiment: "uv_retrieval".into(),
                regularizer: Regularizer::Nuclear,
                m: 14,
                trials: 20,
                successes: 0,
                mean_frob_error: f64::NAN,
                median_solve_ms: 0.0,
                seed: 99,
            },
        ];
        let path = dir.path().join("rows.csv");
        write_csv(&rows, &path).unwrap();
        let back = read_csv(&path).unwrap();
        assert_eq!(back[0], rows[0]);
        assert!(back[1].mean_frob_error.is_nan());
        let again = dir.path().join("again.csv");
        write_csv(&back, &again).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
    }

    #[test]
    fn read_csv_rejects_wrong_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "m,trials\n1,2\n").unwrap();
        assert!(read_csv(&path).is_err());
    }
}
