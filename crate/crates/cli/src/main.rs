use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use log::info;

use diamondrec::conic::SolverOptions;
use diamondrec::geometry::{self, SUITES};
use diamondrec::harness::{self, ExperimentConfig};
use diamondrec::io::{self, BipartiteJson, RecoveryProblemJson, RecoveryResultJson, SquareNormReportJson};
use diamondrec::norms;
use diamondrec::recovery;

#[derive(Parser)]
#[command(name = "diamondrec", version, about = "Square-norm regularized low-rank recovery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the square norm of a bipartite operator.
    Norm {
        #[arg(long)]
        input: PathBuf,
        /// Override the factor dimensions (dimW dimV).
        #[arg(long, num_args = 2, value_names = ["DIM_W", "DIM_V"])]
        dims: Option<Vec<usize>>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Write the report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Solve a single recovery problem.
    Recover {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a phase-transition sweep and write a CSV.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run a sampled descent-cone check suite.
    Geomtest {
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(SUITES))]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Norm { input, dims, tol, report } => {
            if !(tol > 0.0) {
                bail!("--tol must be positive");
            }
            let j: BipartiteJson = io::read_json(&input).with_context(|| format!("reading {}", input.display()))?;
            let dims = dims.map(|d| (d[0], d[1]));
            let x = j.to_operator(dims)?;
            let opts = SolverOptions { tol, ..SolverOptions::default() };
            let r = norms::square_norm_with(&x, &opts)?;
            let out = SquareNormReportJson::new(&x, &r);
            match report {
                Some(path) => io::write_json(&out, &path)?,
                None => println!("{}", serde_json::to_string_pretty(&out)?),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Recover { problem, out } => {
            let j: RecoveryProblemJson =
                io::read_json(&problem).with_context(|| format!("reading {}", problem.display()))?;
            let (p, truth) = j.to_problem()?;
            let mut r = recovery::recover(&p, &SolverOptions::default())?;
            if let Some(t) = truth {
                r = r.with_truth(&t)?;
            }
            info!("status {:?}, objective {:.6e}, {} iterations", r.status, r.objective, r.iterations);
            io::write_json(&RecoveryResultJson::from(&r), &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Experiment { config, out, threads } => {
            let text = std::fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let cfg = ExperimentConfig::from_json(&text)?;
            let mut pool = rayon::ThreadPoolBuilder::new();
            if let Some(k) = threads {
                if k == 0 {
                    bail!("--threads must be at least 1");
                }
                pool = pool.num_threads(k);
            }
            let outcome = pool.build()?.install(|| harness::run_experiment(&cfg))?;
            harness::write_csv(&outcome.rows, &out)?;
            if outcome.failed_trials > 0 {
                eprintln!("{} of {} trials failed", outcome.failed_trials, outcome.trials.len());
                return Ok(ExitCode::from(2));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Geomtest { suite, seed } => {
            let results = geometry::run_suite(&suite, seed)?;
            let mut ok = true;
            for r in &results {
                println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
                ok &= r.passed;
            }
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}
