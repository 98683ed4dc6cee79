use std::path::Path;
use std::process::{Command, Output};

use diamondrec::choi::{random_unitary, unitary_pair_map};
use diamondrec::harness;
use diamondrec::io::{self, BipartiteJson, EnsembleJson, RecoveryProblemJson};
use diamondrec::measure::{apply_measurement, EnsembleKind};
use diamondrec::recovery::{RecoveryProblem, Regularizer};
use diamondrec::rng::seeded;
use diamondrec::Field;
use serde_json::Value;

fn diamondrec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_diamondrec")).args(args).output().expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn norm_of_unitary_pair_is_dim_v() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.json");
    let report = dir.path().join("report.json");
    let mut rng = seeded(1);
    let x = unitary_pair_map(&random_unitary(2, &mut rng), &random_unitary(2, &mut rng)).unwrap().choi;
    io::write_json(&BipartiteJson::from_operator(&x), &input).unwrap();

    let out = diamondrec(&["norm", "--input", path_str(&input), "--report", path_str(&report)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!((r["value"].as_f64().unwrap() - 2.0).abs() < 1e-6, "{r}");
    assert!((r["diamond"].as_f64().unwrap() - 1.0).abs() < 1e-6);

    // Without --report the JSON goes to stdout.
    let out = diamondrec(&["norm", "--input", path_str(&input), "--dims", "2", "2", "--tol", "1e-7"]);
    assert!(out.status.success());
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((r["value"].as_f64().unwrap() - 2.0).abs() < 1e-5);
}

#[test]
fn norm_rejects_inconsistent_dims() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.json");
    let x = unitary_pair_map(&random_unitary(2, &mut seeded(2)), &random_unitary(2, &mut seeded(3))).unwrap().choi;
    io::write_json(&BipartiteJson::from_operator(&x), &input).unwrap();
    let out = diamondrec(&["norm", "--input", path_str(&input), "--dims", "3", "2"]);
    assert!(!out.status.success());
    let out = diamondrec(&["norm", "--input", path_str(&dir.path().join("missing.json"))]);
    assert!(!out.status.success());
}

#[test]
fn recover_reproduces_a_seeded_problem() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("problem.json");
    let result = dir.path().join("result.json");
    let mut rng = seeded(4);
    let truth = unitary_pair_map(&random_unitary(2, &mut rng), &random_unitary(2, &mut rng)).unwrap().choi;
    let ensemble = EnsembleJson {
        kind: EnsembleKind::GaussianComplex,
        dims: [2, 2],
        m: Some(16),
        seed: Some(9),
        group: None,
        q: None,
        functionals: None,
    };
    let e = ensemble.materialize().unwrap();
    let y = apply_measurement(&e, &truth).unwrap();
    let p = RecoveryProblem::new(e, y, 0.0, Regularizer::Square, false, Field::Complex).unwrap();
    io::write_json(&RecoveryProblemJson::new(&p, ensemble, Some(&truth)), &problem).unwrap();

    let out = diamondrec(&["recover", "--problem", path_str(&problem), "--out", path_str(&result)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&result).unwrap()).unwrap();
    assert!(r["frob_error"].as_f64().unwrap() < 1e-5, "{r}");
    assert_eq!(r["estimate"]["rows"], 4);
}

#[test]
fn experiment_writes_csv_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"experiment": "lowrank_gaussian", "dims": [2, 2], "rank": 1, "m_sweep": [4, 12],
            "trials": 2, "regularizers": ["nuclear", "square"], "seed": 5, "timing": false}"#,
    )
    .unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (out_path, threads) in [(&a, "1"), (&b, "2")] {
        let out = diamondrec(&["experiment", "--config", path_str(&cfg), "--out", path_str(out_path), "--threads", threads]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert!(text.starts_with("experiment,regularizer,m,trials,successes,mean_frob_error,median_solve_ms,seed"));
    let rows = harness::read_csv(&a).unwrap();
    assert_eq!(rows.len(), 4);
}

#[test]
fn experiment_rejects_unknown_config_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"experiment": "uv_retrieval", "m_sweep": [4], "trials": 1, "seed": 0, "bogus": 1}"#).unwrap();
    let out = diamondrec(&["experiment", "--config", path_str(&cfg), "--out", path_str(&dir.path().join("r.csv"))]);
    assert!(!out.status.success());
    assert_ne!(out.status.code(), Some(2));
}

#[test]
fn geomtest_descent_suite_passes() {
    let out = diamondrec(&["geomtest", "--suite", "descent", "--seed", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 2);
    assert!(!diamondrec(&["geomtest", "--suite", "nope"]).status.success());
}
