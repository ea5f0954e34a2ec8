use std::fs;
use std::process::Command;

use sosp_harness::config::OracleConfig;
use sosp_harness::{io, run_ensemble, validate, ExperimentConfig};

fn small(seeds: u64, workers: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.start.value = 0.0;
    cfg.start.perturb = 0.01;
    cfg.oracle = OracleConfig::Adversarial {
        grad_fraction: 1.0,
        hess_fraction: 1.0,
        direction_mode: Default::default(),
        stress: false,
    };
    cfg.run.seeds = seeds;
    cfg.run.workers = workers;
    cfg
}

#[test]
fn trace_round_trips_through_jsonl() {
    let out = run_ensemble(&small(3, 1)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    io::write_outputs(dir.path(), &out, true).unwrap();
    for (row, trace) in out.summary.rows.iter().zip(&out.traces) {
        let back = io::read_trace(&io::trace_path(dir.path(), row.seed_index)).unwrap();
        assert_eq!(&back, trace);
        assert_eq!(back.len() as u64, row.t + u64::from(row.terminated));
    }
    let summary = io::read_summary_json(&dir.path().join("summary.json")).unwrap();
    assert_eq!(summary, out.summary);
    let rows = io::read_summary_csv(&dir.path().join("summary.csv")).unwrap();
    assert_eq!(rows, out.summary.rows);
}

#[test]
fn worker_count_does_not_change_results() {
    let seq = run_ensemble(&small(16, 1)).unwrap();
    let par = run_ensemble(&small(16, 4)).unwrap();
    assert_eq!(seq.summary.rows, par.summary.rows);
    assert_eq!(seq.traces, par.traces);
}

#[test]
fn rerun_writes_identical_csv() {
    let cfg = small(8, 0);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    io::write_outputs(a.path(), &run_ensemble(&cfg).unwrap(), false).unwrap();
    io::write_outputs(b.path(), &run_ensemble(&cfg).unwrap(), false).unwrap();
    let ca = fs::read(a.path().join("summary.csv")).unwrap();
    let cb = fs::read(b.path().join("summary.csv")).unwrap();
    assert!(!ca.is_empty());
    assert_eq!(ca, cb);
}

#[test]
fn validation_names_injected_faults() {
    let mut out = run_ensemble(&small(4, 1)).unwrap();
    assert!(validate(&out.summary).passed(), "{}", validate(&out.summary));

    let r = &mut out.summary.rows[2];
    r.cert_curv_ok = false;
    r.lambda_min = -1.0;
    let t = r.t;
    let r = &mut out.summary.rows[1];
    r.gd_violations = 1;
    r.first_gd_violation = Some(5);

    let report = validate(&out.summary);
    assert!(!report.passed());
    let text = report.to_string();
    assert!(text.contains(&format!("seed 2 iteration {t}")), "{text}");
    assert!(text.contains("seed 1 iteration 5"), "{text}");
}

#[test]
fn cli_run_and_validate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("exp.toml");
    fs::write(&cfg_path, small(4, 1).to_toml_string()).unwrap();
    let out = dir.path().join("out");
    let bin = env!("CARGO_BIN_EXE_sosp");

    let status = Command::new(bin)
        .args(["run", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out)
        .args(["--policy", "long", "--sign", "descent"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0), "{}", String::from_utf8_lossy(&status.stdout));
    assert!(out.join("trace_3.jsonl").exists());

    let summary = out.join("summary.json");
    let ok = Command::new(bin).arg("validate").arg("--summary").arg(&summary).status().unwrap();
    assert_eq!(ok.code(), Some(0));

    let mut s = io::read_summary_json(&summary).unwrap();
    s.rows[0].cert_grad_ok = false;
    io::write_summary_json(&summary, &s).unwrap();
    let bad = Command::new(bin).arg("validate").arg("--summary").arg(&summary).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("seed 0 iteration"));

    fs::write(&cfg_path, "[tolerance]\neps_g = -1.0\n").unwrap();
    let cfg_err = Command::new(bin).arg("run").arg("--config").arg(&cfg_path).output().unwrap();
    assert_eq!(cfg_err.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&cfg_err.stderr).contains("tolerance.eps_g"));

    let missing = Command::new(bin).arg("validate").arg("--summary").arg(dir.path().join("nope.json")).status().unwrap();
    assert_eq!(missing.code(), Some(3));

    let sweep = Command::new(bin)
        .args(["sweep", "--eps", "0.2,0.1", "--seeds", "2", "--no-traces"])
        .arg("--out")
        .arg(dir.path().join("sweep"))
        .status()
        .unwrap();
    assert_eq!(sweep.code(), Some(0));
    assert!(dir.path().join("sweep/eps_0.2/summary.csv").exists());

    let bounds = Command::new(bin).arg("bounds").output().unwrap();
    assert_eq!(bounds.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&bounds.stdout).contains("union_bound_xi"));
}
