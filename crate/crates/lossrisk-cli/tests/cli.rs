//! End-to-end tests of the binary: golden outputs, error surfaces, exit
//! codes, and report determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lossrisk"))
}

fn write(dir: &Path, name: &str, content: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, content).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn eval_golden_values() {
    let dir = tempfile::tempdir().unwrap();
    let pnl = write(dir.path(), "pnl.txt", "-2\n1\n3\n");
    let scen = write(dir.path(), "scen.txt", "-5\n3\n-1\n");
    let catalog = write(
        dir.path(),
        "catalog.json",
        r#"[{"variant": "put_premium"}, {"variant": "span"}]"#,
    );
    let out = bin()
        .args(["eval", "--input", &pnl, "--scenarios", &scen, "--catalog", &catalog])
        .output()
        .unwrap();
    let report = stdout_json(&out);
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["results"]["put_premium"], serde_json::json!(0.6666666667));
    assert_eq!(report["results"]["span"], serde_json::json!(5.0));
}

#[test]
fn eval_report_round_trips_library_values() {
    let dir = tempfile::tempdir().unwrap();
    let pnl = write(dir.path(), "pnl.txt", "-3.25\n-0.5\n1.75\n8\n");
    let catalog = write(
        dir.path(),
        "catalog.json",
        r#"[{"variant": "etl", "beta": 0.3}, {"variant": "loss_ce", "utility": "exponential", "beta": 1.0}]"#,
    );
    let out = bin()
        .args(["eval", "--input", &pnl, "--catalog", &catalog])
        .output()
        .unwrap();
    let report = stdout_json(&out);

    let emp = lossrisk::dist::EmpiricalDistribution::from_samples(&[-3.25, -0.5, 1.75, 8.0])
        .unwrap();
    let g = lossrisk::dist::QuantileFn::empirical(emp);
    let etl = lossrisk::measures::eval_etl(&g, 0.3).unwrap();
    let u = lossrisk::measures::LossUtility::exponential(1.0).unwrap();
    let ce = lossrisk::measures::eval_loss_ce(&g, &u).unwrap();
    assert_eq!(
        report["results"]["etl(0.3)"].as_f64().unwrap(),
        lossrisk_cli::report::round10(etl)
    );
    assert_eq!(
        report["results"]["loss_ce(exponential,1)"].as_f64().unwrap(),
        lossrisk_cli::report::round10(ce)
    );
}

#[test]
fn eval_empty_catalog_is_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let pnl = write(dir.path(), "pnl.txt", "-1\n");
    let catalog = write(dir.path(), "catalog.json", "[]");
    let out = bin()
        .args(["eval", "--input", &pnl, "--catalog", &catalog])
        .output()
        .unwrap();
    let report = stdout_json(&out);
    assert_eq!(report["results"], serde_json::json!({}));
}

#[test]
fn eval_kind_mismatch_is_data_not_error() {
    let dir = tempfile::tempdir().unwrap();
    let pnl = write(dir.path(), "pnl.txt", "-1\n2\n");
    let catalog = write(
        dir.path(),
        "catalog.json",
        r#"[{"variant": "span"}, {"variant": "put_premium"}]"#,
    );
    let out = bin()
        .args(["eval", "--input", &pnl, "--catalog", &catalog])
        .output()
        .unwrap();
    let report = stdout_json(&out);
    assert!(report["results"]["span"]["error"]
        .as_str()
        .unwrap()
        .contains("--scenarios"));
    assert_eq!(report["results"]["put_premium"], serde_json::json!(0.5));
}

#[test]
fn pnl_parse_error_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let pnl = write(dir.path(), "pnl.txt", "-1\n# comment\n\nnot_a_number\n");
    let catalog = write(dir.path(), "catalog.json", r#"[{"variant": "put_premium"}]"#);
    let out = bin()
        .args(["eval", "--input", &pnl, "--catalog", &catalog])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains(":4:"), "stderr: {stderr}");
    assert!(stderr.contains("invalid number"), "stderr: {stderr}");
}

#[test]
fn sensitivity_golden_row_and_restriction() {
    let dir = tempfile::tempdir().unwrap();
    let pnl = write(dir.path(), "pnl.txt", "-2\n1\n3\n");
    let catalog = write(
        dir.path(),
        "catalog.json",
        r#"[{"variant": "loss_ce", "utility": "power", "p": 1}]"#,
    );
    let out = bin()
        .args([
            "sensitivity",
            "--input",
            &pnl,
            "--catalog",
            &catalog,
            "--z-grid",
            "-5,-5,1",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let table = String::from_utf8_lossy(&out.stdout);
    let mut lines = table.lines();
    assert_eq!(
        lines.next().unwrap(),
        "measure,z,s_analytic,s_numeric,abs_diff"
    );
    assert_eq!(
        lines.next().unwrap(),
        "\"loss_ce(power,1)\",-5,4.333333333,NA,NA"
    );

    let etl_catalog = write(
        dir.path(),
        "etl.json",
        r#"[{"variant": "etl", "beta": 0.3}]"#,
    );
    let out = bin()
        .args([
            "sensitivity",
            "--input",
            &pnl,
            "--catalog",
            &etl_catalog,
            "--z-grid",
            "-5,-5,1",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("etl(0.3)"), "stderr: {stderr}");
    assert!(stderr.contains("--numeric"), "stderr: {stderr}");
}

#[test]
fn sensitivity_numeric_only_rows_for_var_loss() {
    let dir = tempfile::tempdir().unwrap();
    let pnl = write(dir.path(), "pnl.txt", "-4\n-2\n-1\n1\n2\n");
    let catalog = write(
        dir.path(),
        "catalog.json",
        r#"[{"variant": "var_loss", "alpha": 0.3}]"#,
    );
    let out = bin()
        .args([
            "sensitivity",
            "--input",
            &pnl,
            "--catalog",
            &catalog,
            "--z-grid",
            "-6,-6,1",
            "--numeric",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let table = String::from_utf8_lossy(&out.stdout);
    let row = table.lines().nth(1).unwrap();
    // Step quantile: the analytic column degrades to NA, the numeric
    // difference quotient still reports.
    let cells: Vec<&str> = row.split(',').collect();
    assert_eq!(cells[0], "var_loss(0.3)");
    assert_eq!(cells[2], "NA");
    assert_ne!(cells[3], "NA");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("warning"), "stderr: {stderr}");
}

#[test]
fn axioms_report_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let catalog = write(
        dir.path(),
        "catalog.json",
        r#"[
            {"variant": "loss_ce", "utility": "power", "p": 2},
            {"variant": "loss_ce", "utility": "exponential", "beta": 1},
            {"variant": "var_loss", "alpha": 0.3}
        ]"#,
    );
    let out = bin().args(["axioms", "--catalog", &catalog]).output().unwrap();
    let report = stdout_json(&out);
    let status = |label: &str, axiom: &str| -> String {
        report["results"][label]
            .as_array()
            .unwrap()
            .iter()
            .find(|c| c["axiom"] == axiom)
            .unwrap()["status"]
            .as_str()
            .unwrap()
            .to_string()
    };
    assert_eq!(status("loss_ce(power,2)", "cash_loss_additivity"), "fail");
    assert_eq!(
        status("loss_ce(exponential,1)", "cash_loss_additivity"),
        "pass"
    );
    assert_eq!(status("var_loss(0.3)", "quantile_convexity"), "not_asserted");
    assert_eq!(status("var_loss(0.3)", "normalization"), "pass");
}

#[test]
fn roblab_seed_override_and_missing_field() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "config.json",
        r#"{"spec": {"variant": "put_premium"},
            "base": {"segments": [[-2, 2, 1.0]], "atoms": []},
            "n": 10, "replications": 5, "seed": 1,
            "consistency": {"n_list": [10]}}"#,
    );
    let out = bin()
        .args(["roblab", "--config", &config, "--seed", "99"])
        .output()
        .unwrap();
    let report = stdout_json(&out);
    assert_eq!(report["seed"], 99);
    assert_eq!(report["config"]["seed"], 99);
    assert_eq!(report["rng"]["name"], "chacha8");

    let broken = write(
        dir.path(),
        "broken.json",
        r#"{"spec": {"variant": "put_premium"},
            "base": {"segments": [[-2, 2, 1.0]]},
            "replications": 5, "seed": 1,
            "consistency": {"n_list": [10]}}"#,
    );
    let out = bin().args(["roblab", "--config", &broken]).output().unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("missing field `n`"), "stderr: {stderr}");
}

#[test]
fn roblab_reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "config.json",
        r#"{"spec": {"variant": "etl", "beta": 0.3},
            "base": {"segments": [[-5, 5, 0.9]], "atoms": [[7.5, 0.1]]},
            "n": 40, "replications": 25, "seed": 2024,
            "contamination": {"epsilons": [0.02], "zs": [-15, -150]},
            "consistency": {"n_list": [20, 60]}}"#,
    );
    let out1 = dir.path().join("r1.json");
    let out2 = dir.path().join("r2.json");
    for out in [&out1, &out2] {
        let run = bin()
            .args(["roblab", "--config", &config, "--out", out.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(run.status.success());
    }
    let b1 = fs::read(&out1).unwrap();
    let b2 = fs::read(&out2).unwrap();
    assert_eq!(b1, b2);
    assert!(!b1.is_empty());
}
