//! End-to-end tests driving the compiled `kmreg` binary.

use std::path::Path;
use std::process::{Command, Output};

fn kmreg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kmreg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

#[test]
fn rate_exact_reports_a_holding_bound() {
    let out = kmreg(&["rate", "--schedule", "const:0.5", "--n", "25"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["quantity"], "rate_report");
    assert_eq!(v["method"], "exact");
    assert_eq!(v["value"]["bound_ok"], true);
    let product = v["value"]["product"].as_f64().unwrap();
    assert!(product > 0.0 && product <= 0.5641895835477563 + 1e-10);
}

#[test]
fn rate_methods_agree_through_the_cli() {
    let exact = kmreg(&["rate", "--schedule", "const:0.3", "--n", "12", "--method", "exact"]);
    let rec = kmreg(&["rate", "--schedule", "const:0.3", "--n", "12", "--method", "recursion"]);
    let pe: serde_json::Value = serde_json::from_str(&stdout(&exact)).unwrap();
    let pr: serde_json::Value = serde_json::from_str(&stdout(&rec)).unwrap();
    let (a, b) = (pe["value"]["pn"].as_f64().unwrap(), pr["value"]["pn"].as_f64().unwrap());
    assert!((a - b).abs() <= 1e-12, "exact {a} vs recursion {b}");
}

#[test]
fn rate_csv_has_the_fixed_header() {
    let out = kmreg(&[
        "rate", "--schedule", "const:0.4", "--n", "10", "--format", "csv",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("n,sum_s,pn,product,bound_ok,std_err\n"));
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn mc_runs_are_deterministic_per_seed() {
    let args = [
        "rate", "--schedule", "uniform-random", "--n", "15", "--method", "mc",
        "--trials", "20000", "--seed", "7",
    ];
    let first = kmreg(&args);
    let second = kmreg(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    let mut other = args.to_vec();
    other[10] = "8";
    let third = kmreg(&other);
    assert_ne!(first.stdout, third.stdout);
}

#[test]
fn bad_schedule_source_is_a_usage_error() {
    let out = kmreg(&["rate", "--schedule", "fibonacci", "--n", "5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unrecognized schedule"));
}

#[test]
fn unresolvable_envelope_grid_exits_with_violation_code() {
    // spacing below f64 resolution of h: adjacent values tie, and the CLI
    // treats a non-increase as a property violation
    let out = kmreg(&[
        "envelope", "--z-min", "699.99999999", "--z-max", "700", "--points", "100",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("property violation"));
}

#[test]
fn ctable_check_writes_file_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("table.csv");
    let out = kmreg(&[
        "ctable", "--schedule", "uniform-random", "--n-max", "20", "--check",
        "--seed", "3", "--out", out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&out_path).unwrap();
    assert!(csv.starts_with("m,n,c_mn\n"));
    assert!(csv.contains("# max_recurrence_residual,"));
    let manifest = Path::new(&format!("{}.manifest.json", out_path.display())).to_path_buf();
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(m["subcommand"], "ctable");
    assert_eq!(m["seed"], 3);
}

#[test]
fn replay_reproduces_byte_identical_output() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("rate.json");
    let out = kmreg(&[
        "rate", "--schedule", "uniform-random", "--n", "18", "--method", "mc",
        "--trials", "50000", "--seed", "11", "--out", first.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let manifest = format!("{}.manifest.json", first.display());
    let second = dir.path().join("replayed.json");
    let out = kmreg(&["replay", &manifest, "--out", second.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
}

#[test]
fn sharpness_defaults_to_the_optimal_u() {
    let out = kmreg(&["sharpness", "--m-list", "1,10,100"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("m,observed,eta,gap\n"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn verify_suites_pass_end_to_end() {
    for suite in ["catalan", "turan", "identity-hilbert"] {
        let out = kmreg(&["verify", "--suite", suite, "--cases", "20", "--seed", "5"]);
        assert!(out.status.success(), "suite {suite} failed");
        let last = stdout(&out);
        let last = last.lines().last().unwrap();
        let v: serde_json::Value = serde_json::from_str(last).unwrap();
        assert_eq!(v["failures"], 0);
    }
}

#[test]
fn iterate_certifies_the_rotation_run() {
    let out = kmreg(&[
        "iterate", "--operator", r#"{"kind":"rotation","degrees":90.0}"#,
        "--schedule", "const:0.5", "--n", "30",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let residuals = v["value"]["residuals"].as_array().unwrap();
    assert_eq!(residuals.len(), 31);
    let cert = v["value"]["certificate"]["value"].as_f64().unwrap();
    assert!(v["value"]["final_residual"].as_f64().unwrap() <= cert);
}
