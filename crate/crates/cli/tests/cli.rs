use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn fraclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fraclab")).args(args).env_remove("FRACLAB_THREADS").output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn constants_as_json() {
    let v = json(&fraclab(&["constants", "--n", "1", "--s", "0.5"]));
    let c = v["c_ns"].as_f64().unwrap();
    assert!((c - std::f64::consts::FRAC_1_PI).abs() < 1e-12);
    assert!((v["beta_ns"].as_f64().unwrap() - std::f64::consts::FRAC_1_PI).abs() < 1e-12);
    // n = 1, s = 0.5 is outside the Riesz regime
    assert!(v["alpha_ns"].is_null());
    assert_eq!(v["config"]["command"]["subcommand"], "constants");
}

#[test]
fn help_and_usage_errors() {
    let out = fraclab(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["constants", "psi-table", "fraclap-eval", "poisson-solve", "riesz", "cauchy", "liouville-decay", "wos", "accept"] {
        assert!(text.contains(sub), "{sub} missing from help");
    }
    assert_eq!(fraclab(&["frobnicate"]).status.code(), Some(2));
    assert!(!fraclab(&["frobnicate"]).stderr.is_empty());
    assert_eq!(fraclab(&[]).status.code(), Some(2));
    assert_eq!(fraclab(&["constants", "--n", "0", "--s", "0.5"]).status.code(), Some(2));
    assert_eq!(fraclab(&["constants", "--n", "1", "--s", "1.5"]).status.code(), Some(2));
    let bad = fraclab(&["wos", "--n", "1", "--s", "0.5", "--domain", "disk(0,1)", "--data", "one", "--x0", "0"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn wos_with_constant_data_is_exactly_one() {
    let args = ["wos", "--n", "1", "--s", "0.5", "--domain", "ball(0,1)", "--data", "one", "--x0", "0", "--samples", "100", "--seed", "7"];
    let v = json(&fraclab(&args));
    assert_eq!(v["estimate"].as_f64(), Some(1.0));
    for key in ["std_error", "mean_steps", "max_steps_hit"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let x0_outside = fraclab(&["wos", "--n", "1", "--s", "0.5", "--domain", "ball(0,1)", "--data", "one", "--x0", "2"]);
    assert_eq!(x0_outside.status.code(), Some(2));
}

#[test]
fn output_is_independent_of_the_thread_count() {
    let args = [
        "wos", "--n", "1", "--s", "0.5", "--domain", "union(ball(0,1);ball(3,1))", "--data", "sign", "--x0", "0.4", "--samples",
        "5000", "--seed", "3",
    ];
    let run = |k: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_fraclab")).args(args).env("FRACLAB_THREADS", k).output().unwrap();
        assert!(out.status.success());
        out.stdout
    };
    let one = run("1");
    assert_eq!(one, run("3"));
    let flag = fraclab(&[&args[..], &["--threads", "2"]].concat());
    assert_eq!(flag.stdout, one);
}

#[test]
fn resolved_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.json");
    let args = ["wos", "--n", "2", "--s", "0.4", "--domain", "box(-1,-1,1,1)", "--data", "bounded-noise:4", "--x0", "0.2,0.1"];
    let out = fraclab(&[&args[..], &["--samples", "2000", "--seed", "9", "--out", first.to_str().unwrap()]].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let again = fraclab(&["--config", first.to_str().unwrap()]);
    assert!(again.status.success());
    assert_eq!(fs::read(&first).unwrap(), again.stdout);
    // a subcommand and a config together are ambiguous
    assert_eq!(fraclab(&["constants", "--n", "1", "--s", "0.5", "--config", first.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn psi_table_csv() {
    let out = fraclab(&["psi-table", "--n", "2", "--s", "0.5", "--r-min", "0.5", "--r-max", "8", "--points", "16"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("radius,psi,psi_times_decay_power"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|t| t.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 16);
    assert_eq!(rows[0][1], 0.0);
    assert!(rows.iter().all(|r| r[1] >= 0.0));
    // the config goes to stderr when the CSV goes to stdout
    let side: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(side["config"]["command"]["subcommand"], "psi-table");
}

#[test]
fn fraclap_and_poisson_on_point_files() {
    let dir = tempfile::tempdir().unwrap();
    let pts = write(dir.path(), "pts.csv", "x1,x2\n0.1,0.2\n-0.3,0.4\n");
    let out_path = dir.path().join("lap.csv");
    let out = fraclab(&[
        "fraclap-eval", "--n", "2", "--s", "0.75", "--field", "affine", "--points", &pts, "--out", out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&out_path).unwrap();
    assert!(text.starts_with("x1,x2,value,error_estimate\n"));
    for line in text.lines().skip(1) {
        let v: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!(v.abs() < 1e-6);
    }
    let side: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("lap.json")).unwrap()).unwrap();
    assert_eq!(side["unconverged"], 0);

    let out = fraclab(&["poisson-solve", "--n", "2", "--s", "0.3", "--radius", "2", "--data", "one", "--points", &pts]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for line in text.lines().skip(1) {
        let v: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!((v - 1.0).abs() < 1e-6);
    }
    let wrong = write(dir.path(), "wrong.csv", "x\n0.1\n");
    let out = fraclab(&["poisson-solve", "--n", "2", "--s", "0.3", "--data", "one", "--points", &wrong]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn riesz_report_with_adjudication() {
    let dir = tempfile::tempdir().unwrap();
    let pts = write(dir.path(), "pts.csv", "x1,x2,x3\n0,0,0\n3,0,0\n");
    let v = json(&fraclab(&["riesz", "--n", "3", "--s", "0.5", "--density", "bump", "--points", &pts, "--adjudicate"]));
    assert_eq!(v["normalization_source"], "adjudicated");
    assert!(v["adjudication"]["verdict"].is_string());
    let c = v["normalization"].as_f64().unwrap();
    let points = v["points"].as_array().unwrap();
    assert_eq!(points.len(), 2);
    let unit = json(&fraclab(&["riesz", "--n", "3", "--s", "0.5", "--density", "bump", "--points", &pts]));
    assert_eq!(unit["normalization"], 1.0);
    let (a, b) = (points[1]["value"].as_f64().unwrap(), unit["points"][1]["value"].as_f64().unwrap());
    assert!((a - c * b).abs() < 1e-12 * a.abs());
}

#[test]
fn estimate_tables() {
    let out = fraclab(&["cauchy", "--n", "1", "--s", "0.5", "--gamma", "1", "--radii", "1,2,4", "--data", "sign"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("R,lhs,tail,rhs_factor,ratio\n"));
    assert_eq!(text.lines().count(), 4);
    let side: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(side["summary"]["fitted_slope"].is_number());

    let out = fraclab(&["liouville-decay", "--n", "1", "--s", "0.25", "--gamma", "2", "--radii", "1,4,16", "--data", "mixed"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let side: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(side["summary"]["fitted_slope"].as_f64().unwrap() < 2.0 * 0.25 - 2.0 + 0.3);
    // unbounded data has no bound for the decay experiment
    let out = fraclab(&["liouville-decay", "--n", "1", "--s", "0.25", "--gamma", "2", "--data", "affine:1,0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn corrupted_beta_fails_the_normalization_criterion() {
    let out = fraclab(&["accept", "--tier", "fast", "--corrupt-beta", "1.1"]);
    assert_ne!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let criteria = v["report"]["criteria"].as_array().unwrap();
    assert_eq!(criteria[1]["id"], 2);
    assert_eq!(criteria[1]["passed"], false);
    assert_eq!(criteria[0]["passed"], true);
    let lines = String::from_utf8_lossy(&out.stderr);
    assert!(lines.lines().any(|l| l.contains("criterion  2") && l.contains("FAIL")));
}
