use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_moebius-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn num(v: &Value, path: &[&str]) -> f64 {
    path.iter()
        .fold(v, |acc, k| &acc[*k])
        .as_f64()
        .unwrap_or_else(|| panic!("missing {path:?}"))
}

#[test]
fn analyze_clifford() {
    let out = run(&["analyze", "--surface", "clifford", "--at", "0.3,0.7", "--mu", "zero"]);
    assert!(out.status.success());
    let r = json(&out);
    assert_eq!(r["schema"], "moebius-lab/1");
    assert!(num(&r, &["invariants", "s", "re"]).abs() < 1e-12);
    assert!((num(&r, &["invariants", "kappa_norm2"]) - 0.125).abs() < 1e-12);
    assert!((num(&r, &["invariants", "rho", "re"]) + 0.25).abs() < 1e-12);
    for flag in ["willmore", "s_willmore", "isotropic", "s_isotropic", "conformal_lift"] {
        assert_eq!(r["classification"][flag], true, "{flag}");
    }
    assert!((num(&r, &["energy"]) - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-9);
}

#[test]
fn analyze_great_sphere_is_umbilic() {
    let out = run(&["analyze", "--surface", "great-sphere:n=3", "--at", "0,0"]);
    assert!(out.status.success());
    let r = json(&out);
    assert_eq!(r["invariants"]["umbilic"], true);
    assert!(num(&r, &["invariants", "energy_density"]).abs() < 1e-14);
}

#[test]
fn analyze_product_torus() {
    let out = run(&["analyze", "--surface", "product-torus:a=0.8", "--at", "0,0", "--mu", "constant"]);
    assert!(out.status.success());
    let r = json(&out);
    assert_eq!(r["classification"]["willmore"], false);
    assert!((num(&r, &["invariants", "willmore_residual"]) - 0.0791196).abs() < 1e-6);
}

#[test]
fn verify_exit_codes() {
    for spec in ["clifford", "product-torus:a=0.8"] {
        let out = run(&["verify", "--surface", spec, "--grid", "64x64", "--lambda", "16"]);
        assert_eq!(out.status.code(), Some(0), "{spec}: {}", String::from_utf8_lossy(&out.stderr));
        let r = json(&out);
        assert_eq!(r["agree"], true);
    }
    let out = run(&["verify", "--surface", "clifford", "--grid", "3x3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid too small"));
}

#[test]
fn verify_reports_non_willmore_torus_consistently() {
    let out = run(&["verify", "--surface", "product-torus:a=0.8", "--grid", "24x24"]);
    let r = json(&out);
    for c in ["residual", "l_equation", "flatness"] {
        assert_eq!(r["classifiers"][c]["willmore"], false, "{c}");
    }
    let rows = r["lambda_table"].as_array().unwrap();
    let floor = num(&r, &["classifiers", "noise_floor"]);
    let flat: Vec<bool> = rows.iter().map(|row| num(row, &["residual"]) < 10.0 * floor).collect();
    assert_eq!(flat.iter().filter(|&&f| f).count(), 2);
    assert!(flat[0] && flat[8]);
}

#[test]
fn input_and_math_errors() {
    assert_eq!(run(&["analyze", "--surface", "nope"]).status.code(), Some(2));
    assert_eq!(run(&["analyze", "--surface", "clifford", "--mu", "garbage"]).status.code(), Some(2));
    assert_eq!(run(&["analyze", "--surface", "clifford", "--tol", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--surface", "clifford", "--grid", "8x8", "--lambda", "1"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    let pole = run(&["analyze", "--surface", "clifford", "--mu", "meromorphic:3+3i", "--at", "3,3"]);
    assert_eq!(pole.status.code(), Some(3));
}

#[test]
fn unwritable_output_leaves_no_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("missing").join("out.json");
    let out = run(&["analyze", "--surface", "clifford", "--json", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!target.exists());
}

#[test]
fn sweep_csv_table() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let out = run(&["sweep", "--surface", "clifford", "--grid", "16x16", "--csv", csv.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("u,v,lambda_re,lambda_im,residual"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 16);
    assert!(rows.iter().all(|r| r.len() == 5 && r[4] < 1e-6));
    let unit = rows.iter().all(|r| (r[2].hypot(r[3]) - 1.0).abs() < 1e-12);
    assert!(unit);
}

#[test]
fn export_writes_node_table_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("cells.csv");
    let js = dir.path().join("report.json");
    let out = run(&[
        "export", "--surface", "clifford", "--grid", "8x8", "--lambda", "4",
        "--csv", csv.to_str().unwrap(), "--json", js.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 4 * 64);
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&js).unwrap()).unwrap();
    assert_eq!(r["grid"], serde_json::json!([8, 8]));
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for k in 0..2 {
        let p = dir.path().join(format!("a{k}.json"));
        let jobs = if k == 0 { "1" } else { "3" };
        let out = run(&["--jobs", jobs, "verify", "--surface", "veronese", "--grid", "12x12", "--json", p.to_str().unwrap()]);
        assert!(out.status.success());
        files.push(read(&p));
    }
    assert_eq!(files[0], files[1]);
    let a = run(&["analyze", "--surface", "flat-torus-s5:a1=0.5,a2=0.6", "--at", "0.2,0.4"]);
    let b = run(&["analyze", "--surface", "flat-torus-s5:a1=0.5,a2=0.6", "--at", "0.2,0.4"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn json_keys_are_sorted() {
    let out = run(&["analyze", "--surface", "clifford", "--energy-grid", "0"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let top: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("  \"") && !l.starts_with("   "))
        .map(|l| l.trim().split('"').nth(1).unwrap())
        .collect();
    let mut sorted = top.clone();
    sorted.sort();
    assert_eq!(top, sorted);
    assert!(text.ends_with("}\n"));
}

#[test]
fn energy_sweep_minimum() {
    let out = run(&["energy", "--surface", "product-torus", "--a", "0.5,0.6,0.7,0.8,0.9", "--grid", "16x16"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    let table = r["table"].as_array().unwrap();
    assert_eq!(table.len(), 5);
    for row in table {
        assert!((num(row, &["energy"]) - num(row, &["closed_form"])).abs() < 1e-9);
    }
    assert!((num(&r, &["argmin"]) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-3);
    assert!((num(&r, &["min_energy"]) - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-6);
}

#[test]
fn catalog_lists_defaults() {
    let out = run(&["catalog"]);
    assert!(out.status.success());
    let r = json(&out);
    let defaults = r["defaults"].as_array().unwrap();
    assert!(defaults.iter().any(|d| d == "clifford"));
    assert_eq!(r["entries"].as_array().unwrap().len(), 5);
}
