use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn rds(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rds"))
        .current_dir(dir)
        .env_remove("RDS_SEED")
        .args(args)
        .output()
        .expect("spawn rds")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

#[test]
fn cm_reports_the_plus_minus_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "pss.json", r#"{"generator":"plus_minus","m":3}"#);
    let out = rds(dir.path(), &["cm", "--config", &cfg, "--out", "o"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&dir.path().join("o/cm.json"));
    assert_eq!(v["cm"].as_f64().unwrap(), 0.5773502692);
    assert_eq!(v["chi"].as_f64().unwrap(), 18.0);
    assert_eq!(v["cardinality"], 6);
    let stdout: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(stdout, v);
    let manifest = json(&dir.path().join("o/manifest.json"));
    assert_eq!(manifest["subcommand"], "cm");
    assert_eq!(manifest["output_files"], serde_json::json!(["cm.json"]));
}

#[test]
fn sphere_scan_reports_the_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let out = rds(dir.path(), &["sphere-study", "--scan", "4", "--samples", "20", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out/scan.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "n,lower,upper,value_k1,value_k_nminus1,value_k_n,mean_random");
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(row[0], 4.0);
    assert!((row[1] - 1.0 / 3f64.sqrt()).abs() < 1e-9);
    assert!((row[2] - 2.0 / 3.0).abs() < 1e-9);
    assert!(row[1] <= row[6] && row[6] <= row[2]);
}

#[test]
fn configuration_errors_exit_with_two_and_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = rds(dir.path(), &["cm", "--config", "missing.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("out").exists());

    let cfg = write(dir.path(), "bad.json", r#"{"generator":"plus_minus","m":3,"colour":1}"#);
    assert_eq!(rds(dir.path(), &["cm", "--config", &cfg]).status.code(), Some(2));

    let grid = write(dir.path(), "grid.json", r#"{"m_list":[2],"codims":[1],"instances_per_cell":1}"#);
    assert_eq!(rds(dir.path(), &["bench", "--config", &grid, "--threads", "0"]).status.code(), Some(2));

    assert_eq!(rds(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(rds(dir.path(), &["sphere-study", "--heatmap", "4"]).status.code(), Some(2));
    assert!(!dir.path().join("out").exists());
    assert_eq!(rds(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn reruns_are_byte_identical_and_feed_profiles() {
    let dir = tempfile::tempdir().unwrap();
    let grid = write(
        dir.path(),
        "grid.json",
        r#"{"m_list":[2],"codims":[2],"instances_per_cell":3,"budget_factor":20}"#,
    );
    for (out, threads) in [("a", "1"), ("b", "3")] {
        let o = rds(dir.path(), &["bench", "--config", &grid, "--out", out, "--seed", "5", "--threads", threads]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["records.ndjson", "distributions.json"] {
        assert_eq!(
            fs::read(dir.path().join("a").join(f)).unwrap(),
            fs::read(dir.path().join("b").join(f)).unwrap(),
            "{f} differs"
        );
    }
    let manifest = json(&dir.path().join("a/manifest.json"));
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["config_digest"], json(&dir.path().join("b/manifest.json"))["config_digest"]);

    let prof = write(dir.path(), "prof.json", r#"{"records":"a/records.ndjson"}"#);
    let o = rds(dir.path(), &["profiles", "--config", &prof, "--out", "p"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let curves = fs::read_to_string(dir.path().join("p/profiles/profile_m2_codim2.csv")).unwrap();
    assert!(curves.starts_with("alpha,"));
    let h2h = fs::read_to_string(dir.path().join("p/head_to_head.csv")).unwrap();
    assert!(h2h.starts_with("generator,rotate,m,codim,wins,pairs,fraction"));
    assert!(h2h.lines().count() > 1);
}

#[test]
fn seed_environment_variable_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "solve.json",
        r#"{"problem":{"kind":"benchmark","family":"rayleigh_sphere","m":2,"n":4,"index":0},"solver":{"budget":50}}"#,
    );
    let out = Command::new(env!("CARGO_BIN_EXE_rds"))
        .current_dir(dir.path())
        .env("RDS_SEED", "42")
        .args(["solve", "--config", &cfg])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&dir.path().join("out/manifest.json"))["seed"], 42);
    let result = json(&dir.path().join("out/result.json"));
    assert!(result["evals"].as_u64().unwrap() <= 50);
    assert!(result["final_f"].as_f64().unwrap() <= result["f0"].as_f64().unwrap());
    let trace = fs::read_to_string(dir.path().join("out/trace.ndjson")).unwrap();
    assert_eq!(trace.lines().count() as u64, result["iterations"].as_u64().unwrap());
}
