use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn roofcoh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roofcoh"))
        .args(args)
        .env("ROOFCOH_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn plus_file(dir: &Path) -> PathBuf {
    write(dir, "plus.json", &format!(r#"{{"type":"pure","dims":[2],"amplitudes":[[{H},0],[{H},0]]}}"#))
}

fn ghz_file(dir: &Path) -> PathBuf {
    let z = "[0,0]";
    let body = format!(
        r#"{{"type":"pure","dims":[2,2,2],"amplitudes":[[{H},0],{z},{z},{z},{z},{z},{z},[{H},0]]}}"#
    );
    write(dir, "ghz.json", &body)
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn pure_value_examples() {
    let dir = TempDir::new().unwrap();
    let o = roofcoh(&["pure-value", "--state", s(&plus_file(dir.path()))]);
    assert!(o.status.success());
    assert!((stdout(&o).trim().parse::<f64>().unwrap() - 1.0).abs() < 1e-12);

    let zero = write(dir.path(), "zero.json", r#"{"type":"pure","dims":[2],"amplitudes":[[1,0],[0,0]]}"#);
    let o = roofcoh(&["pure-value", "--measure", "half", "--state", s(&zero), "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["value"].as_f64().unwrap(), 0.0);

    let u = 1.0 / 3f64.sqrt();
    let uniform = write(
        dir.path(),
        "u3.json",
        &format!(r#"{{"type":"pure","dims":[3],"amplitudes":[[{u},0],[{u},0],[{u},0]]}}"#),
    );
    let o = roofcoh(&["pure-value", "--state", s(&uniform)]);
    assert!((stdout(&o).trim().parse::<f64>().unwrap() - 3f64.log2()).abs() < 1e-12);
}

#[test]
fn schema_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"type":"pure","dims":[2],"amplitudes":[[1,0],[1,0]]}"#);
    let o = roofcoh(&["pure-value", "--state", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("norm"));
    let o = roofcoh(&["pure-value", "--state", s(&dir.path().join("missing.json"))]);
    assert_eq!(o.status.code(), Some(2));
    let o = roofcoh(&["roof"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn roof_examples() {
    let dir = TempDir::new().unwrap();
    let q = write(
        dir.path(),
        "q.json",
        r#"{"type":"mixed","dims":[2],"matrix":[[[0.5,0],[0.25,0]],[[0.25,0],[0.5,0]]]}"#,
    );
    let o = roofcoh(&["roof", "--state", s(&q), "--seed", "7", "--restarts", "8"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["value"].as_f64().unwrap() - 0.354_578_902_665_270_03).abs() < 1e-4);
    assert_eq!(v["bound"], "upper");
    assert_eq!(v["config"]["restarts"], 8);
    assert_eq!(v["per_restart_values"].as_array().unwrap().len(), 8);

    let diag = write(
        dir.path(),
        "diag.json",
        r#"{"type":"mixed","dims":[2],"matrix":[[[0.3,0],[0,0]],[[0,0],[0.7,0]]]}"#,
    );
    let v: serde_json::Value =
        serde_json::from_str(&stdout(&roofcoh(&["roof", "--state", s(&diag)]))).unwrap();
    assert_eq!(v["value"].as_f64().unwrap(), 0.0);

    let v: serde_json::Value =
        serde_json::from_str(&stdout(&roofcoh(&["roof", "--state", s(&plus_file(dir.path()))]))).unwrap();
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn verify_ghz_tripartite() {
    let dir = TempDir::new().unwrap();
    let o = roofcoh(&["verify", "--inequality", "tripartite", "--state", s(&ghz_file(dir.path()))]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "tripartite");
    assert_eq!(rows[0][7], "pass");
    assert!((rows[0][5].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn verify_arity_mismatch_exit_2() {
    let dir = TempDir::new().unwrap();
    let o = roofcoh(&["verify", "--inequality", "bipartite-sufficient", "--state", s(&ghz_file(dir.path()))]);
    assert_eq!(o.status.code(), Some(2));
    let o = roofcoh(&["verify", "--inequality", "no-such-inequality", "--state", s(&ghz_file(dir.path()))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sample_then_verify() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("states");
    let o = roofcoh(&["sample", "--dims", "2,3", "--kind", "product", "--count", "2", "--seed", "5", "--out", s(&out)]);
    assert!(o.status.success());
    let a = out.join("state_00001_part0.json");
    let b = out.join("state_00001_part1.json");
    let o = roofcoh(&[
        "verify", "--inequality", "product-additivity", "--measure", "half", "--state", s(&a), "--state", s(&b),
        "--format", "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["reports"][0]["gap"].as_f64().unwrap().abs() <= 1e-10);

    let o = roofcoh(&["sample", "--dims", "2,2,2,2", "--count", "1", "--seed", "5", "--out", s(&out)]);
    assert!(o.status.success());
    let o = roofcoh(&["verify", "--inequality", "npartite", "--state", s(&out.join("state_00000.json"))]);
    assert_eq!(o.status.code(), Some(0));

    let o = roofcoh(&["sample", "--dims", "2,2", "--kind", "mixed", "--rank", "2", "--out", s(&out)]);
    assert!(o.status.success());
    let text = fs::read_to_string(out.join("state_00000.json")).unwrap();
    assert!(text.contains("\"mixed\""));
}

#[test]
fn sweep_is_reproducible_and_flags_findings() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |out: &Path| {
        vec![
            "sweep".to_string(), "--dims".into(), "2,2".into(), "--count".into(), "200".into(),
            "--inequality".into(), "bipartite-sufficient".into(), "--measure".into(), "half".into(),
            "--seed".into(), "11".into(), "--out".into(), s(out).into(),
        ]
    };
    let run = |out: &Path| {
        let v = args(out);
        roofcoh(&v.iter().map(String::as_str).collect::<Vec<_>>())
    };
    let o = run(&a);
    run(&b);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let text = fs::read_to_string(&a).unwrap();
    let rows = csv_rows(&text);
    let negative = rows.iter().filter(|r| r[5].parse::<f64>().unwrap() < -1e-9).count();
    let findings = rows.iter().filter(|r| r[7] == "FINDING").count();
    assert_eq!(negative, findings);
    assert_eq!(o.status.code(), Some(if findings > 0 { 1 } else { 0 }));
    assert!(text.contains("# bipartite-sufficient: rows=200"));
}

#[test]
fn sweep_from_spec_file_with_plot() {
    let dir = TempDir::new().unwrap();
    let spec = write(
        dir.path(),
        "spec.json",
        r#"{"dims":[2,2,2],"count":50,"measure":"formation","inequalities":["tripartite","reduced-superadditivity"],"seed":3}"#,
    );
    let plot = dir.path().join("plot.csv");
    let o = roofcoh(&["sweep", "--spec", s(&spec), "--emit-plot", s(&plot), "--bins", "5"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(csv_rows(&stdout(&o)).len(), 100);
    let plot = fs::read_to_string(&plot).unwrap();
    assert!(plot.starts_with("inequality_id,bin_lo,bin_hi,count"));
    assert_eq!(plot.lines().count(), 11);

    let bad = write(dir.path(), "bad.json", r#"{"dims":[2,2],"count":5,"inequalities":["tripartite"]}"#);
    assert_eq!(roofcoh(&["sweep", "--spec", s(&bad)]).status.code(), Some(2));
}

#[test]
fn axioms_formation_qubit() {
    let o = roofcoh(&["axioms", "--dim", "2", "--samples", "20", "--restarts", "8", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let reports = v["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 5);
    assert!(reports.iter().all(|r| r["verdict"] == "pass"));
    assert_eq!(v["config"]["suite"]["samples"], 20);
}

#[test]
fn bad_thread_count_exit_2() {
    let o = Command::new(env!("CARGO_BIN_EXE_roofcoh"))
        .args(["axioms", "--dim", "2", "--samples", "1"])
        .env("ROOFCOH_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
