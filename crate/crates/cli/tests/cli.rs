use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn riemlap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riemlap"))
        .args(args)
        .env("RIEMLAP_DATA_DIR", "/nonexistent-riemlap-data")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p.to_str().unwrap().to_string()
}

const GAUSS: &str = r#"{"target":{"name":"gaussian","mean":[1.0,-1.0],"cov":[[2.0,0.8],[0.8,1.0]]},
    "approx":{"variant":"ela","n_samples":100,"seed":3}}"#;

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn sample_writes_requested_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "g.json", GAUSS);
    let out = path(dir.path(), "out");
    let o = riemlap(&["sample", "--config", &cfg, "--out", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/samples.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.is_empty()).collect();
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().all(|r| r.split(',').count() == 2));
    let diag: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/diagnostics.json")).unwrap()).unwrap();
    assert_eq!(diag["n_ok"], 100);
    assert!(dir.path().join("out/run.json").exists());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "b.json",
        r#"{"target":{"name":"banana"},"approx":{"variant":"rla_b","n_samples":50}}"#,
    );
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = path(dir.path(), &format!("run{k}"));
        let o = riemlap(&["sample", "--config", &cfg, "--out", &out, "--seed", "9"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(std::fs::read(dir.path().join(format!("run{k}/samples.csv"))).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn flags_override_the_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "g.json", GAUSS);
    let out = path(dir.path(), "out");
    let o = riemlap(&["sample", "--config", &cfg, "--out", &out, "--n-samples", "7", "--variant", "rla_f"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let diag: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/diagnostics.json")).unwrap()).unwrap();
    assert_eq!(diag["n_samples"], 7);
    assert_eq!(diag["variant"], "RLA-F");
}

#[test]
fn plot_is_valid_svg_with_one_circle_per_sample() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "g.json", GAUSS);
    let out = path(dir.path(), "out");
    assert!(riemlap(&["sample", "--config", &cfg, "--out", &out]).status.success());
    let svg = path(dir.path(), "plot.svg");
    let samples = path(dir.path(), "out/samples.csv");
    let o = riemlap(&["plot", "--config", &cfg, "--samples", &samples, "--out", &svg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&svg).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    let circles = doc.descendants().filter(|n| n.has_tag_name("circle")).count();
    assert!(circles >= 100);
    let contours = doc.descendants().filter(|n| n.attribute("class") == Some("contour")).count();
    assert!(contours > 0);
}

#[test]
fn plot_rejects_non_planar_targets() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "iso.json",
        r#"{"target":{"name":"isotropic_gaussian","dim":3},"approx":{"n_samples":10}}"#,
    );
    let out = path(dir.path(), "out");
    assert!(riemlap(&["sample", "--config", &cfg, "--out", &out]).status.success());
    let samples = path(dir.path(), "out/samples.csv");
    let o = riemlap(&["plot", "--config", &cfg, "--samples", &samples, "--out", &path(dir.path(), "p.svg")]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn missing_dataset_is_reported() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "lr.json",
        r#"{"target":{"name":"logreg","dataset":"ripley"},"approx":{"n_samples":10}}"#,
    );
    let o = riemlap(&["sample", "--config", &cfg, "--out", &path(dir.path(), "out")]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("ripley"), "{err}");
}

#[test]
fn invalid_config_names_the_field() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        r#"{"target":{"name":"banana"},"approx":{"n_samples":"many"}}"#,
    );
    let o = riemlap(&["sample", "--config", &cfg, "--out", &path(dir.path(), "out")]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("n_samples"));
}

#[test]
fn evaluate_reports_distance_to_exact_reference() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "g.json",
        r#"{"target":{"name":"gaussian","mean":[0.0,0.0],"cov":[[1.0,0.0],[0.0,1.0]]},
            "approx":{"variant":"ela","n_samples":400},"reference":{"kind":"exact","n":400}}"#,
    );
    let out = path(dir.path(), "out");
    assert!(riemlap(&["sample", "--config", &cfg, "--out", &out]).status.success());
    let samples = path(dir.path(), "out/samples.csv");
    let ev = path(dir.path(), "ev");
    let o = riemlap(&["evaluate", "--config", &cfg, "--samples", &samples, "--out", &ev]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("ev/evaluation.json")).unwrap()).unwrap();
    let w1 = report["w1"].as_f64().unwrap();
    let floor = report["floor_w1"].as_f64().unwrap();
    assert!(w1 > 0.0 && w1 < 3.0 * floor, "w1 {w1} floor {floor}");
}
