use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nmmetro(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nmmetro")).args(args).output().expect("spawn nmmetro")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

const BASE: &str = r#""a1": 0.4, "a2": 0.6, "rabi": 5, "lambda": 1, "horizon": 2"#;

#[test]
fn dry_run_validates_without_writing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), "c.json", &format!(r#"{{"kind": "fisher-sweep", {BASE}}}"#));
    let o = nmmetro(&["run", &cfg, "--dry-run", "--output-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("config ok"));
    assert!(!out.exists());
}

#[test]
fn schema_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    for (name, body) in [
        ("unknown.json", format!(r#"{{"kind": "blp", {BASE}, "tolerance": 1e-3}}"#)),
        ("kind.json", format!(r#"{{"kind": "nope", {BASE}}}"#)),
        ("range.json", r#"{"kind": "blp", "a1": 0.4, "a2": 0.6, "rabi": 5, "lambda": -1, "horizon": 2}"#.to_string()),
        ("syntax.json", "{".to_string()),
    ] {
        let cfg = write_config(dir.path(), name, &body);
        let o = nmmetro(&["run", &cfg, "--dry-run"]);
        assert_eq!(o.status.code(), Some(1), "{name}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("error"), "{name}");
    }
    let missing = dir.path().join("absent.json");
    assert_eq!(nmmetro(&["run", missing.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(nmmetro(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn flows_run_writes_tables_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("flows");
    let cfg = write_config(
        dir.path(),
        "flows.json",
        &format!(r#"{{"kind": "flows-tags", {BASE}, "grid_points": 400, "s_grid": [-0.5, 0.5], "phi_grid": [0.0, 3.141592653589793]}}"#),
    );
    let o = nmmetro(&["run", &cfg, "--threads", "1", "--output-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["kind"], "flows-tags");
    assert_eq!(manifest["config"]["grid_points"], 400);
    let outputs = manifest["outputs"].as_array().unwrap();
    assert!(!outputs.is_empty());
    for name in outputs {
        assert!(out.join(name.as_str().unwrap()).exists(), "{name}");
    }
    let curves = fs::read_to_string(out.join("flows_curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 402);
}
