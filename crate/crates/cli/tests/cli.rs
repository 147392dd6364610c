use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const EXAMPLE: &str = r#"{"m":3,"theta":{"0":1,"1":1,"2":1,"0,1":1.5,"0,2":1.5,"1,2":1.5,"0,1,2":2}}"#;
const INVALID: &str = r#"{"m":3,"theta":{"0":1,"1":1,"2":1,"0,1":1.2,"0,2":1.2,"1,2":1.2,"0,1,2":2.9}}"#;

fn excoef(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_excoef"))
        .args(args)
        .env_remove("EXCOEF_MAX_M")
        .output()
        .unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn validate_accepts_and_rejects() {
    let dir = TempDir::new().unwrap();
    let ok = excoef(&["validate", s(&write(&dir, "ok.json", EXAMPLE))]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(stdout_json(&ok)["valid"], true);

    let bad = excoef(&["validate", s(&write(&dir, "bad.json", INVALID))]);
    assert_eq!(bad.status.code(), Some(1));
    let report = stdout_json(&bad);
    let first = &report["violations"][0];
    assert_eq!(first["kind"], "NegativeTau");
    assert_eq!(first["subset"], "0,1");
    assert!((first["value"].as_f64().unwrap() + 1.5).abs() < 1e-12);
}

#[test]
fn tau_then_theta_recovers_the_table() {
    let dir = TempDir::new().unwrap();
    let ecf = write(&dir, "ecf.json", EXAMPLE);
    let tau = dir.path().join("tau.json");
    assert!(excoef(&["tau", s(&ecf), "-o", s(&tau)]).status.success());

    let one = excoef(&["theta", "--tau", s(&tau), "--set", "0,1,2"]);
    assert!(one.status.success());
    assert_eq!(String::from_utf8(one.stdout).unwrap().trim().parse::<f64>().unwrap(), 2.0);

    let theta = dir.path().join("theta.json");
    assert!(excoef(&["theta", "--tau", s(&tau), "-o", s(&theta)]).status.success());
    let tau2 = dir.path().join("tau2.json");
    assert!(excoef(&["tau", s(&theta), "-o", s(&tau2)]).status.success());
    assert_eq!(std::fs::read(&tau).unwrap(), std::fs::read(&tau2).unwrap());
}

#[test]
fn input_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let missing = excoef(&["validate", s(&dir.path().join("nope.json"))]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nope.json"));

    let partial = write(&dir, "partial.json", r#"{"m":2,"theta":{"0":1,"1":1}}"#);
    let out = excoef(&["validate", s(&partial)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("\"0,1\""));

    let garbage = write(&dir, "garbage.json", "{\"m\":");
    assert_eq!(excoef(&["validate", s(&garbage)]).status.code(), Some(2));
    assert_eq!(excoef(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn ground_set_cap_comes_from_the_environment() {
    let dir = TempDir::new().unwrap();
    let ecf = write(&dir, "ecf.json", EXAMPLE);
    let out = Command::new(env!("CARGO_BIN_EXE_excoef"))
        .args(["validate", s(&ecf)])
        .env("EXCOEF_MAX_M", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap"));
}

#[test]
fn simulate_then_estimate() {
    let dir = TempDir::new().unwrap();
    let ecf = write(&dir, "ecf.json", EXAMPLE);
    let csv = dir.path().join("samples.csv");
    let sim = excoef(&["simulate", s(&ecf), "-n", "50000", "--seed", "3", "-o", s(&csv)]);
    assert!(sim.status.success());
    assert!(dir.path().join("samples.meta.json").exists());

    let est = excoef(&["estimate", "--samples", s(&csv), "--set", "0,1"]);
    assert!(est.status.success());
    let doc = stdout_json(&est);
    let text = doc.to_string();
    assert!(text.contains("ExponentialRate") || text.contains("exponential_rate"), "{text}");
    let point = find_number(&doc, "point").unwrap();
    assert!((point - 1.5).abs() < 4.0 * 1.5 / (50_000f64).sqrt(), "{point}");
}

fn find_number(v: &Value, key: &str) -> Option<f64> {
    match v {
        Value::Object(map) => map
            .get(key)
            .and_then(Value::as_f64)
            .or_else(|| map.values().find_map(|x| find_number(x, key))),
        Value::Array(items) => items.iter().find_map(|x| find_number(x, key)),
        _ => None,
    }
}

#[test]
fn simulate_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let ecf = write(&dir, "ecf.json", EXAMPLE);
    let a = excoef(&["simulate", s(&ecf), "-n", "100", "--seed", "9"]);
    let b = excoef(&["simulate", s(&ecf), "-n", "100", "--seed", "9"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(String::from_utf8(a.stdout).unwrap().lines().count(), 101);
}

#[test]
fn depset_lists_vertices_and_faces() {
    let dir = TempDir::new().unwrap();
    let ecf = write(&dir, "ecf.json", EXAMPLE);
    let out = excoef(&["depset", s(&ecf), "--vertices"]);
    assert!(out.status.success());
    assert_eq!(stdout_json(&out)["vertices"].as_array().unwrap().len(), 13);

    let face = excoef(&["depset", s(&ecf), "--check-face", "0,1"]);
    assert!(face.status.success());
    assert_eq!(stdout_json(&face)["face"]["attained"], true);

    let support = excoef(&["depset", s(&ecf), "--support", "1,1,1"]);
    assert!(support.status.success());
    assert_eq!(stdout_json(&support)["support"]["value"].as_f64(), Some(2.0));
}

#[test]
fn transform_and_triangle_checks() {
    let dir = TempDir::new().unwrap();
    let ecf = write(&dir, "ecf.json", EXAMPLE);
    let out = excoef(&["transform", s(&ecf), "--bernstein", r#"{"kind":"power","q":0.5}"#]);
    assert!(out.status.success());
    let pair = stdout_json(&out)["theta"]["0,1"].as_f64().unwrap();
    assert!((pair - 1.5f64.sqrt()).abs() < 1e-12);

    let tri = excoef(&["check-triangle", s(&ecf)]);
    assert_eq!(tri.status.code(), Some(0));
    let bad = excoef(&["transform", s(&ecf), "--bernstein", r#"{"kind":"power","q":2}"#]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn storm_commands() {
    let dir = TempDir::new().unwrap();
    let shape = write(&dir, "shape.json", r#"{"d":1,"cells":[[0],[1],[2]]}"#);
    let chi = excoef(&["storm-chi", "--shape", s(&shape), "--lag", "1"]);
    assert!(chi.status.success());
    let v: f64 = String::from_utf8(chi.stdout).unwrap().trim().parse().unwrap();
    assert_eq!(v, 2.0 / 3.0);

    let far = excoef(&["storm-chi", "--shape", s(&shape), "--lag", "5"]);
    assert_eq!(String::from_utf8(far.stdout).unwrap().trim().parse::<f64>().unwrap(), 0.0);

    let csv = dir.path().join("storm.csv");
    let sim = excoef(&["storm", "--shape", s(&shape), "--window", "0..4", "-n", "200", "-o", s(&csv)]);
    assert!(sim.status.success(), "{}", String::from_utf8_lossy(&sim.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 201);
    assert_eq!(text.lines().next().unwrap().split(',').count(), 5);
}
