use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn models_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn maxrel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxrel"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn model(name: &str) -> String {
    models_dir().join(name).to_string_lossy().into_owned()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write_temp(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn absorbing_keep_or_fail() {
    let out = maxrel(&["absorbing", &model("example31.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["f_star"], serde_json::json!(["s1", "s2"]));
    assert_eq!(v["g_star"], serde_json::json!([]));
}

#[test]
fn solve_maintenance_float_and_exact() {
    let out = maxrel(&["solve", &model("maintenance.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["final_policy"]["(1,2)"], "c");
    assert_eq!(v["final_policy"]["(2,1)"], "c");
    let q12 = v["q_star"]["(1,2)"].as_f64().unwrap();
    let q22 = v["q_star"]["(2,2)"].as_f64().unwrap();
    assert!((q12 - 1.7 / 15.4).abs() < 1e-10);
    assert!((q22 - 11.1 / 92.4).abs() < 1e-10);
    assert_eq!(v["termination"], "converged");
    for key in [
        "analysis",
        "iterations",
        "r_star",
        "oe_residual",
        "wall_time_ms",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }

    let exact = stdout_json(&maxrel(&["solve", "--exact", &model("maintenance.json")]));
    assert_eq!(exact["q_star"]["(1,2)"], "17/154");
    assert_eq!(exact["q_star"]["(2,2)"], "37/308");
    assert_eq!(exact["oe_residual"], "0");
}

#[test]
fn reports_are_byte_stable_apart_from_wall_time() {
    let strip = |out: Output| {
        let mut v = stdout_json(&out);
        v.as_object_mut().unwrap().remove("wall_time_ms");
        serde_json::to_string(&v).unwrap()
    };
    let a = strip(maxrel(&["solve", &model("maintenance.json")]));
    let b = strip(maxrel(&["solve", &model("maintenance.json")]));
    assert_eq!(a, b);
}

#[test]
fn validate_reports_bad_row_sum() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_temp(
        &dir,
        "bad.json",
        r#"{"states": ["f", "s"], "failed": ["f"],
            "actions": {"f": ["a"], "s": ["a"]},
            "transitions": {"f|a": {"f": 1}, "s|a": {"f": 0.5, "s": 0.4}}}"#,
    );
    let out = maxrel(&["validate", &bad]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["error"]["code"], "BadRowSum");

    let ok = maxrel(&["validate", &model("example31.json")]);
    assert_eq!(ok.status.code(), Some(0));
    let v = stdout_json(&ok);
    assert_eq!(v["states"], 3);
    assert_eq!(v["arithmetic"], "float");
}

#[test]
fn usage_and_io_errors_exit_2() {
    assert_eq!(
        maxrel(&["solve", "/nonexistent/model.json"]).status.code(),
        Some(2)
    );
    assert_eq!(maxrel(&["frobnicate"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let garbage = write_temp(&dir, "g.json", "{ not json");
    assert_eq!(maxrel(&["validate", &garbage]).status.code(), Some(2));
}

#[test]
fn evaluate_inside_and_outside_class() {
    let dir = tempfile::tempdir().unwrap();
    let keep = write_temp(&dir, "keep.json", r#"{"s1": "c", "s2": "c"}"#);
    let leave = write_temp(&dir, "leave.json", r#"{"s1": "d", "s2": "d"}"#);
    let v = stdout_json(&maxrel(&[
        "evaluate",
        &model("example31.json"),
        "--policy",
        &keep,
    ]));
    assert_eq!(v["in_class"], true);
    assert_eq!(v["q"]["s1"], 0.0);
    let v = stdout_json(&maxrel(&[
        "evaluate",
        &model("example31.json"),
        "--policy",
        &leave,
    ]));
    assert_eq!(v["in_class"], false);
    assert_eq!(v["q"]["s1"], 1.0);
    assert!(v["warning"].is_string());

    let unknown = write_temp(&dir, "unknown.json", r#"{"s1": "zz", "s2": "c"}"#);
    let out = maxrel(&["evaluate", &model("example31.json"), "--policy", &unknown]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["error"]["code"], "UnknownStateOrAction");
}

#[test]
fn initial_policy_flag() {
    let dir = tempfile::tempdir().unwrap();
    let d = write_temp(&dir, "d.json", r#"{"(1,2)": "d", "(2,1)": "d"}"#);
    let v = stdout_json(&maxrel(&[
        "solve",
        &model("maintenance.json"),
        "--initial-policy",
        &d,
    ]));
    assert_eq!(v["iterations"].as_array().unwrap().len(), 2);
    assert_eq!(v["final_policy"]["(1,2)"], "c");
}

#[test]
fn oracle_agrees_on_bundled_models() {
    for name in ["example31.json", "maintenance.json"] {
        let out = maxrel(&["oracle", &model(name)]);
        assert_eq!(out.status.code(), Some(0), "{name}");
        let v = stdout_json(&out);
        assert_eq!(v["oracle"]["agree"], true);
        assert!(v["q_star"].is_object());
    }
}

#[test]
fn simulate_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let c_both = write_temp(&dir, "c_both.json", r#"{"(1,2)": "c", "(2,1)": "c"}"#);
    let args = [
        "simulate",
        &model("maintenance.json"),
        "--policy",
        &c_both,
        "--state",
        "(2,2)",
        "--horizon",
        "50",
        "--trials",
        "5000",
        "--seed",
        "11",
    ];
    let a = maxrel(&args);
    let b = maxrel(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v = stdout_json(&a);
    assert_eq!(v["trials"], 5000);
    assert!(v["rng"].as_str().unwrap().contains("ChaCha8"));
}
