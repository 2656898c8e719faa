use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mdiew(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdiew"))
        .args(args)
        .output()
        .unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(
        dir.path(),
        "s.json",
        r#"{"schema_version": 1, "state": {"name": "werner", "p": 0.9}, "witness": {"name": "werner"},
            "measurement": {"kind": "ideal"}, "shots": 100000, "trials": 3, "seed": 42}"#,
    );
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    assert!(
        mdiew(&["simulate", &scenario, "--out", a.to_str().unwrap()])
            .status
            .success()
    );
    assert!(
        mdiew(&["simulate", &scenario, "--out", b.to_str().unwrap()])
            .status
            .success()
    );
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let v = read_json(&a);
    assert_eq!(v["seed"], 42);
    assert!(v["generator_name"].as_str().unwrap().contains("ChaCha20"));
    assert!(v["mean_value"].as_f64().unwrap() < -1.5);
    assert!(dir.path().join("a.csv").exists());

    let c = dir.path().join("c.json");
    assert!(mdiew(&[
        "simulate",
        &scenario,
        "--seed",
        "43",
        "--out",
        c.to_str().unwrap()
    ])
    .status
    .success());
    assert_ne!(read_json(&a)["estimates"], read_json(&c)["estimates"]);
}

#[test]
fn simulate_both_schemes() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(
        dir.path(),
        "s.json",
        r#"{"schema_version": 1, "state": {"name": "werner", "p": 0.9}, "witness": {"name": "werner"},
            "scheme": "both", "shot_grid": [1000, 10000], "trials": 20, "seed": 1}"#,
    );
    let out = dir.path().join("cmp.json");
    assert!(
        mdiew(&["simulate", &scenario, "--out", out.to_str().unwrap()])
            .status
            .success()
    );
    let v = read_json(&out);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for key in [
        "state",
        "witness",
        "scheme",
        "G",
        "trials",
        "mean_value",
        "empirical_sigma",
        "mean_p_paper",
        "mean_p_gaussian",
        "seed",
        "generator_name",
    ] {
        assert!(rows[0].get(key).is_some(), "missing {key}");
    }
    assert!(v["log_p_fit"]["all-outcome"]["r_squared"].is_number());
    let csv = std::fs::read_to_string(dir.path().join("cmp.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2 * 20);
}

#[test]
fn noisy_measurement_never_flags_separable_states() {
    let dir = tempfile::tempdir().unwrap();
    for state in [
        r#"{"name": "random-separable", "parties": 2}"#,
        r#"{"name": "werner", "p": 0.3}"#,
    ] {
        let scenario = write(
            dir.path(),
            "s.json",
            &format!(
                r#"{{"schema_version": 1, "state": {state}, "witness": {{"name": "werner"}},
                    "measurement": {{"kind": "noisy", "v": 0.8}}, "shots": 100000, "trials": 100, "seed": 7}}"#
            ),
        );
        let out = dir.path().join("r.json");
        assert!(
            mdiew(&["simulate", &scenario, "--out", out.to_str().unwrap()])
                .status
                .success()
        );
        let v = read_json(&out);
        assert_eq!(v["detections"], 0, "{state}");
        let min_p = v["estimates"]
            .as_array()
            .unwrap()
            .iter()
            .map(|e| e["p_value"].as_f64().unwrap())
            .fold(1.0, f64::min);
        assert!(min_p >= 1e-3, "{state}: {min_p}");
    }
}

#[test]
fn verify_mdi_echoes_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v.json");
    let o = mdiew(&[
        "verify-mdi",
        "--trials",
        "40",
        "--seed",
        "99",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let v = read_json(&out);
    assert_eq!(v["seed"], 99);
    assert_eq!(v["violations"], 0);
    assert!(v["min_value"].as_f64().unwrap() >= -1e-7);
    for b in v["batteries"].as_array().unwrap() {
        for key in [
            "witness",
            "class",
            "trials",
            "min_value",
            "violations",
            "seed",
        ] {
            assert!(b.get(key).is_some());
        }
    }
}

#[test]
fn reproduce_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = mdiew(&["reproduce", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout
        .lines()
        .any(|l| l.starts_with("PASS werner beta^(1,1)")));
    let v = read_json(&out);
    assert_eq!(v["passed"], true);
    let first = &v["checks"][0];
    assert!(first["computed"].is_array() && first["expected"].is_array());
}

#[test]
fn decompose_named_and_file_witnesses() {
    let o = mdiew(&["decompose", "--witness", "w-state", "--outcome", "1,1,1"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["beta"][3][3][3].as_f64().unwrap() - 1.0).abs() < 1e-9);

    let dir = tempfile::tempdir().unwrap();
    // I/2 - |ψ⁻⟩⟨ψ⁻| written out by hand
    let w = write(
        dir.path(),
        "w.json",
        "[[[0.5,0],[0,0],[0,0],[0,0]],[[0,0],[0,0],[0.5,0],[0,0]],[[0,0],[0.5,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[0.5,0]]]",
    );
    let o = mdiew(&["decompose", "--witness", &w, "--outcome", "1,1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["beta"][0][0].as_f64().unwrap() - 4.0).abs() < 1e-9);
    assert!((v["beta"][0][1].as_f64().unwrap() + 1.0).abs() < 1e-9);

    let all = mdiew(&["decompose", "--witness", "werner"]);
    let v: Value = serde_json::from_slice(&all.stdout).unwrap();
    assert_eq!(v["beta"].as_object().unwrap().len(), 16);
}

#[test]
fn depth_verdicts() {
    let o = mdiew(&["depth", "--p", "0.5"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let verdicts = v["verdicts"].as_array().unwrap();
    assert_eq!(verdicts[0]["detected"], false);
    assert_eq!(verdicts[1]["detected"], true);
}

#[test]
fn usage_and_input_errors_exit_two() {
    assert_eq!(mdiew(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        mdiew(&["decompose", "--witness", "werner", "--outcome", "1,5"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        mdiew(&["decompose", "--witness", "werner", "--outcome", "1,1,1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        mdiew(&["simulate", "/nonexistent/scenario.json"])
            .status
            .code(),
        Some(2)
    );
    let dir = tempfile::tempdir().unwrap();
    let s = write(
        dir.path(),
        "s.json",
        r#"{"schema_version": 9, "state": {"name": "werner", "p": 0.9}, "witness": {"name": "werner"}}"#,
    );
    let o = mdiew(&["simulate", &s]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("schema_version"));
}

#[test]
fn perturbed_reproduce_exits_one() {
    assert_eq!(
        mdiew(&["reproduce", "--inject-perturbation", "1e-3"])
            .status
            .code(),
        Some(1)
    );
}
