use std::fs;
use std::process::Command;

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_cglw");

fn run(args: &[&str]) -> (i32, String) {
    let out = Command::new(BIN).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn error_kind(stderr: &str) -> String {
    let v: Value = serde_json::from_str(stderr.trim()).unwrap();
    v["error"].as_str().unwrap().to_string()
}

#[test]
fn config_file_and_overrides_are_resolved() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"command": "evolve", "params": {"alpha": 0.02}, "evolve": {"t_final": 0.05, "dt": 0.01}}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let (code, err) = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "params.epsilon=0.2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let resolved: Value = serde_json::from_str(&fs::read_to_string(out.join("resolved_config.json")).unwrap()).unwrap();
    assert_eq!(resolved["params"]["alpha"], 0.02);
    assert_eq!(resolved["params"]["epsilon"], 0.2);
    assert_eq!(resolved["grid"]["boundary"], "periodic");
    let monitors = fs::read_to_string(out.join("monitors.csv")).unwrap();
    assert_eq!(monitors.lines().count(), 1 + 6);
    let snap = fs::read_to_string(out.join("snapshot_final.csv")).unwrap();
    assert_eq!(snap.lines().next(), Some("x,re_u,im_u,v"));
    assert_eq!(snap.lines().count(), 257);
}

#[test]
fn exit_codes_distinguish_failure_classes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = out.to_str().unwrap();

    let (code, err) = run(&["--config", "/definitely/missing.json", "--out", o]);
    assert_eq!((code, error_kind(&err).as_str()), (1, "io"));

    let (code, err) = run(&["--command", "evolve", "--set", "params.theta=1.6", "--out", o]);
    assert_eq!((code, error_kind(&err).as_str()), (2, "config"));
    assert!(err.contains("theta"));

    let (code, _) = run(&["--command", "evolve", "--set", "bogus=1", "--out", o]);
    assert_eq!(code, 2);

    let (code, _) = run(&["--out", o]);
    assert_eq!(code, 2, "a command is required");

    let (code, err) = run(&[
        "--command",
        "evolve",
        "--set",
        r#"evolve.u0={"kind":"gaussian","amplitude":1e3,"centre":0,"width":1}"#,
        "--set",
        "params.theta=1.5",
        "--out",
        o,
    ]);
    assert_eq!((code, error_kind(&err).as_str()), (3, "blow_up"));
    assert!(out.join("snapshot_last_finite.csv").exists());
}

#[test]
fn standing_wave_writes_profile_and_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sw");
    let (code, err) = run(&[
        "--command",
        "standing_wave",
        "--set",
        "standing_wave.case=DefocusM2",
        "--set",
        "params.b=0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let cert: Value = serde_json::from_str(&fs::read_to_string(out.join("certificate.json")).unwrap()).unwrap();
    for key in ["case", "lambda", "a_recovered", "b_recovered", "residual_U", "residual_algebraic", "action", "certificates", "pass"] {
        assert!(cert.get(key).is_some(), "missing {key}");
    }
    assert_eq!(cert["case"], "DefocusM2");
    assert_eq!(cert["pass"], true);
    assert_eq!(cert["b_recovered"], 0.0);
    let lambda = cert["lambda"].as_f64().unwrap();
    let a = cert["a_recovered"].as_f64().unwrap();
    assert!((0.05f64.powf(1.5) / a.sqrt() - lambda).abs() <= 1e-12 * lambda);
    let profile = fs::read_to_string(out.join("profile.csv")).unwrap();
    assert_eq!(profile.lines().next(), Some("x,U,V"));
}

#[test]
fn case_parameter_mismatch_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = run(&[
        "--command",
        "standing_wave",
        "--set",
        "standing_wave.case=FocusAB_pos",
        "--set",
        "params.a=0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("FocusAB_pos"), "{err}");
}

#[test]
fn viscosity_sweep_reports_decreasing_distances() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let (code, err) = run(&["--command", "viscosity_sweep", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let sweep: Value = serde_json::from_str(&fs::read_to_string(out.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(sweep["strictly_decreasing"], true);
    assert_eq!(sweep["distances"].as_array().unwrap().len(), 2);
}
