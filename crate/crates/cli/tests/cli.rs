use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn idt_lab(args: &[&str], dir: &Path, env_seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_idt-lab"));
    cmd.args(args).current_dir(dir).env_remove("IDT_SEED");
    if let Some(s) = env_seed {
        cmd.env("IDT_SEED", s);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, name: &str, v: &Value) -> String {
    let p = dir.join(name);
    fs::write(&p, v.to_string()).unwrap();
    p.to_string_lossy().into_owned()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn brownian() -> Value {
    json!({"kind": "levy", "triplet": {"drift": 0.0, "gaussian_var": 1.0, "jump_part": {"kind": "none"}}})
}

#[test]
fn idt_test_passes_for_brownian_and_rejects_besq() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "b.json", &json!({"construction": brownian(), "times": [0.5, 1.0], "m": 10000, "seed": 1}));
    let out = tmp.path().join("b");
    let o = idt_lab(&["idt-test", "--config", &cfg, "--out", out.to_str().unwrap()], tmp.path(), None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["decision"], "pass");
    let mut keys: Vec<&String> = r.as_object().unwrap().keys().collect();
    keys.sort();
    assert_eq!(keys, ["decision", "m", "probes", "seed", "statistic", "test", "threshold", "times"]);

    let cfg = write_config(tmp.path(), "q.json", &json!({"construction": {"kind": "besq1"}, "times": [1.0], "m": 10000}));
    let out = tmp.path().join("q");
    let o = idt_lab(&["idt-test", "--config", &cfg, "--out", out.to_str().unwrap()], tmp.path(), None);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(report(&out)["decision"], "reject");
}

#[test]
fn schema_violations_exit_one_with_json_on_stderr() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.json", &json!({"construction": brownian(), "times": [1.0], "m": 500, "typo": 1}));
    let o = idt_lab(&["idt-test", "--config", &cfg, "--out", "x"], tmp.path(), None);
    assert_eq!(o.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "ConfigError");
    assert!(err["message"].as_str().unwrap().contains("typo"));
    assert!(!tmp.path().join("x").exists(), "nothing may be written before validation");

    // valid schema, failing core validation
    let cfg = write_config(tmp.path(), "small.json", &json!({"construction": brownian(), "times": [1.0], "m": 10}));
    let o = idt_lab(&["idt-test", "--config", &cfg, "--out", "y"], tmp.path(), None);
    assert_eq!(o.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "SampleTooSmall");
}

#[test]
fn seed_priority_flag_then_env_then_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.json", &json!({"construction": brownian(), "times": [1.0], "m": 100, "seed": 11}));
    let seed_of = |args: &[&str], env: Option<&str>, out: &str| {
        let mut a = vec!["simulate", "--config", cfg.as_str(), "--out", out];
        a.extend_from_slice(args);
        let o = idt_lab(&a, tmp.path(), env);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let meta: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join(out).join("metadata.json")).unwrap()).unwrap();
        (meta["seed"].as_u64().unwrap(), meta["seed_source"].as_str().unwrap().to_string())
    };
    assert_eq!(seed_of(&[], None, "a"), (11, "config".into()));
    assert_eq!(seed_of(&[], Some("12"), "b"), (12, "env".into()));
    assert_eq!(seed_of(&["--seed", "13"], Some("12"), "c"), (13, "flag".into()));
    // the echoed config reproduces the run exactly
    let echo = tmp.path().join("echo.json");
    let meta: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("c/metadata.json")).unwrap()).unwrap();
    fs::write(&echo, meta["config"].to_string()).unwrap();
    let o = idt_lab(&["simulate", "--config", echo.to_str().unwrap(), "--out", "d"], tmp.path(), None);
    assert_eq!(o.status.code(), Some(0));
    for f in ["report.json", "data_paths.csv"] {
        assert_eq!(fs::read(tmp.path().join("c").join(f)).unwrap(), fs::read(tmp.path().join("d").join(f)).unwrap());
    }
}

#[test]
fn transform_measure_csv_matches_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let nu = json!({"kind": "density", "density": {"kind": "power", "coefficient": 1.0 / (2.0 * std::f64::consts::PI).sqrt(), "exponent": -0.5}, "support": [0.0, null], "formal": true});
    let cfg = write_config(tmp.path(), "t.json", &json!({"nu": nu, "window": [0.5, 5.0]}));
    let o = idt_lab(&["transform-measure", "--config", &cfg, "--out", "t"], tmp.path(), None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(tmp.path().join("t/data_transform.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("v,computed,closed_form"));
    let mut n = 0;
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let want = 1.0 / (2.0 * cols[0]).sqrt();
        assert!((cols[1] - want).abs() < 1e-3 * want);
        assert!((cols[2] - want).abs() < 1e-12 * want);
        n += 1;
    }
    assert_eq!(n, 20);
    let r = report(&tmp.path().join("t"));
    // ∫_{0.5}^{5} dv / √(2v) = √10 - 1
    let w = r["window"]["transform"].as_f64().unwrap();
    assert!((w - (10f64.sqrt() - 1.0)).abs() < 1e-3 * w);
}

#[test]
fn spectral_and_path_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "s.json",
        &json!({"phi": {"shape": {"kind": "power_tail_upper", "alpha": 1.0}}, "times": [1.0, 2.0], "hirsch_n": 16, "output": {"format": "csv"}}),
    );
    let o = idt_lab(&["spectral", "--config", &cfg, "--out", "s"], tmp.path(), None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = tmp.path().join("s");
    let dens = fs::read_to_string(dir.join("data_density.csv")).unwrap();
    assert!(dens.starts_with("y,density\n"));
    let cov = fs::read_to_string(dir.join("data_covariance.csv")).unwrap();
    let rows: Vec<&str> = cov.lines().collect();
    assert_eq!(rows[0], "s,t,covariance");
    assert_eq!(rows.len(), 5);
    let last: Vec<f64> = rows[2].split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!((last[0], last[1]), (1.0, 2.0));
    assert!((last[2] - 1.0).abs() < 1e-12);
    assert!(fs::read_to_string(dir.join("report.csv")).unwrap().starts_with("field,value\n"));

    let m = json!({"atoms": [{"weight": 1.0, "times": [0.0, 1.0, 2.0], "values": [0.0, 1.0, 1.0]}]});
    let cfg = write_config(tmp.path(), "p.json", &json!({"measure": m, "n": [2], "functionals": [{"kind": "indicator", "time": 0.75}]}));
    let o = idt_lab(&["path-measure-check", "--config", &cfg, "--out", "p"], tmp.path(), None);
    assert_eq!(o.status.code(), Some(2));
    let r = report(&tmp.path().join("p"));
    assert_eq!(r["checks"][0]["residuals"][0]["residual"], 1.0);
    assert!(r["u_resolution"].is_null());

    let cfg = write_config(
        tmp.path(),
        "l.json",
        &json!({"measure": {"atoms": [{"weight": 1.0, "times": [0.0, 1.0, 1e4], "values": [0.0, 1.0, 1.0]}]},
            "lift": {"u_max": 3.0, "cells": 30, "horizon": 3.0}, "functionals": [{"kind": "indicator", "time": 1.0}]}),
    );
    let o = idt_lab(&["path-measure-check", "--config", &cfg, "--out", "l"], tmp.path(), None);
    assert_eq!(o.status.code(), Some(0));
    let r = report(&tmp.path().join("l"));
    assert!((r["u_resolution"].as_f64().unwrap() - 0.1).abs() < 1e-12);
    assert_eq!(r["checks"].as_array().unwrap().len(), 2);
}

#[test]
fn scenario_mismatch_and_missing_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &json!({"scenario": "tsd-test", "construction": brownian(), "c": 0.5, "times": [1.0], "m": 200}));
    let o = idt_lab(&["idt-test", "--config", &cfg], tmp.path(), None);
    assert_eq!(o.status.code(), Some(1));
    let o = idt_lab(&["idt-test", "--config", "nope.json"], tmp.path(), None);
    assert_eq!(o.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "ConfigError");
}
