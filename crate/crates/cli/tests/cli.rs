//! Runner behaviour through the binary and the library: exit codes,
//! validation before compute, manifests and reports.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use confsurf::{ComplexField, Cplx, Grid, RationalFn};
use confsurf_cli::manifest::{Manifest, Status};
use confsurf_cli::{report, Batch, CliError};
use serde_json::{json, Value};

fn write_config(dir: &Path, config: &Value) -> PathBuf {
    let path = dir.join("batch.json");
    std::fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path
}

fn confsurf(args: &[&str], config: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_confsurf"));
    cmd.args(args).env_remove("CONFSURF_THREADS");
    if let Some(c) = config {
        cmd.arg(c);
    }
    cmd.output().expect("binary runs")
}

fn manifest(dir: &Path) -> Manifest {
    Manifest::load(&dir.join("confsurf-out/manifest.json")).unwrap()
}

#[test]
fn empty_batch_gives_an_empty_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &json!({ "scenarios": [] }));
    let out = confsurf(&["run"], Some(&cfg));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(tmp.path());
    assert!(m.scenarios.is_empty());
    assert!(report(&m).contains("0 checks, 0 failures"));
}

#[test]
fn invalid_configs_exit_2_before_any_output() {
    let bad = [
        json!({ "scenarios": [{ "name": "x", "kind": "no_such_kind" }] }),
        json!({ "scenarios": [
            { "name": "x", "kind": "selfsimilar_check" },
            { "name": "x", "kind": "selfsimilar_check" }
        ] }),
        json!({ "scenarios": [{ "name": "x", "kind": "oracle_test", "parameters": { "gird": {} } }] }),
        json!({ "scenarios": [{ "name": "x", "kind": "oracle_test", "parameters": { "grid": { "n": 0 } } }] }),
        json!({ "scenarios": [{ "name": "x", "kind": "simulate", "parameters": {
            "initial": "rest", "sim": { "dt": 0.0 } } }] }),
        json!({ "scenarios": [{ "name": "x", "kind": "simulate", "parameters": {
            "initial": { "csv": { "r": "missing.csv", "v": "missing.csv" } } } }] }),
        json!({ "scenarios": [{ "name": "x", "kind": "oracle_test", "tolerances": { "nonsense": 1.0 } }] }),
        json!({ "scenarios": [{ "name": "x", "kind": "oracle_test", "output_dir": "../escape" }] }),
        // the second scenario is invalid, so the first must not run either
        json!({ "scenarios": [
            { "name": "ok", "kind": "selfsimilar_check" },
            { "name": "bad", "kind": "bifurcation_sweep", "parameters": { "t_ref": -1.0 } }
        ] }),
    ];
    for config in bad {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = write_config(tmp.path(), &config);
        let out = confsurf(&["run"], Some(&cfg));
        assert_eq!(out.status.code(), Some(2), "{config}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!tmp.path().join("confsurf-out").exists(), "{config} produced output");
    }
    let tmp = tempfile::tempdir().unwrap();
    let out = confsurf(&["run"], Some(&tmp.path().join("absent.json")));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &json!({ "scenarios": [] }));
    let out = Command::new(env!("CARGO_BIN_EXE_confsurf"))
        .arg("run")
        .arg(&cfg)
        .env("CONFSURF_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bifurcation_sweep_flips_at_root_one_eighth() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &json!({ "scenarios": [{ "name": "sweep", "kind": "bifurcation_sweep",
            "parameters": { "A": 1.0, "a_range": { "min": 0.05, "max": 1.0, "count": 20 } } }] }),
    );
    let out = confsurf(&["run"], Some(&cfg));
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(tmp.path().join("confsurf-out/sweep/classification.csv")).unwrap();
    let rows: Vec<(f64, String)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            assert_eq!(c[3], if c[1] == "one_valued" { "false" } else { "true" }, "brute force disagrees: {l}");
            (c[0].parse().unwrap(), c[1].to_string())
        })
        .collect();
    assert_eq!(rows.len(), 20);
    let flip = (1.0f64 / 8.0).sqrt();
    for (a, class) in &rows {
        assert_eq!(class == "bubbles", *a < flip, "a = {a}: {class}");
    }
    let t: Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("confsurf-out/sweep/threshold.json")).unwrap(),
    )
    .unwrap();
    assert!((t["bisected"].as_f64().unwrap() - flip).abs() < 1e-6);
}

#[test]
fn rest_state_records_are_constant() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &json!({ "scenarios": [{ "name": "rest", "kind": "simulate", "parameters": {
            "grid": { "n": 64, "length": 20.0 }, "initial": "rest",
            "sim": { "g": 1.0, "dt": 0.01, "t_end": 0.3, "stride": 3 } } }] }),
    );
    assert_eq!(confsurf(&["run"], Some(&cfg)).status.code(), Some(0));
    let text = std::fs::read_to_string(tmp.path().join("confsurf-out/rest/trajectory.jsonl")).unwrap();
    let records: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(records.len(), 11);
    for r in &records {
        let mut r = r.clone();
        r.as_object_mut().unwrap().remove("t");
        let mut first = records[0].clone();
        first.as_object_mut().unwrap().remove("t");
        assert_eq!(r, first);
    }
    assert_eq!(records[0]["min_abs_r"], json!(1.0));
    assert_eq!(records[0]["max_abs_v"], json!(0.0));
}

#[test]
fn csv_initial_data_matches_rational_initial_data() {
    let tmp = tempfile::tempdir().unwrap();
    let grid = Grid::new(128, 30.0).unwrap();
    let r = RationalFn::pole(Cplx::new(0.3, 2.0), 1, Cplx::new(0.2, 0.1)).unwrap();
    let v = RationalFn::pole(Cplx::new(-0.5, 2.0), 1, Cplx::new(0.3, -0.2)).unwrap();
    std::fs::write(tmp.path().join("r.csv"), ComplexField::from_rational(&grid, &r).to_csv()).unwrap();
    std::fs::write(tmp.path().join("v.csv"), ComplexField::from_rational(&grid, &v).to_csv()).unwrap();
    let sim = json!({ "dt": 0.01, "t_end": 0.1, "stride": 5 });
    let g = json!({ "n": 128, "length": 30.0 });
    let cfg = write_config(
        tmp.path(),
        &json!({ "scenarios": [
            { "name": "rational", "kind": "simulate", "parameters": {
                "grid": g, "sim": sim, "initial": { "rational": { "r": r, "v": v } } } },
            { "name": "csv", "kind": "simulate", "parameters": {
                "grid": g, "sim": sim, "initial": { "csv": { "r": "r.csv", "v": "v.csv" } } } }
        ] }),
    );
    assert_eq!(confsurf(&["run"], Some(&cfg)).status.code(), Some(0));
    let read = |s: &str, f: &str| std::fs::read_to_string(tmp.path().join("confsurf-out").join(s).join(f)).unwrap();
    for f in ["trajectory.jsonl", "final_r.csv", "final_v.csv"] {
        assert_eq!(read("rational", f), read("csv", f), "{f}");
    }
}

#[test]
fn numerical_failure_exits_3_and_is_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    // a guess far above the continuation's reach loses the zero at once
    let cfg = write_config(
        tmp.path(),
        &json!({ "scenarios": [
            { "name": "fine", "kind": "selfsimilar_check" },
            { "name": "lost", "kind": "invariant_audit", "parameters": {
                "guesses": [[0.3, 4.0]], "sim": { "g": 1.0, "dt": 0.01, "t_end": 0.05, "stride": 1 } } }
        ] }),
    );
    let out = confsurf(&["run"], Some(&cfg));
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invariants::track_zeros"));
    let m = manifest(tmp.path());
    assert_eq!(m.scenarios[0].status, Status::Ok);
    let lost = &m.scenarios[1];
    assert_eq!(lost.status, Status::NumericalFailure);
    assert!(lost.partial);
    let e = lost.error.as_ref().unwrap();
    assert_eq!((e.module.as_str(), e.operation.as_str()), ("invariants", "track_zeros"));
    let text = report(&m);
    assert!(text.contains("ERROR lost in invariants::track_zeros"), "{text}");
}

#[test]
fn report_surfaces_injected_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &json!({ "scenarios": [
            { "name": "anchor", "kind": "selfsimilar_check", "criterion": 10 },
            { "name": "hopf", "kind": "narrow_cut", "criterion": 8,
              "parameters": { "hopf": { "refine": null } } }
        ] }),
    );
    assert_eq!(confsurf(&["run"], Some(&cfg)).status.code(), Some(0));
    let out = confsurf(&["report"], Some(&tmp.path().join("confsurf-out/manifest.json")));
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains(", 0 failures,"), "{text}");
    assert!(text.contains("criterion  8: PASS") && text.contains("criterion 10: PASS"), "{text}");

    let tight = write_config(
        tmp.path(),
        &json!({ "scenarios": [
            { "name": "hopf", "kind": "narrow_cut", "criterion": 8,
              "parameters": { "hopf": { "refine": null } },
              "tolerances": { "hopf_residual_v": 0.0 } }
        ] }),
    );
    assert_eq!(confsurf(&["run"], Some(&tight)).status.code(), Some(0));
    let text = String::from_utf8(confsurf(&["report"], Some(&tmp.path().join("confsurf-out/manifest.json"))).stdout).unwrap();
    assert!(text.contains("FAIL hopf/hopf_residual_v in narrow_cut::hopf_residual"), "{text}");
    assert!(text.contains("criterion  8: FAIL"), "{text}");

    let out = confsurf(&["report"], Some(&tmp.path().join("nope.json")));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn list_kinds_names_every_kind() {
    let out = confsurf(&["list-kinds"], None);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for k in [
        "simulate",
        "exact_family",
        "narrow_cut",
        "bifurcation_sweep",
        "invariant_audit",
        "selfsimilar_check",
        "oracle_test",
    ] {
        assert!(text.lines().any(|l| l.starts_with(k)), "{k} missing");
    }
}

#[test]
fn output_paths_follow_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    let batch = Batch::parse(
        r#"{ "output_dir": "out", "scenarios": [
            { "name": "a", "kind": "selfsimilar_check", "output_dir": "nested/a_dir" } ] }"#,
        tmp.path(),
    )
    .unwrap();
    assert_eq!(batch.output_dir, tmp.path().join("out"));
    assert_eq!(batch.scenarios[0].output_dir, tmp.path().join("out/nested/a_dir"));
    let clash = Batch::parse(
        r#"{ "scenarios": [
            { "name": "a", "kind": "selfsimilar_check", "output_dir": "same" },
            { "name": "b", "kind": "selfsimilar_check", "output_dir": "same" } ] }"#,
        tmp.path(),
    );
    assert!(matches!(clash, Err(CliError::Config(_))));
}
