//! The `mclt` binary end to end: exit codes, registry text and report files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn mclt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mclt"))
        .args(args)
        .env_remove("MCLT_SEED")
        .output()
        .expect("binary runs")
}

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn counterexample_config_passes_with_unit_moduli() {
    let out_dir = tempfile::tempdir().unwrap();
    let out = mclt(&[
        "run",
        bundled("counterexample.json").to_str().unwrap(),
        "--output-dir",
        out_dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let dir = out_dir.path().join("counterexample");
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.join("report.json")).unwrap()).unwrap();
    let rows: Vec<&serde_json::Value> = report["entries"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| e["check_name"] == "counterexample_m1")
        .collect();
    assert_eq!(rows.len(), 3);
    for row in rows {
        assert!(row["param"].as_str().unwrap().contains("modulus=1;") || row["param"].as_str().unwrap().ends_with("modulus=1"));
        assert_eq!(row["statistic"].as_f64(), Some(0.0));
    }
    let csv = std::fs::read_to_string(dir.join("report.csv")).unwrap();
    assert!(csv.starts_with("check_name,n,param,statistic,threshold,pass,se,seed,samples"));
    assert!(dir.join("metadata.json").exists());
    assert!(dir.join("tightness_1.csv").exists());
}

#[test]
fn malformed_json_exits_one_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "{\n  \"experiment_id\": \"x\",\n  \"seed\": 1,\n  oops\n}");
    let out = mclt(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 4"), "{}", stderr(&out));
}

#[test]
fn schema_violations_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bodies = [
        r#"{"experiment_id": "x", "seed": 1, "samples": 10, "checks": [{"check": "nonexistent"}]}"#,
        r#"{"experiment_id": "x", "seed": 1, "samples": 10, "extra": 3, "checks": []}"#,
        r#"{"experiment_id": "x", "seed": 1, "samples": 10, "checks": [{"check": "hyp_d", "n_ladder": [8, 8]}]}"#,
        r#"{"experiment_id": "x", "seed": 1, "samples": 0, "checks": []}"#,
    ];
    for body in bodies {
        let path = write_config(dir.path(), body);
        let out = mclt(&["run", path.to_str().unwrap(), "--output-dir", dir.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(1), "{body}");
    }
}

#[test]
fn missing_array_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(
        dir.path(),
        r#"{"experiment_id": "x", "seed": 1, "samples": 10, "checks": [{"check": "hyp_d", "n_ladder": [8]}]}"#,
    );
    let out = mclt(&["run", path.to_str().unwrap(), "--output-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("array"), "{}", stderr(&out));
}

#[test]
fn failing_check_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(
        dir.path(),
        r#"{"experiment_id": "wrong", "seed": 1, "samples": 1, "checks": [
            {"check": "lindeberg", "epsilon": 0.5, "n_ladder": [1024, 4096],
             "cases": [{"alpha": 1.0, "beta": 2.0, "expect_holds": true}]}]}"#,
    );
    let out = mclt(&["run", path.to_str().unwrap(), "--output-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(dir.path().join("wrong").join("report.json").exists());
}

#[test]
fn list_checks_names_the_registry() {
    let out = mclt(&["list-checks"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let names: Vec<&str> = text.lines().map(|l| l.split('\t').next().unwrap()).collect();
    for want in ["ecf_linnik", "hyp_c", "lindeberg", "counterexample_m1", "transform_cf", "rescaling"] {
        assert!(names.contains(&want), "{want}");
    }
}

#[test]
fn describe_lists_parameters() {
    let out = mclt(&["describe", "lindeberg"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for want in ["alpha", "beta", "epsilon", "n_ladder"] {
        assert!(text.contains(want), "{want} missing from {text}");
    }
}

#[test]
fn describe_unknown_exits_one() {
    let out = mclt(&["describe", "no_such_check"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn seed_override_reaches_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(
        dir.path(),
        r#"{"experiment_id": "seeded", "seed": 1, "samples": 50,
            "array": {"kind": {"type": "linnik", "n": 8}, "horizon": 1.0},
            "checks": [{"check": "jump_decomposition", "n_ladder": [8]}]}"#,
    );
    let out = Command::new(env!("CARGO_BIN_EXE_mclt"))
        .args(["run", path.to_str().unwrap(), "--output-dir", dir.path().to_str().unwrap()])
        .env("MCLT_SEED", "77")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("seeded").join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 77);
}

#[test]
fn samples_scale_shrinks_counts() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(
        dir.path(),
        r#"{"experiment_id": "scaled", "seed": 1, "samples": 1000,
            "array": {"kind": {"type": "linnik", "n": 8}, "horizon": 1.0},
            "checks": [{"check": "jump_decomposition", "n_ladder": [8]}]}"#,
    );
    let out = mclt(&[
        "run",
        path.to_str().unwrap(),
        "--output-dir",
        dir.path().to_str().unwrap(),
        "--samples-scale",
        "0.1",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("scaled").join("report.json")).unwrap()).unwrap();
    assert_eq!(report["entries"][0]["samples"], 100);
}
