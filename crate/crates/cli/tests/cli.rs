//! The `sobosvd` binary: exit codes, outputs, determinism and schemas.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sobosvd_cli::samples::save_samples;
use sobosvd_core::cases::get_case;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sobosvd"));
    c.env_remove("SOBOSVD_THREADS");
    c
}

fn repo_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn run_config(dir: &Path, config: &str) -> Output {
    let path = dir.join("config.json");
    fs::write(&path, config).unwrap();
    bin().arg("run").arg("--config").arg(&path).output().unwrap()
}

fn report(dir: &Path) -> Value {
    serde_json::from_slice(&fs::read(dir.join("report.json")).unwrap()).unwrap()
}

fn checks<'a>(r: &'a Value, name: &str) -> Vec<&'a Value> {
    r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["name"] == name)
        .collect()
}

fn validator(schema: &str) -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema").join(schema);
    let schema: Value = serde_json::from_slice(&fs::read(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

const SEP1_ALL: &str = r#"{
    "function": {"case": {"name": "SEP1"}},
    "grid": {"n": [129, 129]},
    "ranks": {"sweep": {"from": 0, "to": 3}},
    "checks": ["eckart_young", "h1_identity", "ek_identity", "hosvd_bound",
               "quasi_opt", "sandwich", "derivative_bound", "diagnostics"],
    "output": "out"
}"#;

#[test]
fn sep1_with_every_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(dir.path(), SEP1_ALL);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let r = report(&dir.path().join("out"));
    assert_eq!(r["passed"], true);
    let ids = checks(&r, "h1_identity");
    assert_eq!(ids.len(), 8);
    for c in ids {
        assert!(c["residual"].as_f64().unwrap() <= 1e-10, "{c}");
    }
    validator("report.schema.json").validate(&r).unwrap();
    let csv = fs::read_to_string(dir.path().join("out/sigma.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("mode,k,sigma,dpsi_norm,bound_value"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&first[..2], &["1", "1"]);
    assert!((first[2].parse::<f64>().unwrap() - 0.5).abs() < 1e-4);
}

#[test]
fn rank_above_grid_size_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SEP1_ALL.replace(r#"{"sweep": {"from": 0, "to": 3}}"#, r#"{"explicit": [[130, 1]]}"#);
    let out = run_config(dir.path(), &cfg);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("rank 130 exceeds n = 129"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn malformed_configs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for bad in [
        "{",
        &SEP1_ALL.replace("\"checks\"", "\"chekcs\""),
        &SEP1_ALL.replace(r#"[129, 129]"#, r#"[2, 129]"#),
        &SEP1_ALL.replace(r#"{"name": "SEP1"}"#, r#"{"name": "NOPE"}"#),
        &SEP1_ALL.replace(r#"{"name": "SEP1"}"#, r#"{"name": "SEP3D"}"#),
    ] {
        let out = run_config(dir.path(), bad);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{bad}\n{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let out = bin()
        .args(["run", "--config"])
        .arg(dir.path().join("absent.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failing_check_exits_1_and_still_writes_reports() {
    // the per-mode upper bracket does not cover anisotropic ranks
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
        "function": {"case": {"name": "SUM3D"}},
        "grid": {"n": [17, 17, 17]},
        "ranks": {"explicit": [[1, 1, 1], [1, 2, 4]]},
        "checks": ["sandwich", "hosvd_bound"],
        "output": "out"
    }"#;
    let out = run_config(dir.path(), cfg);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&dir.path().join("out"));
    assert_eq!(r["passed"], false);
    let failed: Vec<_> = r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .collect();
    assert_eq!(failed.len(), 1);
    assert_eq!(failed[0]["quantity"], "h1_upper");
    assert_eq!(failed[0]["ranks"], serde_json::json!([1, 2, 4]));
}

#[test]
fn sample_files_drive_the_same_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let u = get_case("SINSUM", &[]).unwrap().sample(&[65, 65]).unwrap();
    save_samples(&dir.path().join("u.f64"), &u).unwrap();
    let from_file = r#"{
        "function": {"file": "u.f64"},
        "ranks": {"sweep": {"from": 1, "to": 4}},
        "checks": ["h1_identity", "ek_identity", "sandwich"],
        "output": "file_out"
    }"#;
    assert_eq!(run_config(dir.path(), from_file).status.code(), Some(0));
    let from_case = r#"{
        "function": {"case": {"name": "SINSUM"}},
        "grid": {"n": [65, 65]},
        "ranks": {"sweep": {"from": 1, "to": 4}},
        "checks": ["h1_identity", "ek_identity", "sandwich"],
        "output": "case_out"
    }"#;
    assert_eq!(run_config(dir.path(), from_case).status.code(), Some(0));
    let a = fs::read(dir.path().join("file_out/sigma.csv")).unwrap();
    let b = fs::read(dir.path().join("case_out/sigma.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn sample_problems_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
        "function": {"file": "u.f64"},
        "ranks": {"explicit": [[1, 1]]},
        "checks": ["sandwich"],
        "output": "out"
    }"#;
    let out = run_config(dir.path(), cfg);
    assert_eq!(out.status.code(), Some(3));

    let u = get_case("SEP1", &[]).unwrap().sample(&[9, 9]).unwrap();
    let data = dir.path().join("u.f64");
    save_samples(&data, &u).unwrap();
    fs::write(&data, vec![0u8; 80]).unwrap();
    let out = run_config(dir.path(), cfg);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("expected 648 bytes, found 80"), "{err}");
}

#[test]
fn grid_must_agree_with_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let u = get_case("SEP1", &[]).unwrap().sample(&[9, 9]).unwrap();
    save_samples(&dir.path().join("u.f64"), &u).unwrap();
    let cfg = r#"{
        "function": {"file": "u.f64"},
        "grid": {"n": [9, 11]},
        "ranks": {"explicit": [[1, 1]]},
        "checks": ["sandwich"],
        "output": "out"
    }"#;
    assert_eq!(run_config(dir.path(), cfg).status.code(), Some(3));
}

#[test]
fn identical_configs_give_identical_sigma_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("c.json");
    fs::write(
        &cfg_path,
        r#"{
            "function": {"case": {"name": "EXPXY"}},
            "grid": {"n": [65, 33]},
            "ranks": {"explicit": [[2, 2], [3, 3]]},
            "checks": ["derivative_bound", "ek_identity"],
            "output": "unused"
        }"#,
    )
    .unwrap();
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "3", "1"].iter().enumerate() {
        let out_dir = dir.path().join(format!("run{i}"));
        let status = bin()
            .args(["run", "--config"])
            .arg(&cfg_path)
            .arg("--out")
            .arg(&out_dir)
            .env("SOBOSVD_THREADS", threads)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
        outputs.push(fs::read(out_dir.join("sigma.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn brownian_sweep_reports_h1_rate() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["run", "--config"])
        .arg(repo_file("configs/brownian_sweep.json"))
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let r = report(dir.path());
    let slope = r["diagnostics"]["h1_rate"]["slope"].as_f64().unwrap();
    assert!((slope + 0.5).abs() <= 0.1, "{slope}");
    assert_eq!(r["diagnostics"]["convergence_flag"], "converged");
    validator("report.schema.json").validate(&r).unwrap();
}

#[test]
fn shipped_configs_match_the_schema() {
    let v = validator("config.schema.json");
    for entry in fs::read_dir(repo_file("configs")).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        let json: Value = serde_json::from_str(&text).unwrap();
        assert!(v.is_valid(&json), "{}", path.display());
        sobosvd_cli::config::ExperimentConfig::from_json(&text).unwrap();
    }
    let bad: Value = serde_json::from_str(
        r#"{"function": {"file": "x"}, "ranks": {"explicit": [[1]]}, "checks": [], "output": "o"}"#,
    )
    .unwrap();
    assert!(!v.is_valid(&bad));
}

#[test]
fn list_and_verify_subcommands() {
    let out = bin().arg("list-cases").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["SEP1", "SINSUM", "BROWNIAN", "SEP3D", "SUM3D", "EXPXY"] {
        assert!(text.contains(name), "{name}");
    }
    let out = bin().args(["verify", "--case", "sum3d", "--n", "17"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let out = bin().args(["verify", "--case", "NOPE", "--n", "17"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin()
        .args(["verify", "--case", "SEP1", "--n", "17,17,17"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_thread_setting_is_rejected() {
    let out = bin().arg("list-cases").env("SOBOSVD_THREADS", "many").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
