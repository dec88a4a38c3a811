//! End-to-end runs of the `cuspwave` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn cuspwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cuspwave"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn with_dir(args: &[&str], dir: &Path) -> Output {
    let mut all = args.to_vec();
    all.extend(["--output-dir", dir.to_str().unwrap()]);
    cuspwave(&all)
}

fn error_json(output: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&output.stderr);
    let line = stderr.lines().last().expect("error record on stderr");
    serde_json::from_str(line).expect("error record is JSON")
}

fn read_toml(path: &Path) -> toml::Table {
    fs::read_to_string(path).unwrap().parse().unwrap()
}

#[test]
fn kernel_run_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let config = tmp.path().join("kernel.toml");
    fs::write(
        &config,
        "command = \"kernel\"\nalpha = 0.4\nnodes = 65\nchecks = 4\nfourier_terms = 20000\nseed = 7\n",
    )
    .unwrap();
    let runs: Vec<_> = ["a", "b"]
        .iter()
        .map(|name| {
            let dir = tmp.path().join(name);
            let out = with_dir(&["--config", config.to_str().unwrap()], &dir);
            assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
            dir
        })
        .collect();
    for file in ["kernel.csv", "kernel_check.csv"] {
        let a = fs::read(runs[0].join(file)).unwrap();
        let b = fs::read(runs[1].join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
    let table = fs::read_to_string(runs[0].join("kernel.csv")).unwrap();
    assert_eq!(table.lines().next(), Some("x,K_alpha,singular,regular"));
    assert_eq!(table.lines().count(), 1 + 64);
}

#[test]
fn flags_override_the_config_file() {
    let tmp = TempDir::new().unwrap();
    let config = tmp.path().join("run.toml");
    fs::write(
        &config,
        "command = \"kernel\"\nalpha = 0.4\nnodes = 65\nchecks = 2\nfourier_terms = 2000\n",
    )
    .unwrap();
    let dir = tmp.path().join("out");
    let out = with_dir(&["--config", config.to_str().unwrap(), "--alpha", "0.7"], &dir);
    assert!(out.status.success());
    let summary = read_toml(&dir.join("kernel_summary.toml"));
    assert_eq!(summary["alpha"].as_float(), Some(0.7));
}

#[test]
fn invalid_parameter_exits_with_config_code() {
    let tmp = TempDir::new().unwrap();
    let out = with_dir(&["branch", "--p", "0.5"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let record = error_json(&out);
    assert_eq!(record["status"], "error");
    assert_eq!(record["kind"], "config");
    assert_eq!(record["field"], "p");
    assert_eq!(record["exit_code"], 2);
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let config = tmp.path().join("bad.toml");
    fs::write(&config, "command = \"branch\"\nalpah = 0.5\n").unwrap();
    let out = cuspwave(&["--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["exit_code"], 2);
}

#[test]
fn missing_command_is_a_config_error() {
    let out = cuspwave(&[]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["field"], "command");
}

#[test]
fn missing_config_file_exits_with_io_code() {
    let tmp = TempDir::new().unwrap();
    let out = cuspwave(&["branch", "--config", tmp.path().join("absent.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_json(&out)["kind"], "io");
}

#[test]
fn unreachable_tolerance_exits_with_numerical_code() {
    let tmp = TempDir::new().unwrap();
    let out = with_dir(&["branch", "--m", "16", "--newton-tol", "1e-30"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_json(&out)["kind"], "convergence");
}

#[test]
fn emitted_wave_passes_its_audit_again() {
    let tmp = TempDir::new().unwrap();
    let branch_dir = tmp.path().join("branch");
    let out = with_dir(&["branch", "--m", "32"], &branch_dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = read_toml(&branch_dir.join("branch_summary.toml"));
    assert_eq!(summary["terminated_reason"].as_str(), Some("crest_reached"));
    let emitted = summary["final_regularity"].as_table().unwrap();

    let wave = branch_dir.join("wave.csv");
    let audit_dir = tmp.path().join("audit");
    let out = with_dir(&["audit", "--m", "32", "--wave", wave.to_str().unwrap()], &audit_dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let audit = read_toml(&audit_dir.join("audit.toml"));
    let reaudit = audit["reports"].as_array().unwrap()[0].as_table().unwrap();
    for flag in ["monotone_ok", "range_ok", "speed_bound_ok"] {
        assert_eq!(emitted[flag].as_bool(), Some(true), "{flag} at emission");
        assert_eq!(reaudit[flag].as_bool(), Some(true), "{flag} after re-ingestion");
    }
    for field in ["max_gap", "crest_local_exponent", "monotone_slack"] {
        let a = emitted[field].as_float().unwrap();
        let b = reaudit[field].as_float().unwrap();
        assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{field}: {a} vs {b}");
    }

    let again = tmp.path().join("branch2");
    assert!(with_dir(&["branch", "--m", "32"], &again).status.success());
    assert_eq!(fs::read(&wave).unwrap(), fs::read(again.join("wave.csv")).unwrap());
}
