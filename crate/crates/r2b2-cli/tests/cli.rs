//! CLI behavior tests against the built binary.

use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_r2b2"))
}

fn write_config(dir: &Path) -> std::path::PathBuf {
    let out_dir = dir.join("out");
    let text = format!(
        r#"
schema_version = 1
master_seed = 11
horizon = 8
delta = 0.1
num_function_samples = 2
num_inits = 1
output_dir = "{}"

[game]
type = "common-payoff"

[game.kernel]
family = "squared-exponential"
length_scale = 0.1
signal_variance = 1.0

[[agents]]
grid_points_per_axis = 5
level = 1
level0 = {{ kind = "gp-mw" }}

[[agents]]
grid_points_per_axis = 5
level = 0
level0 = {{ kind = "random-search" }}
"#,
        out_dir.display()
    );
    let path = dir.join("experiment.toml");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn run_aggregate_verify_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());

    let out = bin()
        .args(["run"])
        .arg(&cfg)
        .args(["--workers", "2", "--format", "json"])
        .output()
        .unwrap();
    assert!(out.status.success(), "run failed: {}", String::from_utf8_lossy(&out.stderr));
    let results_csv = dir.path().join("out/results.csv");
    let results_json = dir.path().join("out/results.json");
    assert!(results_csv.exists());
    assert!(results_json.exists());

    // Aggregate from traces reproduces the CSV rows.
    let out = bin()
        .args(["aggregate"])
        .arg(dir.path().join("out/traces"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout, fs::read_to_string(&results_csv).unwrap());

    // Verify replays a persisted trace.
    let trace = dir.path().join("out/traces/draw001_init000.trace");
    let out = bin().args(["verify"]).arg(&trace).arg(&cfg).output().unwrap();
    assert!(out.status.success(), "verify failed: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn validation_failure_exits_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let text = fs::read_to_string(&cfg).unwrap().replace("delta = 0.1", "delta = 2.0");
    fs::write(&cfg, text).unwrap();
    let out = bin().args(["run"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("delta"), "stderr should name the field: {err}");
}

#[test]
fn missing_config_exits_with_code_three() {
    let out = bin().args(["run", "nonexistent.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn master_seed_override_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    assert!(bin().args(["run"]).arg(&cfg).output().unwrap().status.success());
    let first = fs::read_to_string(dir.path().join("out/results.csv")).unwrap();
    assert!(bin()
        .args(["run"])
        .arg(&cfg)
        .args(["--master-seed", "999"])
        .output()
        .unwrap()
        .status
        .success());
    let second = fs::read_to_string(dir.path().join("out/results.csv")).unwrap();
    assert_ne!(first, second);
}
