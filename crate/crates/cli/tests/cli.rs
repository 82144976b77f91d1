use std::path::Path;
use std::process::{Command, Output};

fn lgt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lgt"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, body: serde_json::Value) -> String {
    let path = dir.join("experiment.json");
    std::fs::write(&path, body.to_string()).unwrap();
    path.display().to_string()
}

fn small_blobs() -> serde_json::Value {
    serde_json::json!({
        "dataset": {
            "name": "blobs",
            "source": {"type": "builtin", "kind": "blobs_classification", "seed": 3},
            "task": {"classification": {"classes": 3}}
        },
        "seeds": [42, 43],
        "budget": {"max_configurations": 4, "epochs_per_evaluation": 3, "iterations": 2},
        "grid_resolution": {"learning_rate": 2, "dropout": 2}
    })
}

#[test]
fn validate_config_accepts_good_and_rejects_bad() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_config(dir.path(), small_blobs());
    let o = lgt(&["validate-config", "--config", &good]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("4 methods x 2 seeds"));

    let mut bad = small_blobs();
    bad["seeds"] = serde_json::json!([1, 1]);
    let bad = write_config(dir.path(), bad);
    let o = lgt(&["validate-config", "--config", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("distinct"));

    let o = lgt(&["validate-config", "--config", "/nonexistent/config.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fuzz_parsers_reports_a_clean_run() {
    let o = lgt(&["fuzz-parsers", "--iterations", "300", "--seed", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("300 responses, 0 violations"));
}

#[test]
fn run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), small_blobs());
    let runs = dir.path().join("runs");
    let o = lgt(&["run", "--config", &config, "--out", runs.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for method in ["no_tuning", "random", "grid", "lgt"] {
        for seed in [42, 43] {
            assert!(runs.join(method).join(format!("seed-{seed}")).join("record.json").exists());
        }
    }
    assert!(runs.join("lgt/seed-42/transcript.jsonl").exists());
    assert!(runs.join("experiment.json").exists());

    let report = dir.path().join("report");
    let o = lgt(&["report", "--in", runs.to_str().unwrap(), "--out", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = std::fs::read_to_string(report.join("summary.csv")).unwrap();
    assert!(summary.starts_with("method,metric,mean,std,n,single_sample\n"));
    assert_eq!(summary.lines().filter(|l| l.contains(",test_loss,")).count(), 4);
    assert_eq!(std::fs::read_dir(report.join("loss_curves")).unwrap().count(), 8);
}

#[test]
fn method_and_seed_flags_narrow_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), small_blobs());
    let runs = dir.path().join("runs");
    let o = lgt(&["run", "--config", &config, "--method", "no_tuning,lgt", "--seed", "7", "--out", runs.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(runs.join("lgt/seed-7/record.json").exists());
    assert!(runs.join("no_tuning/seed-7/record.json").exists());
    assert!(!runs.join("random").exists());
}

#[test]
fn http_backend_without_key_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut body = small_blobs();
    body["backend"] = serde_json::json!({"api_key_env_name": "LGT_CLI_TEST_UNSET_KEY"});
    let config = write_config(dir.path(), body);
    let o = lgt(&[
        "run", "--config", &config, "--method", "lgt", "--backend", "http", "--endpoint", "http://127.0.0.1:9",
        "--out", dir.path().join("runs").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("LGT_CLI_TEST_UNSET_KEY"));
}

#[test]
fn report_on_an_empty_directory_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = lgt(&["report", "--in", dir.path().to_str().unwrap(), "--out", dir.path().join("r").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
