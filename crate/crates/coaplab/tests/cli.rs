//! End-to-end tests of the `coaplab` binary: exit codes, artifact
//! layout, and determinism across reruns.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn coaplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coaplab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(output: &Output) -> serde_json::Value {
    assert!(
        output.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    serde_json::from_slice(&output.stdout).expect("stdout is JSON")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn generate_is_deterministic_across_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"duration": 120}"#);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let summary = stdout_json(&coaplab(&[
        "generate",
        "--config",
        &config,
        "--out",
        out_a.to_str().unwrap(),
    ]));
    assert_eq!(summary["attack_events"], 2);
    stdout_json(&coaplab(&["generate", "--config", &config, "--out", out_b.to_str().unwrap()]));
    assert_eq!(
        fs::read(out_a.join("capture.pcap")).unwrap(),
        fs::read(out_b.join("capture.pcap")).unwrap()
    );
    assert_eq!(
        fs::read(out_a.join("attacks.json")).unwrap(),
        fs::read(out_b.join("attacks.json")).unwrap()
    );
}

#[test]
fn zero_duration_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = coaplab(&[
        "generate",
        "--duration",
        "0",
        "--out",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("duration"));
}

#[test]
fn label_reports_windows_and_honors_threshold_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"duration": 700}"#);
    let run = dir.path().join("run");
    stdout_json(&coaplab(&["generate", "--config", &config, "--out", run.to_str().unwrap()]));

    let pcap = run.join("capture.pcap");
    let log = run.join("attacks.json");
    let labels = run.join("labels.ndjson");
    let summary = stdout_json(&coaplab(&[
        "label",
        "--pcap",
        pcap.to_str().unwrap(),
        "--attack-log",
        log.to_str().unwrap(),
        "--out",
        labels.to_str().unwrap(),
    ]));
    // Bursts at t = 0 and t = 600 land in two distinct windows.
    assert_eq!(summary["malicious"], 2);
    assert_eq!(summary["disagreements"], 0);
    let ndjson = fs::read_to_string(&labels).unwrap();
    assert_eq!(ndjson.lines().count(), summary["windows"].as_u64().unwrap() as usize);

    // An absurd threshold zeroes the malicious set; the crosscheck
    // would fail, so it must be disabled.
    let strict = coaplab(&[
        "label",
        "--pcap",
        pcap.to_str().unwrap(),
        "--attack-log",
        log.to_str().unwrap(),
        "--out",
        labels.to_str().unwrap(),
        "--threshold",
        "1000000000",
    ]);
    assert!(!strict.status.success(), "crosscheck must fail the run");
    let relaxed = stdout_json(&coaplab(&[
        "label",
        "--pcap",
        pcap.to_str().unwrap(),
        "--attack-log",
        log.to_str().unwrap(),
        "--out",
        labels.to_str().unwrap(),
        "--threshold",
        "1000000000",
        "--no-crosscheck",
    ]));
    assert_eq!(relaxed["malicious"], 0);
}

#[test]
fn pipeline_writes_reports_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"duration": 1300, "models": ["nb", "tree"]}"#);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let report = stdout_json(&coaplab(&[
        "pipeline",
        "--config",
        &config,
        "--out",
        out_a.to_str().unwrap(),
    ]));
    assert_eq!(report["models"].as_array().unwrap().len(), 2);
    assert_eq!(report["dataset"]["malicious_windows"], 3);
    for file in [
        "capture.pcap",
        "attacks.json",
        "labels.ndjson",
        "train.tensor",
        "train.tensor.json",
        "test.tensor",
        "test.tensor.json",
        "report.json",
        "manifest.json",
        "models/nb.json",
        "models/tree.json",
        "models/nb_confusion.csv",
    ] {
        assert!(out_a.join(file).exists(), "missing artifact {file}");
    }

    stdout_json(&coaplab(&["pipeline", "--config", &config, "--out", out_b.to_str().unwrap()]));
    assert_eq!(
        fs::read(out_a.join("report.json")).unwrap(),
        fs::read(out_b.join("report.json")).unwrap(),
        "identical config must reproduce an identical report"
    );

    // Manifest checksums also match across reruns.
    let checksums = |p: &Path| -> Vec<(String, String)> {
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(p.join("manifest.json")).unwrap()).unwrap();
        manifest["artifacts"]
            .as_array()
            .unwrap()
            .iter()
            .map(|a| {
                (a["path"].as_str().unwrap().to_string(), a["sha256"].as_str().unwrap().to_string())
            })
            .collect()
    };
    assert_eq!(checksums(&out_a), checksums(&out_b));

    // The report command renders without error.
    let rendered = coaplab(&["report", "--run-dir", out_a.to_str().unwrap()]);
    assert!(rendered.status.success());
    let text = String::from_utf8_lossy(&rendered.stdout);
    assert!(text.contains("nb"));
    assert!(text.contains("artifacts"));
}

#[test]
fn model_filter_flag_limits_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"duration": 1300}"#);
    let out = dir.path().join("run");
    let report = stdout_json(&coaplab(&[
        "pipeline",
        "--config",
        &config,
        "--models",
        "nb",
        "--out",
        out.to_str().unwrap(),
    ]));
    let models = report["models"].as_array().unwrap();
    assert_eq!(models.len(), 1);
    assert_eq!(models[0]["model"], "nb");
}

#[test]
fn features_select_train_eval_compose() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{
            "duration": 1300,
            "models": ["tree"],
            "ga": {"population_size": 8, "generations": 3, "k": 4}
        }"#,
    );
    let run = dir.path().join("run");
    stdout_json(&coaplab(&["generate", "--config", &config, "--out", run.to_str().unwrap()]));
    let pcap = run.join("capture.pcap");
    let log = run.join("attacks.json");

    let features = stdout_json(&coaplab(&[
        "features",
        "--pcap",
        pcap.to_str().unwrap(),
        "--attack-log",
        log.to_str().unwrap(),
        "--out",
        run.to_str().unwrap(),
        "--config",
        &config,
    ]));
    assert_eq!(features["feature_columns"], 16);
    assert!(run.join("train.tensor").exists());

    let selected = stdout_json(&coaplab(&[
        "select",
        "--pcap",
        pcap.to_str().unwrap(),
        "--attack-log",
        log.to_str().unwrap(),
        "--out",
        run.to_str().unwrap(),
        "--config",
        &config,
    ]));
    assert_eq!(selected["selected_columns"].as_array().unwrap().len(), 4);
    assert!(run.join("ga_report.json").exists());
    assert!(run.join("packets.csv").exists());

    // Selection accepts its own CSV back.
    let from_csv = stdout_json(&coaplab(&[
        "select",
        "--csv",
        run.join("packets.csv").to_str().unwrap(),
        "--out",
        dir.path().join("csvrun").to_str().unwrap(),
        "--config",
        &config,
    ]));
    assert_eq!(from_csv["selected_columns"].as_array().unwrap().len(), 4);

    let models_dir = run.join("models");
    let trained = coaplab(&[
        "train",
        "--train-tensor",
        run.join("train.tensor").to_str().unwrap(),
        "--out",
        models_dir.to_str().unwrap(),
        "--config",
        &config,
    ]);
    assert!(trained.status.success());
    assert!(models_dir.join("tree.json").exists());

    let eval = stdout_json(&coaplab(&[
        "eval",
        "--model",
        models_dir.join("tree.json").to_str().unwrap(),
        "--test-tensor",
        run.join("test.tensor").to_str().unwrap(),
        "--out",
        run.to_str().unwrap(),
    ]));
    assert!(eval["accuracy"].as_f64().unwrap() > 0.9);
    assert!(run.join("tree_confusion.csv").exists());
}
