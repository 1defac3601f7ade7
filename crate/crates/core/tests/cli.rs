use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_sparse-ecg");

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .output()
        .expect("binary runs")
}

const QUICK: &[&str] = &[
    "--set",
    "synth_per_class=12",
    "--set",
    "epochs=2",
    "--set",
    "svm_c=8",
    "--set",
    "svm_gamma=1",
    "--set",
    "kmeans_iters=10",
];

fn pipeline(out: &Path) -> Output {
    let mut args = vec!["pipeline"];
    args.extend_from_slice(QUICK);
    run(&args, out)
}

fn stdout_json(o: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.lines().count(), 1, "one summary line: {text}");
    serde_json::from_str(text.trim()).expect("summary is JSON")
}

fn leftovers(dir: &Path) -> Vec<String> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with('.'))
        .collect()
}

#[test]
fn pipeline_on_synthetic_beats() {
    let dir = tempfile::tempdir().unwrap();
    let o = pipeline(dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = stdout_json(&o);
    assert_eq!(summary["command"], "pipeline");
    assert_eq!(summary["beats"], 72);

    for f in ["beats.csv", "split.csv", "dictionary.sbd", "codes.sbc", "waveforms.csv", "features.csv", "model.json"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["schema_version"], 1);
    let err = metrics["err_mean"].as_f64().unwrap();
    let cr = metrics["cr_mean"].as_f64().unwrap();
    assert!(err > 0.0 && err < 0.05, "err_mean {err}");
    assert!(cr > 0.0 && cr < 1.0, "cr_mean {cr}");
    assert!(metrics["vq_err_mean"].as_f64().unwrap() > err);

    let confusion = std::fs::read_to_string(dir.path().join("confusion.csv")).unwrap();
    let rows: Vec<&str> = confusion.lines().collect();
    assert_eq!(rows.len(), 7);
    let total: usize = rows[1..]
        .iter()
        .flat_map(|r| r.split(',').skip(1))
        .map(|v| v.parse::<usize>().unwrap())
        .sum();
    assert_eq!(total, summary["test"].as_u64().unwrap() as usize);
    assert!(leftovers(dir.path()).is_empty());
}

#[test]
fn pipeline_is_seed_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(pipeline(a.path()).status.success());
    assert!(pipeline(b.path()).status.success());
    for f in ["dictionary.sbd", "codes.sbc", "split.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs between runs");
    }
}

#[test]
fn unknown_command_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn help_documents_config_keys() {
    let o = Command::new(BIN).arg("--help").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    for key in ["train_per_class", "lambda", "pso_swarm", "out_dir"] {
        assert!(text.contains(key), "--help does not mention {key}");
    }
}

#[test]
fn bad_config_exits_one_before_any_work() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["ingest", "--set", "k=10"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("k = 10"));
    assert!(!dir.path().exists() || std::fs::read_dir(dir.path()).unwrap().next().is_none());

    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "epochs = 2\nepochs = 3\n").unwrap();
    let o = run(&["ingest", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn mismatched_k_is_a_data_error_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let mut ingest = vec!["ingest"];
    ingest.extend_from_slice(QUICK);
    assert!(run(&ingest, dir.path()).status.success());
    assert!(run(&["train-dict", "--set", "epochs=1"], dir.path()).status.success());
    assert!(run(&["encode"], dir.path()).status.success());
    assert!(run(&["train-dict", "--set", "epochs=1", "--set", "k=160"], dir.path()).status.success());

    let o = run(&["metrics"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&o.stderr);
    assert!(msg.contains("160") && msg.contains("150"), "{msg}");
    assert!(o.stdout.is_empty());
    assert!(!dir.path().join("metrics.json").exists());
    assert!(!dir.path().join("metrics.csv").exists());
    assert!(leftovers(dir.path()).is_empty());
}

#[test]
fn missing_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["encode"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("beats.csv"));
}

#[test]
fn records_round_trip_through_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["synth", "--set", "synth_per_class=10"], dir.path());
    assert!(o.status.success());
    let hea = dir.path().join("synth.hea");
    let records = format!("records={}", hea.display());
    let o = run(&["ingest", "--set", "dataset=records", "--set", &records], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = stdout_json(&o);
    assert_eq!(summary["beats"], 60);
    assert_eq!(summary["classes"]["V"], 10);
}
