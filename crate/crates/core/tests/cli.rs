use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use cremer::harness::desk_mission;
use cremer::ingest::write_dataset;
use tempfile::TempDir;

fn cremer(args: &[&str]) -> Output {
    cremer_with_env(args, None)
}

fn cremer_with_env(args: &[&str], seed_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cremer"));
    cmd.args(args)
        .env_remove("CREMER_SEED")
        .env_remove("RUST_LOG");
    if let Some(s) = seed_env {
        cmd.env("CREMER_SEED", s);
    }
    cmd.output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Small mission dataset and a model trained on it, shared by the tests.
struct Fixture {
    dir: TempDir,
    data: PathBuf,
    model: PathBuf,
}

fn fixture() -> &'static Fixture {
    static FIXTURE: OnceLock<Fixture> = OnceLock::new();
    FIXTURE.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("mission.csv");
        write_dataset(&desk_mission(100, 3).unwrap().1, &data).unwrap();
        let model = dir.path().join("model.json");
        let o = cremer(&["train", "--data", s(&data), "--out", s(&model)]);
        assert!(o.status.success(), "{}", stderr(&o));
        Fixture { dir, data, model }
    })
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_succeeds() {
    let o = cremer(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("bench"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(cremer(&["bogus"]).status.code(), Some(1));
    assert_eq!(cremer(&[]).status.code(), Some(1));
}

#[test]
fn conflicting_sources_are_named() {
    let o = cremer(&["synth", "--events", "a.csv", "--demo", "10"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("--events") && err.contains("--demo"), "{err}");
}

#[test]
fn config_violations_exit_before_work() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"split_fraction": 1.5, "boost": {"learning_rte": 0.1}}"#,
    )
    .unwrap();
    let o = cremer(&["--config", s(&cfg), "bench", "--data", "/no/such.csv"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("boost.learning_rate"), "{err}");
}

#[test]
fn missing_inputs_are_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = cremer(&[
        "predict",
        "--model",
        s(&dir.path().join("none.json")),
        "--lat",
        "0",
        "--lon",
        "0",
        "--alt",
        "600",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = cremer(&[
        "bench",
        "--data",
        s(&dir.path().join("none.csv")),
        "--runs",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "timestamp,latitude_deg\n1,2\n").unwrap();
    assert_eq!(
        cremer(&[
            "resample",
            "--in",
            s(&bad),
            "--out",
            s(&dir.path().join("o.csv"))
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn seed_precedence_flag_over_env_over_default() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("neg.csv");
    let args = ["synth", "--demo", "20", "--count", "30", "--out", s(&out)];
    let from_env = cremer_with_env(&args, Some("7"));
    assert!(from_env.status.success(), "{}", stderr(&from_env));
    assert!(stderr(&from_env).contains("seed 7"));
    let mut with_flag = args.to_vec();
    with_flag.extend(["--seed", "9"]);
    let o = cremer_with_env(&with_flag, Some("7"));
    assert!(stderr(&o).contains("seed 9"), "{}", stderr(&o));
    assert_eq!(cremer_with_env(&args, Some("seven")).status.code(), Some(1));
}

#[test]
fn synth_writes_the_requested_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("neg.csv");
    let o = cremer(&[
        "synth",
        "--demo",
        "20",
        "--count",
        "50",
        "--with-events",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 1 + 20 + 50);
}

#[test]
fn predict_prints_label_and_probability() {
    let f = fixture();
    let o = cremer(&[
        "predict",
        "--model",
        s(&f.model),
        "--lat",
        "-30",
        "--lon",
        "-40",
        "--alt",
        "600",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let line = stdout(&o);
    let (label, p) = line.trim().split_once(',').unwrap();
    assert!(label == "0" || label == "1");
    let p: f64 = p.parse().unwrap();
    assert!((0.0..=1.0).contains(&p));
}

#[test]
fn eval_report_is_versioned_and_repeatable() {
    let f = fixture();
    let (a, b) = (
        f.dir.path().join("eval_a.json"),
        f.dir.path().join("eval_b.json"),
    );
    let roc = f.dir.path().join("roc.csv");
    for out in [&a, &b] {
        let o = cremer(&[
            "eval",
            "--model",
            s(&f.model),
            "--data",
            s(&f.data),
            "--out",
            s(out),
            "--emit-roc",
            s(&roc),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    let json: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(json["format_version"], 1);
    assert!(json.get("timing").is_none());
    assert!(std::fs::read_to_string(&roc)
        .unwrap()
        .starts_with("fpr,tpr"));
}

#[test]
fn retraining_gives_identical_model_bytes() {
    let f = fixture();
    let again = f.dir.path().join("model_again.json");
    let o = cremer(&["train", "--data", s(&f.data), "--out", s(&again)]);
    assert!(o.status.success());
    assert_eq!(
        std::fs::read(&f.model).unwrap(),
        std::fs::read(&again).unwrap()
    );
}

#[test]
fn sweep_writes_one_row_per_weight() {
    let f = fixture();
    let out = f.dir.path().join("sweep.csv");
    let o = cremer(&[
        "sweep",
        "--data",
        s(&f.data),
        "--runs",
        "2",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "weight,recall,precision,auroc");
    assert_eq!(lines.len(), 7);
}

#[test]
fn bench_timing_is_opt_in() {
    let f = fixture();
    let out = f.dir.path().join("bench.json");
    let o = cremer(&[
        "bench",
        "--data",
        s(&f.data),
        "--runs",
        "2",
        "--out",
        s(&out),
        "--with-timing",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert!(json["timing"]["mean_train_seconds"].as_f64().unwrap() > 0.0);
    assert_eq!(json["n_runs"], 2);
}
