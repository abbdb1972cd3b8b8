//! End-to-end runs of the `logptr` binary on small fixtures.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use logptr::ingest::Mode;
use logptr::metrics::{DatasetScores, MetricsReport, ParsedCorpus, ParsedMessage};
use logptr_fixtures::{category_dataset, loghub_dataset, Annotation};
use serde_json::Value;

fn logptr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_logptr"))
        .args(args)
        .env_remove("LOGPTR_SEED")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = logptr(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// A small, fast model; flags and defaults fill in the rest.
fn small_config(dir: &Path, epochs: usize) -> PathBuf {
    let path = dir.join("small.json");
    let config = serde_json::json!({
        "embedding_dim": 32,
        "hidden_dim": 32,
        "dropout": 0.0,
        "lr": 0.01,
        "batch_size": 4,
        "epochs": epochs,
        "vocab_size": 300,
    });
    std::fs::write(&path, config.to_string()).unwrap();
    path
}

fn fixture_csv(dir: &Path, system: &str, n: usize, annotation: Annotation) -> PathBuf {
    let ds = loghub_dataset(system, n, 0).unwrap();
    let path = dir.join(ds.file_name());
    ds.write_csv(&path, annotation).unwrap();
    path
}

#[test]
fn prepare_full_size_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let csv = fixture_csv(dir.path(), "Apache", 2000, Annotation::General);
    let out = dir.path().join("prep");
    let run = ok(&[
        "prepare",
        "--input",
        p(&csv),
        "--out",
        p(&out),
        "--seed",
        "42",
    ]);
    assert!(String::from_utf8_lossy(&run.stdout).contains("2000 records, 0 alignment failures"));

    let split = read_json(&out.join("split.json"));
    let len = |k: &str| split[k].as_array().unwrap().len();
    assert_eq!(
        (len("train"), len("validation"), len("test")),
        (400, 400, 1200)
    );
    let failures = read_json(&out.join("alignment_failures.json"));
    assert_eq!(failures["count"], 0);
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["dataset"], "Apache");
    for f in [
        "records.jsonl",
        "split.json",
        "labels.json",
        "unaligned.jsonl",
    ] {
        assert!(manifest["artifacts"][f].is_string(), "{f}");
    }
    let first: Value = serde_json::from_str(
        std::fs::read_to_string(out.join("records.jsonl"))
            .unwrap()
            .lines()
            .next()
            .unwrap(),
    )
    .unwrap();
    for field in ["line_id", "tokens", "template", "target"] {
        assert!(!first[field].is_null(), "{field}");
    }
}

#[test]
fn general_mode_collapses_category_labels() {
    let dir = tempfile::tempdir().unwrap();
    let csv = fixture_csv(dir.path(), "HDFS", 50, Annotation::Categories);
    let out = dir.path().join("prep");
    ok(&[
        "prepare",
        "--input",
        p(&csv),
        "--out",
        p(&out),
        "--mode",
        "general",
    ]);
    let records = std::fs::read_to_string(out.join("records.jsonl")).unwrap();
    assert!(records.contains("\"[VAR]\""));
    assert!(!records.contains("[OID]"));

    let aware = dir.path().join("aware");
    ok(&[
        "prepare",
        "--input",
        p(&csv),
        "--out",
        p(&aware),
        "--mode",
        "variable_aware",
    ]);
    assert!(std::fs::read_to_string(aware.join("records.jsonl"))
        .unwrap()
        .contains("\"[OID]\""));
}

#[test]
fn error_codes_and_prefix() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    std::fs::write(&csv, "LineId,Content\n1,hello\n").unwrap();
    let out = logptr(&[
        "prepare",
        "--input",
        p(&csv),
        "--out",
        p(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(
        err.starts_with("ERROR 2:") && err.contains("EventTemplate"),
        "{err}"
    );

    let bogus = dir.path().join("bogus.lptr");
    std::fs::write(&bogus, b"not a model").unwrap();
    let lines = dir.path().join("in.log");
    std::fs::write(&lines, "a\n").unwrap();
    let out = logptr(&[
        "parse",
        "--model",
        p(&bogus),
        "--input",
        p(&lines),
        "--out",
        p(&dir.path().join("x.jsonl")),
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).starts_with("ERROR 4:"));

    let out = logptr(&["train", "--nope"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("ERROR 1:"));

    let out = logptr(&[
        "prepare",
        "--input",
        p(&csv),
        "--out",
        "o",
        "--batch-size",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(1));

    assert!(logptr(&["--help"]).status.success());
}

#[test]
fn seed_env_sets_the_default_seed() {
    let dir = tempfile::tempdir().unwrap();
    let csv = fixture_csv(dir.path(), "Linux", 100, Annotation::General);
    let split = |name: &str, env: Option<&str>, flag: Option<&str>| {
        let out = dir.path().join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_logptr"));
        cmd.args(["prepare", "--input", p(&csv), "--out", p(&out)]);
        if let Some(f) = flag {
            cmd.args(["--seed", f]);
        }
        cmd.env_remove("LOGPTR_SEED");
        if let Some(e) = env {
            cmd.env("LOGPTR_SEED", e);
        }
        assert!(cmd.status().unwrap().success());
        read_json(&out.join("split.json"))
    };
    let env7 = split("a", Some("7"), None);
    assert_eq!(env7["seed"], 7);
    assert_eq!(env7, split("b", None, Some("7")));
    assert_eq!(split("c", Some("7"), Some("8"))["seed"], 8);
    assert_eq!(split("d", None, None)["seed"], 42);
}

/// Prepares and trains a small Apache model; returns (data dir, model path).
fn trained(
    dir: &Path,
    records: usize,
    epochs: usize,
    seed: &str,
    name: &str,
) -> (PathBuf, PathBuf) {
    let csv = fixture_csv(dir, "Apache", records, Annotation::General);
    let config = small_config(dir, epochs);
    let data = dir.join(format!("{name}-data"));
    ok(&[
        "prepare",
        "--input",
        p(&csv),
        "--out",
        p(&data),
        "--seed",
        seed,
    ]);
    let model = dir.join(name).join("model.lptr");
    ok(&[
        "train",
        "--data",
        p(&data),
        "--config",
        p(&config),
        "--seed",
        seed,
        "--out",
        p(&model),
    ]);
    (data, model)
}

#[test]
fn train_writes_model_log_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (_, one) = trained(dir.path(), 100, 1, "5", "one");
    let log = std::fs::read_to_string(one.with_extension("epochs.csv")).unwrap();
    let rows: Vec<&str> = log.lines().collect();
    assert_eq!(rows[0], "epoch,train_loss,val_pa,selected");
    assert_eq!(rows.len(), 2);
    assert!(rows[1].ends_with(",1"));
    let manifest = read_json(&one.parent().unwrap().join("manifest.json"));
    assert!(manifest["artifacts"]["model.lptr"].is_string());

    let (_, a) = trained(dir.path(), 100, 3, "5", "a");
    let (_, b) = trained(dir.path(), 100, 3, "5", "b");
    let (_, c) = trained(dir.path(), 100, 3, "6", "c");
    let read = |m: &Path| std::fs::read(m).unwrap();
    let log = |m: &Path| std::fs::read_to_string(m.with_extension("epochs.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_eq!(log(&a), log(&b));
    assert_ne!(log(&a), log(&c));
}

#[test]
fn overfit_evaluate_and_parse() {
    let dir = tempfile::tempdir().unwrap();
    let (data, model) = trained(dir.path(), 200, 60, "3", "fit");

    // The training split is fitted exactly.
    let report_path = dir.path().join("train-report.json");
    let predictions = dir.path().join("predictions.jsonl");
    ok(&[
        "evaluate",
        "--model",
        p(&model),
        "--data",
        p(&data),
        "--split",
        "train",
        "--out",
        p(&report_path),
        "--predictions",
        p(&predictions),
    ]);
    let text = std::fs::read_to_string(&report_path).unwrap();
    let report = MetricsReport::from_json(&text).unwrap();
    assert_eq!(MetricsReport::from_json(&report.to_json()).unwrap(), report);
    let scores = &report.datasets["Apache"];
    assert_eq!((scores.ga, scores.pa, scores.messages), (1.0, 1.0, 40));

    // Test-split scores agree with the library metrics on the same predictions.
    let report_path = dir.path().join("test-report.json");
    ok(&[
        "evaluate",
        "--model",
        p(&model),
        "--data",
        p(&data),
        "--out",
        p(&report_path),
        "--predictions",
        p(&predictions),
    ]);
    let report = MetricsReport::from_json(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    let messages: Vec<ParsedMessage> = std::fs::read_to_string(&predictions)
        .unwrap()
        .lines()
        .map(|l| {
            let v: Value = serde_json::from_str(l).unwrap();
            let tokens = |k: &str| -> Vec<String> { serde_json::from_value(v[k].clone()).unwrap() };
            ParsedMessage {
                line_id: v["line_id"].as_u64().unwrap(),
                predicted: tokens("predicted"),
                gold: tokens("gold"),
            }
        })
        .collect();
    assert_eq!(messages.len(), 120);
    let oracle =
        DatasetScores::compute(&ParsedCorpus::new(messages).unwrap(), Mode::General).unwrap();
    assert_eq!(report.datasets["Apache"], oracle);

    // Parsing never stops at a bad line.
    let lines = dir.path().join("raw.log");
    std::fs::write(
        &lines,
        "jk2_init() Found child 4242 in scoreboard slot 7\n   \nworkerEnv.init() ok /etc/httpd/conf/workers2.properties\n",
    )
    .unwrap();
    let parsed_path = dir.path().join("parsed.jsonl");
    ok(&[
        "parse",
        "--model",
        p(&model),
        "--input",
        p(&lines),
        "--out",
        p(&parsed_path),
    ]);
    let parsed: Vec<Value> = std::fs::read_to_string(&parsed_path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(parsed.len(), 3);
    assert_eq!(
        parsed[0]["template"],
        "jk2_init() Found child [VAR] in scoreboard slot [VAR]"
    );
    assert_eq!(parsed[0]["variables"][0]["span_tokens"][0], "4242");
    assert_eq!(parsed[0]["variables"][1]["label"], "[VAR]");
    assert!(parsed[1]["warning"].is_string());
    assert_eq!(parsed[2]["line_id"], 3);
    assert!(parsed[2]["warning"].is_null());
}

#[test]
fn benchmark_two_datasets_resumes_and_forces() {
    let dir = tempfile::tempdir().unwrap();
    let datasets = dir.path().join("datasets");
    std::fs::create_dir(&datasets).unwrap();
    fixture_csv(&datasets, "Apache", 40, Annotation::General);
    fixture_csv(&datasets, "Linux", 40, Annotation::General);
    let config = small_config(dir.path(), 2);
    let out = dir.path().join("bench");
    let args = [
        "benchmark",
        "--datasets",
        p(&datasets),
        "--config",
        p(&config),
        "--out",
        p(&out),
    ];
    ok(&args);
    let table = MetricsReport::from_json(&std::fs::read_to_string(out.join("table.json")).unwrap())
        .unwrap();
    assert_eq!(table.datasets.len(), 2);
    let agg = table.aggregate.clone().unwrap();
    let mean = |f: fn(&DatasetScores) -> f64| table.datasets.values().map(f).sum::<f64>() / 2.0;
    assert_eq!(agg.mean_pa, mean(|s| s.pa));
    assert_eq!(agg.mean_ga, mean(|s| s.ga));
    assert!(agg.std_pa.is_some());
    for name in ["Apache", "Linux"] {
        assert!(out.join(name).join("model.lptr").exists());
        assert!(out.join(name).join("data/records.jsonl").exists());
    }
    assert!(read_json(&out.join("manifest.json"))["artifacts"]["table.json"].is_string());

    let model = out.join("Apache/model.lptr");
    let before = std::fs::metadata(&model).unwrap().modified().unwrap();
    let again = ok(&args);
    assert!(stderr(&again).contains("Apache: report exists, skipping"));
    assert_eq!(
        std::fs::metadata(&model).unwrap().modified().unwrap(),
        before
    );

    let mut forced = args.to_vec();
    forced.push("--force");
    let rerun = ok(&forced);
    assert!(!stderr(&rerun).contains("skipping"));
    let table2 = std::fs::read_to_string(out.join("table.json")).unwrap();
    assert_eq!(MetricsReport::from_json(&table2).unwrap(), table);
}

#[test]
fn variable_aware_evaluation_reports_category_confusion() {
    let dir = tempfile::tempdir().unwrap();
    let ds = category_dataset(10, 60, 1);
    let csv = dir.path().join("Cats.csv");
    ds.write_csv(&csv, Annotation::Categories).unwrap();
    let data = dir.path().join("data");
    ok(&[
        "prepare",
        "--input",
        p(&csv),
        "--out",
        p(&data),
        "--mode",
        "variable_aware",
    ]);
    let config = small_config(dir.path(), 2);
    let model = dir.path().join("m.lptr");
    ok(&[
        "train",
        "--data",
        p(&data),
        "--config",
        p(&config),
        "--out",
        p(&model),
    ]);
    let report = dir.path().join("r.json");
    ok(&[
        "evaluate",
        "--model",
        p(&model),
        "--data",
        p(&data),
        "--out",
        p(&report),
    ]);
    let v = read_json(&report);
    let cats = &v["datasets"]["Cats"];
    assert!(cats["pa_general"].is_number());
    assert!(cats["category_confusion"]["pairs"].is_object());
}
