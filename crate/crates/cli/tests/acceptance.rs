//! Acceptance suite. Each test prints one `PASS`/`FAIL` line to stderr
//! (uncaptured, so it shows up in a plain `cargo test` log) and then fails
//! if its criterion failed.
//!
//! Data comes from `LOGHUB_DIR` (LogHub 2k structured CSVs, searched one
//! level deep) when set, and from the synthetic LogHub-style fixtures
//! otherwise. Artifacts are kept under `target/tmp/acceptance/`.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::{Duration, Instant};

use logptr::ingest::{
    align_template, annotate_all, apply_target, load_structured_csv, AnnotatedRecord, DatasetSplit,
    LabelSet, Mode,
};
use logptr::metrics::{
    group_accuracy, parsing_accuracy, robustness_report, MetricsReport, ParsedCorpus, ParsedMessage,
};
use logptr::model::{ModelConfig, ModelInput, PointerModel};
use logptr::numcore::{grad_check, GradCheckOptions, NumError};
use logptr::tokenizer::train_vocab;
use logptr::trainer::{train, TrainConfig};
use logptr_fixtures::{category_dataset, loghub_dataset, Annotation, SYSTEMS};
use rand::seq::IndexedRandom;
use rand::{RngExt, SeedableRng};
use rand_xoshiro::SplitMix64;

// Pinned tolerances and budgets.
const GRAD_TOLERANCE: f64 = 1e-3;
const GRAD_BUDGET: Duration = Duration::from_secs(10);
const OVERFIT_RECORDS: usize = 50;
const OVERFIT_BUDGET: Duration = Duration::from_secs(5 * 60);
const METRIC_CORPORA: usize = 1000;
const METRIC_MAX_MESSAGES: usize = 20;
const EASY_DATASETS: [&str; 2] = ["Apache", "Proxifier"];
const EASY_SEEDS: [u64; 3] = [42, 7, 1234];
const EASY_MIN: f64 = 0.95;
const EASY_BUDGET: Duration = Duration::from_secs(30 * 60);
const SUBSET: [&str; 6] = [
    "Apache",
    "Proxifier",
    "HDFS",
    "Zookeeper",
    "OpenSSH",
    "Spark",
];
const SUBSET_MIN_MEAN: f64 = 0.90;
const AWARE_TEMPLATES: usize = 500;
const AWARE_MESSAGES: usize = 10_000;
const AWARE_MIN_PA: f64 = 0.95;
/// Smaller than the default so unseen values split into short, shared
/// pieces; the category of a value is read off its shape.
const AWARE_VOCAB: usize = 500;
/// Published per-dataset PA of the variable-aware comparison, in table order.
const PUBLISHED_AWARE_PA: [f64; 16] = [
    0.943, 1.0, 0.959, 0.968, 0.998, 0.971, 0.992, 0.961, 0.866, 0.994, 0.998, 1.0, 0.997, 0.925,
    0.983, 0.989,
];
const PUBLISHED_STD: f64 = 0.036;
const STD_TOLERANCE: f64 = 5e-4;
const DEFAULT_SEED: u64 = 42;

fn verdict(criterion: u32, name: &str, pass: bool, detail: &str) {
    let line = format!(
        "acceptance {criterion} {} {name}: {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    // Written to the raw handle so the test harness does not capture it.
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "criterion {criterion} ({name}) failed: {detail}");
}

/// Training runs share one core; running them one at a time keeps the
/// wall-clock budgets meaningful.
fn heavy() -> MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn work_dir() -> &'static Path {
    static DIR: OnceLock<PathBuf> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        dir
    })
}

fn loghub_dir() -> Option<PathBuf> {
    std::env::var_os("LOGHUB_DIR").map(PathBuf::from)
}

fn source() -> &'static str {
    if loghub_dir().is_some() {
        "LOGHUB_DIR"
    } else {
        "fixtures"
    }
}

/// `Apache_2k.log_structured_corrected.csv` -> `Apache`.
fn name_of(path: &Path) -> String {
    let file = path.file_name().unwrap().to_string_lossy();
    let stem = file.split('.').next().unwrap_or(&file);
    stem.strip_suffix("_2k").unwrap_or(stem).to_string()
}

/// Structured CSVs under `LOGHUB_DIR`, by dataset name.
fn loghub_files(dir: &Path) -> BTreeMap<String, PathBuf> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            files.extend(std::fs::read_dir(&path).unwrap().map(|e| e.unwrap().path()));
        } else {
            files.push(path);
        }
    }
    files
        .into_iter()
        .filter(|p| {
            let f = p.file_name().unwrap().to_string_lossy();
            f.ends_with(".csv") && f.contains("structured")
        })
        .map(|p| (name_of(&p), p))
        .collect()
}

/// Every general-annotation dataset, by name.
fn datasets() -> &'static BTreeMap<String, PathBuf> {
    static FILES: OnceLock<BTreeMap<String, PathBuf>> = OnceLock::new();
    FILES.get_or_init(|| match loghub_dir() {
        Some(dir) => loghub_files(&dir),
        None => {
            let dir = work_dir().join("fixtures");
            std::fs::create_dir_all(&dir).unwrap();
            SYSTEMS
                .iter()
                .map(|s| {
                    let ds = loghub_dataset(s, 2000, 0).unwrap();
                    let path = dir.join(ds.file_name());
                    ds.write_csv(&path, Annotation::General).unwrap();
                    (s.to_string(), path)
                })
                .collect()
        }
    })
}

fn dataset(name: &str) -> &'static Path {
    datasets()
        .get(name)
        .unwrap_or_else(|| panic!("dataset {name} not found in {}", source()))
}

fn logptr(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_logptr"))
        .args(args)
        .env_remove("LOGPTR_SEED")
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "logptr {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[derive(Clone, Debug)]
struct Run {
    dir: PathBuf,
    report: MetricsReport,
    elapsed: Duration,
}

fn run_dir(seed: u64, tag: &str) -> PathBuf {
    work_dir().join(format!("runs-{tag}-seed{seed}"))
}

/// `logptr benchmark` on one dataset with default hyperparameters, once per
/// `(dataset, seed, tag)` per process.
fn pipeline(name: &str, seed: u64, tag: &str) -> Run {
    type Key = (String, u64, String);
    static RUNS: Mutex<Option<HashMap<Key, Run>>> = Mutex::new(None);
    let key = (name.to_string(), seed, tag.to_string());
    if let Some(run) = RUNS
        .lock()
        .unwrap()
        .get_or_insert_with(HashMap::new)
        .get(&key)
    {
        return run.clone();
    }
    let input = work_dir().join("inputs").join(name);
    std::fs::create_dir_all(&input).unwrap();
    let csv = dataset(name);
    std::fs::copy(csv, input.join(csv.file_name().unwrap())).unwrap();
    let out = run_dir(seed, tag);
    let started = Instant::now();
    logptr(&[
        "benchmark",
        "--datasets",
        p(&input),
        "--out",
        p(&out),
        "--seed",
        &seed.to_string(),
    ]);
    let elapsed = started.elapsed();
    let dir = out.join(name);
    let report =
        MetricsReport::from_json(&std::fs::read_to_string(dir.join("report.json")).unwrap())
            .unwrap();
    let run = Run {
        dir,
        report,
        elapsed,
    };
    RUNS.lock()
        .unwrap()
        .get_or_insert_with(HashMap::new)
        .insert(key, run.clone());
    run
}

fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

#[test]
fn criterion_1_gradient_check() {
    let _guard = heavy();
    let started = Instant::now();
    let labels = LabelSet::general();
    let tokens = toks("deleting block blk_38865");
    let template = toks("deleting block [VAR]");
    let vocab = train_vocab(&tokens, 40).unwrap();
    let config = ModelConfig {
        embedding_dim: 8,
        hidden_dim: 8,
        dropout: 0.0,
        ..ModelConfig::new(labels.len(), vocab.len())
    };
    let model = PointerModel::<f32>::new(config, DEFAULT_SEED)
        .unwrap()
        .cast::<f64>();
    let input = ModelInput::new(&tokens, &vocab);
    let target = align_template(&tokens, &template, &labels).unwrap();
    let report = grad_check(
        model.params(),
        |g| {
            model
                .batch_loss(g, &[&input], &[&target], None::<&mut SplitMix64>)
                .map_err(|e| NumError::ShapeMismatch(e.to_string()))
        },
        GradCheckOptions {
            tolerance: GRAD_TOLERANCE,
            ..GradCheckOptions::default()
        },
    )
    .unwrap();
    let elapsed = started.elapsed();
    let worst = report
        .params
        .iter()
        .max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error))
        .unwrap();
    let pass = report
        .params
        .iter()
        .all(|p| p.max_rel_error <= GRAD_TOLERANCE)
        && elapsed < GRAD_BUDGET;
    verdict(
        1,
        "gradient check",
        pass,
        &format!(
            "{} tensors, worst {} at {:.2e} (tolerance {GRAD_TOLERANCE:e}), {:.2}s (budget {}s)",
            report.params.len(),
            worst.name,
            worst.max_rel_error,
            elapsed.as_secs_f64(),
            GRAD_BUDGET.as_secs()
        ),
    );
}

#[test]
fn criterion_2_overfit_hdfs() {
    let _guard = heavy();
    let labels = LabelSet::general();
    let raw = load_structured_csv(dataset("HDFS"), &labels).unwrap();
    let (records, failures) = annotate_all(&raw, &labels);
    assert!(failures.len() < raw.len() - OVERFIT_RECORDS);
    let records: Vec<AnnotatedRecord> = records.into_iter().take(OVERFIT_RECORDS).collect();
    // The same 50 records are trained on and scored.
    let split = DatasetSplit {
        train: records.clone(),
        validation: records.clone(),
        test: records,
        seed: DEFAULT_SEED,
    };
    let started = Instant::now();
    let outcome = train(
        &split,
        &labels,
        &ModelConfig::default(),
        &TrainConfig::default(),
        |_| {},
    )
    .unwrap();
    let elapsed = started.elapsed();
    let pa = outcome.best.validation_pa.unwrap();
    verdict(
        2,
        "overfit 50 HDFS records",
        pa == 1.0 && elapsed < OVERFIT_BUDGET,
        &format!(
            "PA {pa:.4} at epoch {} of {} ({}), {:.0}s (budget {}s)",
            outcome.best.epoch,
            TrainConfig::default().epochs,
            source(),
            elapsed.as_secs_f64(),
            OVERFIT_BUDGET.as_secs()
        ),
    );
}

/// Variable slots for the brute-force metrics: `<*>` or an all-caps label.
fn brute_is_variable(t: &str) -> bool {
    if t == "<*>" {
        return true;
    }
    let b = t.as_bytes();
    b.len() > 2
        && b[0] == b'['
        && b[b.len() - 1] == b']'
        && b[1..b.len() - 1]
            .iter()
            .all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || *c == b'_')
        && b[1..b.len() - 1].iter().any(|c| c.is_ascii_uppercase())
}

fn brute_same_group(a: &[String], b: &[String]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            let (vx, vy) = (brute_is_variable(x), brute_is_variable(y));
            vx && vy || !vx && !vy && x == y
        })
}

/// Message i is grouped correctly iff, for every j, "same predicted
/// template" and "same gold template" agree.
fn brute_ga(corpus: &[ParsedMessage]) -> f64 {
    let correct = (0..corpus.len())
        .filter(|&i| {
            (0..corpus.len()).all(|j| {
                brute_same_group(&corpus[i].predicted, &corpus[j].predicted)
                    == brute_same_group(&corpus[i].gold, &corpus[j].gold)
            })
        })
        .count();
    correct as f64 / corpus.len() as f64
}

fn brute_pa(corpus: &[ParsedMessage], mode: Mode) -> f64 {
    let correct = corpus
        .iter()
        .filter(|m| match mode {
            Mode::VariableAware => m.predicted == m.gold,
            Mode::General => brute_same_group(&m.predicted, &m.gold),
        })
        .count();
    correct as f64 / corpus.len() as f64
}

#[test]
fn criterion_3_metric_oracle() {
    const POOL: [&str; 8] = [
        "open", "close", "file", "<*>", "[VAR]", "[OID]", "[TDA]", "x",
    ];
    fn template(rng: &mut SplitMix64) -> Vec<String> {
        (0..rng.random_range(1..=4))
            .map(|_| POOL.choose(rng).unwrap().to_string())
            .collect()
    }
    let mut rng = SplitMix64::seed_from_u64(DEFAULT_SEED);
    let mut mismatches = 0;
    for _ in 0..METRIC_CORPORA {
        let n = rng.random_range(1..=METRIC_MAX_MESSAGES);
        // A few shared templates so groups have more than one member.
        let shapes: Vec<Vec<String>> = (0..rng.random_range(1..=4))
            .map(|_| template(&mut rng))
            .collect();
        let messages: Vec<ParsedMessage> = (0..n)
            .map(|i| {
                let pick = |rng: &mut SplitMix64| {
                    if rng.random_range(0..3) == 0 {
                        template(rng)
                    } else {
                        shapes.choose(rng).unwrap().clone()
                    }
                };
                ParsedMessage {
                    line_id: i as u64 + 1,
                    predicted: pick(&mut rng),
                    gold: pick(&mut rng),
                }
            })
            .collect();
        let corpus = ParsedCorpus::new(messages.clone()).unwrap();
        let agree = group_accuracy(&corpus).unwrap() == brute_ga(&messages)
            && [Mode::General, Mode::VariableAware]
                .into_iter()
                .all(|m| parsing_accuracy(&corpus, m).unwrap() == brute_pa(&messages, m));
        mismatches += usize::from(!agree);
    }
    verdict(
        3,
        "metric oracle equivalence",
        mismatches == 0,
        &format!("{mismatches} of {METRIC_CORPORA} random corpora disagree (exact equality)"),
    );
}

/// Alignment-failure counts that must not grow. The fixtures align fully;
/// for real data the first run writes `alignment_baseline.json` into
/// `LOGHUB_DIR` and later runs compare against it.
fn alignment_baseline(counts: &BTreeMap<String, usize>) -> BTreeMap<String, usize> {
    match loghub_dir() {
        None => counts.keys().map(|k| (k.clone(), 0)).collect(),
        Some(dir) => {
            let path = dir.join("alignment_baseline.json");
            match std::fs::read_to_string(&path) {
                Ok(text) => serde_json::from_str(&text).unwrap(),
                Err(_) => {
                    std::fs::write(&path, serde_json::to_string_pretty(counts).unwrap()).unwrap();
                    counts.clone()
                }
            }
        }
    }
}

#[test]
fn criterion_4_alignment_round_trip() {
    let labels = LabelSet::general();
    let mut counts = BTreeMap::new();
    let mut broken = Vec::new();
    for (name, path) in datasets() {
        let raw = load_structured_csv(path, &labels).unwrap();
        let (records, failures) = annotate_all(&raw, &labels);
        for r in &records {
            let back = apply_target(&r.message_tokens, &r.target, &labels).unwrap();
            if back != r.template_tokens {
                broken.push(format!("{name}:{}", r.line_id));
            }
        }
        counts.insert(name.clone(), failures.len());
    }
    let baseline = alignment_baseline(&counts);
    let regressed: Vec<String> = counts
        .iter()
        .filter(|(k, v)| baseline.get(*k).is_some_and(|b| *v > b))
        .map(|(k, v)| format!("{k} {v}>{}", baseline[k]))
        .collect();
    std::fs::write(
        work_dir().join("alignment_failures.json"),
        serde_json::to_string_pretty(&counts).unwrap(),
    )
    .unwrap();
    verdict(
        4,
        "alignment round trip",
        !counts.is_empty() && broken.is_empty() && regressed.is_empty(),
        &format!(
            "{} datasets ({}), {} round-trip mismatches, failures {:?}, regressions {:?}",
            counts.len(),
            source(),
            broken.len(),
            counts,
            regressed
        ),
    );
}

#[test]
fn criterion_5_easy_datasets() {
    let mut lines = Vec::new();
    let mut pass = true;
    for name in EASY_DATASETS {
        for seed in EASY_SEEDS {
            let run = {
                let _guard = heavy();
                pipeline(name, seed, "default")
            };
            let s = &run.report.datasets[name];
            pass &= s.ga >= EASY_MIN && s.pa >= EASY_MIN && run.elapsed < EASY_BUDGET;
            lines.push(format!(
                "{name}/seed {seed}: GA {:.4} PA {:.4} {:.0}s",
                s.ga,
                s.pa,
                run.elapsed.as_secs_f64()
            ));
        }
    }
    verdict(
        5,
        "easy datasets",
        pass,
        &format!(
            "{} (min {EASY_MIN}, budget {}s each, {})",
            lines.join("; "),
            EASY_BUDGET.as_secs(),
            source()
        ),
    );
}

#[test]
fn criterion_6_subset_mean() {
    for name in SUBSET {
        let _guard = heavy();
        pipeline(name, DEFAULT_SEED, "default");
    }
    // The per-dataset reports exist, so this only tabulates.
    let input = work_dir().join("subset");
    std::fs::create_dir_all(&input).unwrap();
    for name in SUBSET {
        let csv = dataset(name);
        std::fs::copy(csv, input.join(csv.file_name().unwrap())).unwrap();
    }
    let out = run_dir(DEFAULT_SEED, "default");
    logptr(&["benchmark", "--datasets", p(&input), "--out", p(&out)]);
    let table = MetricsReport::from_json(&std::fs::read_to_string(out.join("table.json")).unwrap())
        .unwrap();
    let agg = table.aggregate.clone().unwrap();
    let per: Vec<String> = table
        .datasets
        .iter()
        .map(|(k, s)| format!("{k} {:.3}/{:.3}", s.ga, s.pa))
        .collect();
    verdict(
        6,
        "six-dataset mean",
        table.datasets.len() == SUBSET.len()
            && agg.mean_ga >= SUBSET_MIN_MEAN
            && agg.mean_pa >= SUBSET_MIN_MEAN,
        &format!(
            "mean GA {:.4} PA {:.4} (min {SUBSET_MIN_MEAN}); {} ({})",
            agg.mean_ga,
            agg.mean_pa,
            per.join(", "),
            source()
        ),
    );
}

#[test]
fn criterion_7_variable_aware() {
    let _guard = heavy();
    let dir = work_dir().join("variable-aware");
    let ds = category_dataset(AWARE_TEMPLATES, AWARE_MESSAGES, 0);
    let csv = dir.join(ds.file_name());
    std::fs::create_dir_all(&dir).unwrap();
    ds.write_csv(&csv, Annotation::Categories).unwrap();
    let data = dir.join("data");
    let model = dir.join("model.lptr");
    let report_path = dir.join("report.json");
    let seed = DEFAULT_SEED.to_string();
    let vocab = AWARE_VOCAB.to_string();
    let mode = [
        "--mode",
        "variable_aware",
        "--seed",
        &seed,
        "--vocab-size",
        &vocab,
    ];
    logptr(
        &[
            &["prepare", "--input", p(&csv), "--out", p(&data)][..],
            &mode,
        ]
        .concat(),
    );
    logptr(
        &[
            &["train", "--data", p(&data), "--out", p(&model)][..],
            &mode,
        ]
        .concat(),
    );
    logptr(&[
        "evaluate",
        "--model",
        p(&model),
        "--data",
        p(&data),
        "--out",
        p(&report_path),
    ]);
    let report = MetricsReport::from_json(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    let s = &report.datasets[&ds.name];
    let confusion = s.category_confusion.clone().unwrap();
    verdict(
        7,
        "variable-aware parsing",
        s.pa >= AWARE_MIN_PA,
        &format!(
            "{} held-out messages, vocabulary {AWARE_VOCAB}: PA {:.4} (min {AWARE_MIN_PA}), PA without categories {:.4}, \
             category confusion {} messages / {} positions {:?}",
            s.messages,
            s.pa,
            s.pa_general.unwrap(),
            confusion.messages,
            confusion.positions,
            confusion.pairs
        ),
    );
}

#[test]
fn criterion_8_robustness_statistic() {
    let r = robustness_report(&PUBLISHED_AWARE_PA).unwrap();
    verdict(
        8,
        "robustness statistic",
        (r.std - PUBLISHED_STD).abs() <= STD_TOLERANCE,
        &format!(
            "std {:.5} vs {PUBLISHED_STD} (tolerance {STD_TOLERANCE:e}), mean {:.4}",
            r.std, r.mean
        ),
    );
}

#[test]
fn criterion_9_determinism() {
    let (first, second) = {
        let _guard = heavy();
        (
            pipeline("Apache", DEFAULT_SEED, "default"),
            pipeline("Apache", DEFAULT_SEED, "repeat"),
        )
    };
    let same = |f: &str| {
        std::fs::read(first.dir.join(f)).unwrap() == std::fs::read(second.dir.join(f)).unwrap()
    };
    let (model, report, log) = (
        same("model.lptr"),
        same("report.json"),
        same("model.epochs.csv"),
    );
    verdict(
        9,
        "determinism",
        model && report && log,
        &format!(
            "two Apache runs at seed {DEFAULT_SEED}: model identical {model}, report identical \
             {report}, epoch log identical {log}"
        ),
    );
}
