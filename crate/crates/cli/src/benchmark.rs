//! `benchmark`: prepare, train and evaluate every dataset in a directory
//! with one shared configuration, then tabulate.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use logptr::metrics::{DatasetScores, MetricsReport};
use logptr::trainer::load_model;

use crate::artifacts::{self, read_json, write_bytes};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::prepare::{dataset_name, prepare, PreparedData, SplitName};
use crate::train::{evaluate_split, train_model, write_report};

pub const TABLE: &str = "table.json";
pub const REPORT: &str = "report.json";
pub const MODEL: &str = "model.lptr";
pub const DATA_DIR: &str = "data";

/// Structured CSVs in `dir` and its immediate subdirectories, sorted by
/// path. Files with `structured` in their name are preferred when present,
/// which skips LogHub's companion `*_templates.csv` files.
pub fn find_datasets(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut found = Vec::new();
    let read = |d: &Path| std::fs::read_dir(d).map_err(|e| CliError::io(d, e));
    for entry in read(dir)? {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        if path.is_dir() {
            for inner in read(&path)? {
                found.push(inner.map_err(|e| CliError::io(&path, e))?.path());
            }
        } else {
            found.push(path);
        }
    }
    found.retain(|p| p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")));
    let structured: Vec<PathBuf> = found
        .iter()
        .filter(|p| {
            p.file_name()
                .is_some_and(|f| f.to_string_lossy().contains("structured"))
        })
        .cloned()
        .collect();
    let mut out = if structured.is_empty() {
        found
    } else {
        structured
    };
    out.sort();
    Ok(out)
}

/// Runs one dataset unless its report already exists (and `force` is off).
pub fn run_dataset(
    csv: &Path,
    config: &RunConfig,
    out: &Path,
    force: bool,
) -> Result<(String, DatasetScores), CliError> {
    let name = dataset_name(csv);
    let dir = out.join(&name);
    let report_path = dir.join(REPORT);
    if report_path.exists() && !force {
        let report: MetricsReport = read_json(&report_path)?;
        if let Some(scores) = report.datasets.get(&name) {
            eprintln!("{name}: report exists, skipping");
            return Ok((name, scores.clone()));
        }
    }
    let data_dir = dir.join(DATA_DIR);
    let summary = prepare(csv, &config.label_set()?, config.seed, &data_dir)?;
    eprintln!(
        "{name}: {} records, {} alignment failures",
        summary.records, summary.failures
    );
    let data = PreparedData::load(&data_dir)?;
    let model_path = dir.join(MODEL);
    train_model(&data, config, &model_path, true)?;
    let checkpoint = load_model(&model_path)?;
    let scores = evaluate_split(&checkpoint, &data, SplitName::Test, config.batch_size, None)?;
    eprintln!("{name}: GA {:.4} PA {:.4}", scores.ga, scores.pa);
    write_report(&report_path, &name, scores.clone())?;
    Ok((name, scores))
}

pub fn benchmark(
    datasets: &Path,
    config: &RunConfig,
    out: &Path,
    force: bool,
) -> Result<MetricsReport, CliError> {
    let csvs = find_datasets(datasets)?;
    if csvs.is_empty() {
        return Err(CliError::Other(format!(
            "no CSV datasets found in {}",
            datasets.display()
        )));
    }
    let mut scores = BTreeMap::new();
    for csv in &csvs {
        let (name, s) = run_dataset(csv, config, out, force)?;
        if scores.insert(name.clone(), s).is_some() {
            return Err(CliError::Other(format!("two datasets are named {name}")));
        }
    }
    let table = MetricsReport::from_scores(scores);
    write_bytes(&out.join(TABLE), (table.to_json() + "\n").as_bytes())?;
    let mut entries: Vec<(String, String)> = vec![(
        TABLE.to_string(),
        "per-dataset GA/PA with mean and standard deviation".to_string(),
    )];
    for name in table.datasets.keys() {
        entries.push((
            format!("{name}/"),
            "dataset run: data/, model, report".to_string(),
        ));
    }
    let refs: Vec<(&str, &str)> = entries
        .iter()
        .map(|(a, b)| (a.as_str(), b.as_str()))
        .collect();
    artifacts::record(out, None, &refs)?;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_discovery() {
        let dir = tempfile::tempdir().unwrap();
        let sub = dir.path().join("Apache");
        std::fs::create_dir(&sub).unwrap();
        std::fs::write(sub.join("Apache_2k.log_structured.csv"), "").unwrap();
        std::fs::write(sub.join("Apache_2k.log_templates.csv"), "").unwrap();
        std::fs::write(dir.path().join("HDFS_2k.log_structured.csv"), "").unwrap();
        std::fs::write(dir.path().join("notes.txt"), "").unwrap();
        let found = find_datasets(dir.path()).unwrap();
        let names: Vec<String> = found.iter().map(|p| dataset_name(p)).collect();
        assert_eq!(names, ["Apache", "HDFS"]);
    }
}
