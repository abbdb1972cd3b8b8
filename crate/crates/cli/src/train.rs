//! `train` and `evaluate`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use logptr::metrics::{DatasetScores, MetricsReport, ParsedCorpus, ParsedMessage};
use logptr::trainer::{save_model, Checkpoint, EpochLog, TrainOutcome};
use serde::Serialize;

use crate::artifacts::{self, write_bytes, write_jsonl};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::prepare::{PreparedData, SplitName};

/// `model.lptr` → `model.epochs.csv`.
pub fn epoch_log_path(model: &Path) -> PathBuf {
    model.with_extension("epochs.csv")
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn parent(path: &Path) -> &Path {
    match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    }
}

/// Columns `epoch,train_loss,val_pa,selected`; `selected` marks the epoch
/// whose parameters were saved.
pub fn epoch_log_csv(log: &[EpochLog], selected: usize) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["epoch", "train_loss", "val_pa", "selected"])
        .expect("in-memory write");
    for row in log {
        w.write_record([
            row.epoch.to_string(),
            row.train_loss.to_string(),
            row.validation_pa.map(|p| p.to_string()).unwrap_or_default(),
            u8::from(row.epoch == selected).to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ASCII")
}

pub fn train_model(
    data: &PreparedData,
    config: &RunConfig,
    model_path: &Path,
    progress: bool,
) -> Result<TrainOutcome, CliError> {
    let split = data.training_split();
    let train_config = config.train_config();
    let epochs = train_config.epochs;
    let outcome = logptr::trainer::train(
        &split,
        &data.label_set,
        &config.model_config(),
        &train_config,
        |row| {
            if progress {
                let val = row
                    .validation_pa
                    .map(|p| format!("{p:.4}"))
                    .unwrap_or_else(|| "-".into());
                eprintln!(
                    "{}: epoch {}/{epochs} loss {:.4} val_pa {val}",
                    data.dataset, row.epoch, row.train_loss
                );
            }
        },
    )?;

    let dir = parent(model_path);
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    save_model(&outcome.best, model_path)?;
    let log_path = epoch_log_path(model_path);
    write_bytes(
        &log_path,
        epoch_log_csv(&outcome.log, outcome.best.epoch).as_bytes(),
    )?;
    artifacts::record(
        dir,
        None,
        &[
            (&file_name(model_path), "model file (best validation epoch)"),
            (
                &file_name(&log_path),
                "per-epoch training loss and validation PA",
            ),
        ],
    )?;
    Ok(outcome)
}

#[derive(Serialize)]
struct Prediction<'a> {
    line_id: u64,
    predicted: &'a [String],
    gold: &'a [String],
    correct: bool,
}

/// Decodes one split and scores it.
pub fn evaluate_split(
    checkpoint: &Checkpoint,
    data: &PreparedData,
    which: SplitName,
    batch_size: usize,
    predictions: Option<&Path>,
) -> Result<DatasetScores, CliError> {
    let gold = data.gold_messages(which);
    let tokens: Vec<Vec<String>> = gold.iter().map(|(_, t, _)| t.clone()).collect();
    let parsed = checkpoint.parse_tokens(&tokens, batch_size)?;
    let messages: Vec<ParsedMessage> = gold
        .into_iter()
        .zip(parsed)
        .map(|((line_id, _, gold), p)| ParsedMessage {
            line_id,
            predicted: p.template,
            gold,
        })
        .collect();
    let corpus = ParsedCorpus::new(messages).map_err(|e| CliError::Other(e.to_string()))?;
    let mode = data.label_set.mode();
    if let Some(path) = predictions {
        let rows: Vec<Prediction> = corpus
            .messages()
            .iter()
            .map(|m| Prediction {
                line_id: m.line_id,
                predicted: &m.predicted,
                gold: &m.gold,
                correct: logptr::metrics::template_matches(&m.predicted, &m.gold, mode),
            })
            .collect();
        write_jsonl(path, &rows)?;
    }
    DatasetScores::compute(&corpus, mode)
        .map_err(|e| CliError::Other(format!("{which:?} split: {e}")))
}

pub fn write_report(
    path: &Path,
    dataset: &str,
    scores: DatasetScores,
) -> Result<MetricsReport, CliError> {
    let report = MetricsReport::from_scores(BTreeMap::from([(dataset.to_string(), scores)]));
    write_bytes(path, (report.to_json() + "\n").as_bytes())?;
    artifacts::record(parent(path), None, &[(&file_name(path), "metrics report")])?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epoch_log_marks_the_selected_epoch() {
        let log = vec![
            EpochLog {
                epoch: 1,
                train_loss: 2.5,
                validation_pa: Some(0.5),
            },
            EpochLog {
                epoch: 2,
                train_loss: 1.25,
                validation_pa: None,
            },
        ];
        assert_eq!(
            epoch_log_csv(&log, 1),
            "epoch,train_loss,val_pa,selected\n1,2.5,0.5,1\n2,1.25,,0\n"
        );
        assert_eq!(
            epoch_log_path(Path::new("out/model.lptr")),
            Path::new("out/model.epochs.csv")
        );
    }
}
