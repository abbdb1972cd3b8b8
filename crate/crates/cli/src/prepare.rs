//! `prepare`: CSV to aligned records, a seeded split and a failure report.

use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use logptr::ingest::{
    annotate_all, load_structured_csv, split_dataset, AnnotatedRecord, DatasetSplit, IngestError,
    LabelSet, UnalignedRecord,
};
use serde::{Deserialize, Serialize};

use crate::artifacts::{self, read_json, read_jsonl, write_json, write_jsonl};
use crate::error::CliError;

pub const RECORDS: &str = "records.jsonl";
pub const UNALIGNED: &str = "unaligned.jsonl";
pub const SPLIT: &str = "split.json";
pub const FAILURES: &str = "alignment_failures.json";
pub const LABELS: &str = "labels.json";

/// Line ids per split. Train and validation list aligned records only;
/// `dropped` holds the unaligned records that the split put there.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub train: Vec<u64>,
    pub validation: Vec<u64>,
    pub test: Vec<u64>,
    pub dropped: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureEntry {
    pub line_id: u64,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureReport {
    pub count: usize,
    pub line_ids: Vec<u64>,
    pub failures: Vec<FailureEntry>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum SplitName {
    Train,
    Validation,
    Test,
}

/// `Apache_2k.log_structured.csv` → `Apache`; otherwise the file stem up
/// to its first dot.
pub fn dataset_name(path: &Path) -> String {
    let file = path
        .file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_default();
    let stem = file.split('.').next().unwrap_or(&file);
    stem.strip_suffix("_2k").unwrap_or(stem).to_string()
}

#[derive(Clone, Debug)]
pub struct PrepareSummary {
    pub dataset: String,
    pub records: usize,
    pub failures: usize,
}

pub fn prepare(
    input: &Path,
    label_set: &LabelSet,
    seed: u64,
    out: &Path,
) -> Result<PrepareSummary, CliError> {
    let raw = load_structured_csv(input, label_set)?;
    let mut seen = HashSet::new();
    for (i, r) in raw.iter().enumerate() {
        if !seen.insert(r.line_id) {
            return Err(IngestError::MalformedRow {
                row: i + 1,
                reason: format!("duplicate LineId {}", r.line_id),
            }
            .into());
        }
    }
    let ids: Vec<u64> = raw.iter().map(|r| r.line_id).collect();
    let split = split_dataset(&ids, seed)?;
    let (aligned, failed) = annotate_all(&raw, label_set);
    let failed_ids: BTreeSet<u64> = failed.iter().map(|f| f.line_id).collect();

    let keep_aligned = |ids: &[u64]| -> Vec<u64> {
        ids.iter()
            .copied()
            .filter(|id| !failed_ids.contains(id))
            .collect()
    };
    let dropped = split
        .train
        .iter()
        .chain(&split.validation)
        .copied()
        .filter(|id| failed_ids.contains(id))
        .collect();
    let manifest = SplitManifest {
        seed,
        train: keep_aligned(&split.train),
        validation: keep_aligned(&split.validation),
        test: split.test.clone(),
        dropped,
    };
    let report = FailureReport {
        count: failed.len(),
        line_ids: failed.iter().map(|f| f.line_id).collect(),
        failures: failed
            .iter()
            .map(|f| FailureEntry {
                line_id: f.line_id,
                error: f.error.clone(),
            })
            .collect(),
    };

    let dataset = dataset_name(input);
    write_jsonl(&out.join(RECORDS), &aligned)?;
    write_jsonl(&out.join(UNALIGNED), &failed)?;
    write_json(&out.join(SPLIT), &manifest)?;
    write_json(&out.join(FAILURES), &report)?;
    write_json(&out.join(LABELS), label_set)?;
    artifacts::record(
        out,
        Some(&dataset),
        &[
            (
                RECORDS,
                "aligned records (line_id, tokens, template, target)",
            ),
            (
                UNALIGNED,
                "records whose template did not align; evaluated in test only",
            ),
            (SPLIT, "train/validation/test line ids"),
            (FAILURES, "alignment failure count and line ids"),
            (LABELS, "label set"),
        ],
    )?;
    Ok(PrepareSummary {
        dataset,
        records: raw.len(),
        failures: failed.len(),
    })
}

/// A prepared data directory read back.
#[derive(Clone, Debug)]
pub struct PreparedData {
    pub dataset: String,
    pub label_set: LabelSet,
    pub records: Vec<AnnotatedRecord>,
    pub unaligned: Vec<UnalignedRecord>,
    pub split: SplitManifest,
}

/// One message to evaluate: line id, tokens and gold template.
pub type GoldMessage = (u64, Vec<String>, Vec<String>);

impl PreparedData {
    pub fn load(dir: &Path) -> Result<Self, CliError> {
        let manifest: artifacts::Manifest = read_json(&dir.join(artifacts::MANIFEST))?;
        let data = Self {
            dataset: manifest.dataset.unwrap_or_else(|| dataset_name(dir)),
            label_set: read_json(&dir.join(LABELS))?,
            records: read_jsonl(&dir.join(RECORDS))?,
            unaligned: read_jsonl(&dir.join(UNALIGNED))?,
            split: read_json(&dir.join(SPLIT))?,
        };
        data.check(dir)?;
        Ok(data)
    }

    fn check(&self, dir: &Path) -> Result<(), CliError> {
        let aligned: HashSet<u64> = self.records.iter().map(|r| r.line_id).collect();
        let unaligned: HashSet<u64> = self.unaligned.iter().map(|r| r.line_id).collect();
        let s = &self.split;
        for id in s.train.iter().chain(&s.validation) {
            if !aligned.contains(id) {
                return Err(CliError::data(
                    dir,
                    format!("split line id {id} has no aligned record"),
                ));
            }
        }
        for id in &s.test {
            if !aligned.contains(id) && !unaligned.contains(id) {
                return Err(CliError::data(
                    dir,
                    format!("test line id {id} has no record"),
                ));
            }
        }
        Ok(())
    }

    fn aligned_by_ids(&self, ids: &[u64]) -> Vec<AnnotatedRecord> {
        let wanted: HashSet<u64> = ids.iter().copied().collect();
        let mut out: Vec<AnnotatedRecord> = self
            .records
            .iter()
            .filter(|r| wanted.contains(&r.line_id))
            .cloned()
            .collect();
        let pos: std::collections::HashMap<u64, usize> =
            ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        out.sort_by_key(|r| pos[&r.line_id]);
        out
    }

    /// Aligned train and validation records; test holds aligned test records.
    pub fn training_split(&self) -> DatasetSplit<AnnotatedRecord> {
        DatasetSplit {
            train: self.aligned_by_ids(&self.split.train),
            validation: self.aligned_by_ids(&self.split.validation),
            test: self.aligned_by_ids(&self.split.test),
            seed: self.split.seed,
        }
    }

    /// Messages of one split in split order. Test includes unaligned records.
    pub fn gold_messages(&self, which: SplitName) -> Vec<GoldMessage> {
        let ids = match which {
            SplitName::Train => &self.split.train,
            SplitName::Validation => &self.split.validation,
            SplitName::Test => &self.split.test,
        };
        let aligned: std::collections::HashMap<u64, &AnnotatedRecord> =
            self.records.iter().map(|r| (r.line_id, r)).collect();
        let unaligned: std::collections::HashMap<u64, &UnalignedRecord> =
            self.unaligned.iter().map(|r| (r.line_id, r)).collect();
        ids.iter()
            .filter_map(|id| {
                if let Some(r) = aligned.get(id) {
                    Some((*id, r.message_tokens.clone(), r.template_tokens.clone()))
                } else {
                    unaligned
                        .get(id)
                        .map(|r| (*id, r.tokens.clone(), r.template.clone()))
                }
            })
            .collect()
    }
}
