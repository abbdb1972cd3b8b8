//! Structured-log loading, pointer supervision and dataset splits.

mod align;
mod labels;
mod loader;
mod split;


use thiserror::Error;

pub use align::{
    align_template, align_with_spans, annotate, annotate_all, apply_indices, apply_target,
    normalize_template_tokens, Alignment, AlignmentFailure, AnnotatedRecord, FailureReason,
    PointerTarget, UnalignedRecord,
};
pub use labels::{
    is_label_shaped, LabelSet, Mode, DEFAULT_CATEGORY_LABELS, GENERAL_LABEL, WILDCARD,
};
pub use loader::{load_structured_csv, map_template, read_structured_csv, RawLogRecord};
pub use split::{split_dataset, split_sizes, DatasetSplit, TRAIN_FRACTION, VALIDATION_FRACTION};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("missing column {0}")]
    MissingColumn(String),
    #[error("malformed row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("unknown label {label} in row {row}")]
    UnknownLabel { label: String, row: usize },
    #[error("message is empty")]
    EmptyMessage,
    #[error("invalid label set: {0}")]
    InvalidLabelSet(String),
    #[error("need at least 5 records to split, got {n}")]
    TooFewRecords { n: usize },
    #[error("pointer index {index} outside 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    #[error("alignment failed: {0}")]
    Alignment(#[from] AlignmentFailure),
}

/// Splits a message into maximal runs of non-whitespace characters.
pub fn pre_tokenize(content: &str) -> Result<Vec<String>, IngestError> {
    let tokens: Vec<String> = content.split_whitespace().map(str::to_string).collect();
    if tokens.is_empty() {
        Err(IngestError::EmptyMessage)
    } else {
        Ok(tokens)
    }
}
