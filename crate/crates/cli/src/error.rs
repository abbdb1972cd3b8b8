use std::path::Path;

use logptr::ingest::IngestError;
use logptr::model::ModelError;
use logptr::trainer::{ModelFileError, TrainError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("{0}")]
    Numeric(String),
    #[error(transparent)]
    ModelFile(#[from] ModelFileError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Other(String),
}

impl CliError {
    /// Process exit code: 2 ingest, 3 numeric, 4 model file, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Ingest(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::ModelFile(_) => 4,
            CliError::Io { .. } | CliError::Other(_) => 1,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Unreadable or inconsistent prepared data counts as an ingest error.
    pub fn data(path: &Path, reason: impl std::fmt::Display) -> Self {
        CliError::Ingest(IngestError::MalformedRow {
            row: 0,
            reason: format!("{}: {reason}", path.display()),
        })
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Numeric { .. } => CliError::Numeric(e.to_string()),
            TrainError::Ingest(e) => CliError::Ingest(e),
            TrainError::Model(e) => e.into(),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Num(_) => CliError::Numeric(e.to_string()),
            ModelError::Ingest(e) => CliError::Ingest(e),
            other => CliError::Other(other.to_string()),
        }
    }
}
