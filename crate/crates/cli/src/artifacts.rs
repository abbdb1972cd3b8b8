//! Atomic file output and the per-directory `manifest.json` index.

use std::collections::BTreeMap;
use std::path::Path;

use logptr::trainer::write_atomic;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    write_atomic(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), CliError> {
    let mut text = String::new();
    for item in items {
        text.push_str(&serde_json::to_string(item).expect("value serializes"));
        text.push('\n');
    }
    write_bytes(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::data(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::data(path, e))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::data(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| CliError::data(path, format!("line {}: {e}", i + 1)))
        })
        .collect()
}

/// Index of the artifacts written into one directory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    /// File name (relative to the directory) to a short description.
    pub artifacts: BTreeMap<String, String>,
}

/// Merges `entries` into `dir/manifest.json`, creating it if needed.
pub fn record(dir: &Path, dataset: Option<&str>, entries: &[(&str, &str)]) -> Result<(), CliError> {
    let path = dir.join(MANIFEST);
    let mut manifest: Manifest = if path.exists() {
        read_json(&path).unwrap_or_default()
    } else {
        Manifest::default()
    };
    if let Some(d) = dataset {
        manifest.dataset = Some(d.to_string());
    }
    for (file, what) in entries {
        manifest
            .artifacts
            .insert(file.to_string(), what.to_string());
    }
    write_json(&path, &manifest)
}
