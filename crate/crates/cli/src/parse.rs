//! `parse`: raw lines or a structured CSV in, one JSON object per message out.

use std::path::Path;

use logptr::ingest::pre_tokenize;
use logptr::trainer::Checkpoint;
use serde::{Deserialize, Serialize};

use crate::artifacts::write_jsonl;
use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub label: String,
    pub span_tokens: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedLine {
    pub line_id: u64,
    pub template: String,
    pub variables: Vec<Variable>,
    /// Set when the line could not be parsed normally.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// `(line_id, content)` pairs. A `.csv` file is read by its `LineId` and
/// `Content` columns; anything else is one message per line, numbered from 1.
pub fn read_messages(path: &Path) -> Result<Vec<(u64, String)>, CliError> {
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if !is_csv {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        return Ok(text
            .lines()
            .enumerate()
            .map(|(i, l)| (i as u64 + 1, l.to_string()))
            .collect());
    }
    let bad = |row: usize, reason: String| {
        CliError::Ingest(logptr::ingest::IngestError::MalformedRow { row, reason })
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(0, e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(0, e.to_string()))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}') == name)
            .ok_or_else(|| {
                CliError::Ingest(logptr::ingest::IngestError::MissingColumn(name.into()))
            })
    };
    let (id_col, content_col) = (column("LineId")?, column("Content")?);
    reader
        .records()
        .enumerate()
        .map(|(i, row)| {
            let row = row.map_err(|e| bad(i + 1, e.to_string()))?;
            let id = row[id_col].trim().parse().map_err(|_| {
                bad(
                    i + 1,
                    format!("LineId {:?} is not an integer", &row[id_col]),
                )
            })?;
            Ok((id, row[content_col].to_string()))
        })
        .collect()
}

/// Parses every message; a line that cannot be parsed gets a warning and
/// an empty template instead of stopping the run.
pub fn parse_messages(
    checkpoint: &Checkpoint,
    messages: &[(u64, String)],
    batch_size: usize,
) -> Result<Vec<ParsedLine>, CliError> {
    let mut out: Vec<ParsedLine> = messages
        .iter()
        .map(|(id, _)| ParsedLine {
            line_id: *id,
            template: String::new(),
            variables: Vec::new(),
            warning: None,
        })
        .collect();
    let mut tokens = Vec::new();
    let mut slots = Vec::new();
    for (i, (_, content)) in messages.iter().enumerate() {
        match pre_tokenize(content) {
            Ok(t) => {
                tokens.push(t);
                slots.push(i);
            }
            Err(e) => out[i].warning = Some(e.to_string()),
        }
    }
    let results = checkpoint.parse_tokens(&tokens, batch_size)?;
    for (i, r) in slots.into_iter().zip(results) {
        let line = &mut out[i];
        line.template = r.template.join(" ");
        line.variables = r
            .spans
            .iter()
            .map(|s| Variable {
                label: s.label.clone(),
                span_tokens: r.tokens[s.start..s.end].to_vec(),
            })
            .collect();
        if !r.aligned {
            line.warning = Some("decoded template does not re-align to the message".into());
        }
    }
    Ok(out)
}

pub fn parse_file(
    checkpoint: &Checkpoint,
    input: &Path,
    out: &Path,
    batch_size: usize,
) -> Result<Vec<ParsedLine>, CliError> {
    let messages = read_messages(input)?;
    let parsed = parse_messages(checkpoint, &messages, batch_size)?;
    write_jsonl(out, &parsed)?;
    Ok(parsed)
}
