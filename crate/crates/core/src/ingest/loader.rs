use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::labels::{label_spans, LabelSet, Mode, GENERAL_LABEL, WILDCARD};
use super::IngestError;

/// One row of a structured log file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawLogRecord {
    pub line_id: u64,
    pub content: String,
    /// Template with every variable written as a label of the active set.
    pub ground_truth_template: String,
}

pub fn load_structured_csv(
    path: &Path,
    label_set: &LabelSet,
) -> Result<Vec<RawLogRecord>, IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_structured_csv(file, label_set)
}

/// Reads `LineId`, `Content` and `EventTemplate` columns; other columns are
/// ignored. Row numbers in errors count data rows from 1.
pub fn read_structured_csv<R: Read>(
    reader: R,
    label_set: &LabelSet,
) -> Result<Vec<RawLogRecord>, IngestError> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let headers = csv
        .headers()
        .map_err(|e| IngestError::MalformedRow {
            row: 0,
            reason: e.to_string(),
        })?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}') == name)
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
    };
    let line_col = column("LineId")?;
    let content_col = column("Content")?;
    let template_col = column("EventTemplate")?;

    let mut records = Vec::new();
    for (i, row) in csv.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| IngestError::MalformedRow {
            row: row_no,
            reason: e.to_string(),
        })?;
        let malformed = |reason: String| IngestError::MalformedRow {
            row: row_no,
            reason,
        };
        let line_id: u64 = row[line_col]
            .trim()
            .parse()
            .ok()
            .filter(|&id| id > 0)
            .ok_or_else(|| {
                malformed(format!(
                    "LineId {:?} is not a positive integer",
                    &row[line_col]
                ))
            })?;
        let content = &row[content_col];
        if content.trim().is_empty() {
            return Err(malformed("empty Content".to_string()));
        }
        let template = map_template(&row[template_col], label_set, row_no)?;
        records.push(RawLogRecord {
            line_id,
            content: content.to_string(),
            ground_truth_template: template,
        });
    }
    Ok(records)
}

/// Rewrites variable markers of a source template into labels of
/// `label_set`. In general mode `<*>` and every category label collapse to
/// `[VAR]`; in variable-aware mode each bracketed label must belong to the set.
pub fn map_template(
    template: &str,
    label_set: &LabelSet,
    row: usize,
) -> Result<String, IngestError> {
    let mode = label_set.mode();
    let text = if template.contains(WILDCARD) {
        match mode {
            Mode::General => template.replace(WILDCARD, GENERAL_LABEL),
            Mode::VariableAware => {
                return Err(IngestError::UnknownLabel {
                    label: WILDCARD.to_string(),
                    row,
                })
            }
        }
    } else {
        template.to_string()
    };

    let spans = label_spans(&text);
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for (start, end) in spans {
        let label = &text[start..end];
        out.push_str(&text[last..start]);
        if label_set.is_label(label) {
            out.push_str(label);
        } else if mode == Mode::General {
            out.push_str(GENERAL_LABEL);
        } else {
            return Err(IngestError::UnknownLabel {
                label: label.to_string(),
                row,
            });
        }
        last = end;
    }
    out.push_str(&text[last..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "LineId,Content,EventId,EventTemplate\n";

    fn load(body: &str, labels: &LabelSet) -> Result<Vec<RawLogRecord>, IngestError> {
        read_structured_csv(format!("{HEADER}{body}").as_bytes(), labels)
    }

    #[test]
    fn general_mode_rewrites_wildcards() {
        let rows = load(
            "1,\"Reading broadcast variable 0 took 22 ms\",E1,\"Reading broadcast variable <*> took <*> ms\"\n",
            &LabelSet::general(),
        )
        .unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].line_id, 1);
        assert_eq!(
            rows[0].ground_truth_template,
            "Reading broadcast variable [VAR] took [VAR] ms"
        );
    }

    #[test]
    fn no_variable_row() {
        let rows = load("7,shutdown,E2,shutdown\n", &LabelSet::general()).unwrap();
        assert_eq!(rows[0].ground_truth_template, "shutdown");
        assert_eq!(rows[0].content, "shutdown");
    }

    #[test]
    fn unknown_label_in_variable_aware_mode() {
        let err = load("1,a b,E1,a [XYZ]\n", &LabelSet::variable_aware()).unwrap_err();
        assert!(
            matches!(&err, IngestError::UnknownLabel { label, row: 1 } if label == "[XYZ]"),
            "{err:?}"
        );
    }

    #[test]
    fn general_mode_collapses_category_labels() {
        let rows = load("3,x 5 /tmp,E1,x [OBA] [LOI]\n", &LabelSet::general()).unwrap();
        assert_eq!(rows[0].ground_truth_template, "x [VAR] [VAR]");
    }

    #[test]
    fn missing_column_is_named() {
        let err = read_structured_csv("LineId,Content\n1,a\n".as_bytes(), &LabelSet::general())
            .unwrap_err();
        assert!(matches!(&err, IngestError::MissingColumn(c) if c == "EventTemplate"));
    }

    #[test]
    fn malformed_rows_report_row_number() {
        let err = load("1,a,E1,a\nx,b,E1,b\n", &LabelSet::general()).unwrap_err();
        assert!(
            matches!(err, IngestError::MalformedRow { row: 2, .. }),
            "{err:?}"
        );
        let err = load("1,a,E1,a\n2,b,E1\n", &LabelSet::general()).unwrap_err();
        assert!(
            matches!(err, IngestError::MalformedRow { row: 2, .. }),
            "{err:?}"
        );
        let err = load("1,\"  \",E1,a\n", &LabelSet::general()).unwrap_err();
        assert!(
            matches!(err, IngestError::MalformedRow { row: 1, .. }),
            "{err:?}"
        );
    }

    #[test]
    fn quoted_fields_follow_rfc4180() {
        let rows = load(
            "1,\"say \"\"hi\"\", then, go\",E1,\"say <*> then, go\"\n",
            &LabelSet::general(),
        )
        .unwrap();
        assert_eq!(rows[0].content, "say \"hi\", then, go");
    }

    #[test]
    fn static_brackets_survive() {
        let rows = load(
            "1,[client 1.2.3.4] denied,E1,[client <*>] denied\n",
            &LabelSet::general(),
        )
        .unwrap();
        assert_eq!(rows[0].ground_truth_template, "[client [VAR]] denied");
    }
}
