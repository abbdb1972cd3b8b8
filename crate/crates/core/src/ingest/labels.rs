use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::IngestError;

/// The single label used by general (category-agnostic) parsing.
pub const GENERAL_LABEL: &str = "[VAR]";

/// Placeholder used by LogHub templates for any variable.
pub const WILDCARD: &str = "<*>";

/// Default variable categories: object ID, location indicator, object name,
/// type indicator, switch indicator, time/duration of an action, computing
/// resources, object amount, status code, other parameters.
pub const DEFAULT_CATEGORY_LABELS: [&str; 10] = [
    "[OID]", "[LOI]", "[OBN]", "[TID]", "[SID]", "[TDA]", "[CRS]", "[OBA]", "[STC]", "[OTP]",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    General,
    VariableAware,
}

impl Mode {
    pub fn expected_label_count(self) -> usize {
        match self {
            Mode::General => 1,
            Mode::VariableAware => 10,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::General => "general",
            Mode::VariableAware => "variable_aware",
        })
    }
}

impl FromStr for Mode {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "general" => Ok(Mode::General),
            "variable_aware" | "variable-aware" => Ok(Mode::VariableAware),
            other => Err(IngestError::InvalidLabelSet(format!(
                "unknown mode {other:?}"
            ))),
        }
    }
}

/// Ordered category labels `c_1..c_m` prepended to every model input.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawLabelSet")]
pub struct LabelSet {
    mode: Mode,
    labels: Vec<String>,
}

#[derive(Deserialize)]
struct RawLabelSet {
    mode: Mode,
    labels: Vec<String>,
}

impl TryFrom<RawLabelSet> for LabelSet {
    type Error = IngestError;

    fn try_from(raw: RawLabelSet) -> Result<Self, Self::Error> {
        LabelSet::new(raw.mode, raw.labels)
    }
}

impl LabelSet {
    pub fn new(mode: Mode, labels: Vec<String>) -> Result<Self, IngestError> {
        let expected = mode.expected_label_count();
        if labels.len() != expected {
            return Err(IngestError::InvalidLabelSet(format!(
                "{mode} mode needs {expected} labels, got {}",
                labels.len()
            )));
        }
        for (i, label) in labels.iter().enumerate() {
            if !is_label_shaped(label) {
                return Err(IngestError::InvalidLabelSet(format!(
                    "label {label:?} must look like [NAME] (uppercase letters, digits, '_')"
                )));
            }
            if labels[..i].contains(label) {
                return Err(IngestError::InvalidLabelSet(format!(
                    "duplicate label {label}"
                )));
            }
        }
        Ok(Self { mode, labels })
    }

    pub fn general() -> Self {
        Self {
            mode: Mode::General,
            labels: vec![GENERAL_LABEL.to_string()],
        }
    }

    pub fn variable_aware() -> Self {
        Self {
            mode: Mode::VariableAware,
            labels: DEFAULT_CATEGORY_LABELS
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }

    pub fn default_for(mode: Mode) -> Self {
        match mode {
            Mode::General => Self::general(),
            Mode::VariableAware => Self::variable_aware(),
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// `m`, the number of label positions in front of every input.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// 0-based position of `token` among the labels.
    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == token)
    }

    pub fn is_label(&self, token: &str) -> bool {
        self.index_of(token).is_some()
    }

    /// Label at 0-based position `i`.
    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    /// Earliest label occurring anywhere inside `token`, if any.
    pub fn first_label_in(&self, token: &str) -> Option<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, l)| token.find(l.as_str()).map(|pos| (pos, i)))
            .min()
            .map(|(_, i)| i)
    }
}

/// `[NAME]` where NAME is uppercase ASCII letters, digits or `_`, with at
/// least one letter.
pub fn is_label_shaped(s: &str) -> bool {
    let Some(inner) = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')) else {
        return false;
    };
    !inner.is_empty()
        && inner
            .bytes()
            .all(|b| b.is_ascii_uppercase() || b.is_ascii_digit() || b == b'_')
        && inner.bytes().any(|b| b.is_ascii_uppercase())
}

/// Byte ranges of label-shaped substrings inside `text`.
pub(crate) fn label_spans(text: &str) -> Vec<(usize, usize)> {
    let bytes = text.as_bytes();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'[' {
            let mut j = i + 1;
            while j < bytes.len()
                && (bytes[j].is_ascii_uppercase() || bytes[j].is_ascii_digit() || bytes[j] == b'_')
            {
                j += 1;
            }
            if j < bytes.len() && bytes[j] == b']' && is_label_shaped(&text[i..=j]) {
                spans.push((i, j + 1));
                i = j + 1;
                continue;
            }
        }
        i += 1;
    }
    spans
}
