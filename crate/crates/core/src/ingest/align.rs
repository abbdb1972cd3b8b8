use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::labels::LabelSet;
use super::loader::RawLogRecord;
use super::{pre_tokenize, IngestError};

/// 1-based indices into the augmented input `[c_1..c_m, t_1..t_n, EOS]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointerTarget(Vec<usize>);

impl PointerTarget {
    /// Checks the EOS-termination and range invariants for `m` labels and
    /// `n` words.
    pub fn new(indices: Vec<usize>, m: usize, n: usize) -> Result<Self, IngestError> {
        let eos = m + n + 1;
        if let Some(&bad) = indices.iter().find(|&&i| i == 0 || i > eos) {
            return Err(IngestError::IndexOutOfRange {
                index: bad,
                max: eos,
            });
        }
        match indices.iter().position(|&i| i == eos) {
            Some(p) if p + 1 == indices.len() => Ok(Self(indices)),
            _ => Err(IngestError::InvalidTarget(format!(
                "target must end with exactly one EOS index {eos}: {indices:?}"
            ))),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

/// One message with its pointer supervision.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedRecord {
    pub line_id: u64,
    #[serde(rename = "tokens")]
    pub message_tokens: Vec<String>,
    #[serde(rename = "template")]
    pub template_tokens: Vec<String>,
    pub target: PointerTarget,
}

/// A record whose template could not be aligned to its message. It still
/// belongs to the evaluation set, so its gold template is kept.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnalignedRecord {
    pub line_id: u64,
    pub tokens: Vec<String>,
    pub template: Vec<String>,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct AlignmentFailure {
    /// Template token that could not be placed.
    pub token: String,
    /// 0-based position of `token` in the template.
    pub template_position: usize,
    /// 1-based message position where the search started.
    pub cursor: usize,
    pub reason: FailureReason,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FailureReason {
    StaticTokenNotFound,
    EmptyVariable,
    EmptyTemplate,
}

impl fmt::Display for AlignmentFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.reason {
            FailureReason::StaticTokenNotFound => write!(
                f,
                "template token {:?} (position {}) not found at or after message position {}",
                self.token, self.template_position, self.cursor
            ),
            FailureReason::EmptyVariable => write!(
                f,
                "label {:?} (position {}) would consume no message tokens at position {}",
                self.token, self.template_position, self.cursor
            ),
            FailureReason::EmptyTemplate => f.write_str("empty template"),
        }
    }
}

/// Alignment result plus the message span consumed by each label occurrence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alignment {
    pub target: PointerTarget,
    /// `(label index (0-based), message token range (0-based))` per label occurrence.
    pub spans: Vec<(usize, Range<usize>)>,
}

/// Greedy left-to-right alignment of a word-level template to its message.
///
/// Static tokens match the first equal message word at or after the cursor.
/// A run of `r` consecutive labels covers the words up to the next static
/// match (or the end); the first `r - 1` labels take one word each and the
/// last takes the remainder.
pub fn align_with_spans(
    message_tokens: &[String],
    template_tokens: &[String],
    label_set: &LabelSet,
) -> Result<Alignment, AlignmentFailure> {
    let m = label_set.len();
    let n = message_tokens.len();
    if template_tokens.is_empty() {
        return Err(AlignmentFailure {
            token: String::new(),
            template_position: 0,
            cursor: 1,
            reason: FailureReason::EmptyTemplate,
        });
    }
    let find = |word: &str, from: usize| (from..n).find(|&p| message_tokens[p] == word);

    let mut indices = Vec::with_capacity(template_tokens.len() + 1);
    let mut spans = Vec::new();
    let mut cursor = 0;
    let mut i = 0;
    while i < template_tokens.len() {
        let token = &template_tokens[i];
        if label_set.is_label(token) {
            let run_start = i;
            while i < template_tokens.len() && label_set.is_label(&template_tokens[i]) {
                i += 1;
            }
            let run = i - run_start;
            let end = match template_tokens.get(i) {
                Some(next) => find(next, cursor + run).ok_or_else(|| AlignmentFailure {
                    token: next.clone(),
                    template_position: i,
                    cursor: cursor + run + 1,
                    reason: FailureReason::StaticTokenNotFound,
                })?,
                None => n,
            };
            if end < cursor + run {
                // Only reachable for a trailing run: fewer words left than labels.
                let starved = run_start + (n - cursor);
                return Err(AlignmentFailure {
                    token: template_tokens[starved].clone(),
                    template_position: starved,
                    cursor: n + 1,
                    reason: FailureReason::EmptyVariable,
                });
            }
            for (k, label) in template_tokens[run_start..i].iter().enumerate() {
                let j = label_set.index_of(label).expect("checked above");
                indices.push(j + 1);
                let span_end = if k + 1 == run { end } else { cursor + 1 };
                spans.push((j, cursor..span_end));
                cursor = span_end;
            }
        } else {
            let p = find(token, cursor).ok_or_else(|| AlignmentFailure {
                token: token.clone(),
                template_position: i,
                cursor: cursor + 1,
                reason: FailureReason::StaticTokenNotFound,
            })?;
            indices.push(m + p + 1);
            cursor = p + 1;
            i += 1;
        }
    }
    indices.push(m + n + 1);
    Ok(Alignment {
        target: PointerTarget(indices),
        spans,
    })
}

pub fn align_template(
    message_tokens: &[String],
    template_tokens: &[String],
    label_set: &LabelSet,
) -> Result<PointerTarget, AlignmentFailure> {
    align_with_spans(message_tokens, template_tokens, label_set).map(|a| a.target)
}

/// Maps pointer indices back to template tokens; EOS ends the output.
pub fn apply_target(
    message_tokens: &[String],
    target: &PointerTarget,
    label_set: &LabelSet,
) -> Result<Vec<String>, IngestError> {
    apply_indices(message_tokens, target.indices(), label_set)
}

pub fn apply_indices(
    message_tokens: &[String],
    indices: &[usize],
    label_set: &LabelSet,
) -> Result<Vec<String>, IngestError> {
    let m = label_set.len();
    let n = message_tokens.len();
    let eos = m + n + 1;
    let mut out = Vec::with_capacity(indices.len());
    for &i in indices {
        match i {
            0 => return Err(IngestError::IndexOutOfRange { index: i, max: eos }),
            i if i <= m => out.push(label_set.label(i - 1).to_string()),
            i if i <= m + n => out.push(message_tokens[i - m - 1].clone()),
            i if i == eos => break,
            _ => return Err(IngestError::IndexOutOfRange { index: i, max: eos }),
        }
    }
    Ok(out)
}

/// Word-level view of a mapped template: a token that mixes static text with
/// a label (`blk_[VAR]`, `/[VAR]:[VAR]`) becomes its first label, because the
/// pointer can only copy whole words.
pub fn normalize_template_tokens(template: &str, label_set: &LabelSet) -> Vec<String> {
    template
        .split_whitespace()
        .map(|tok| match label_set.first_label_in(tok) {
            Some(j) => label_set.label(j).to_string(),
            None => tok.to_string(),
        })
        .collect()
}

pub fn annotate(
    raw: &RawLogRecord,
    label_set: &LabelSet,
) -> Result<AnnotatedRecord, UnalignedRecord> {
    let tokens = pre_tokenize(&raw.content).unwrap_or_default();
    let template = normalize_template_tokens(&raw.ground_truth_template, label_set);
    match align_template(&tokens, &template, label_set) {
        Ok(target) => Ok(AnnotatedRecord {
            line_id: raw.line_id,
            message_tokens: tokens,
            template_tokens: template,
            target,
        }),
        Err(e) => Err(UnalignedRecord {
            line_id: raw.line_id,
            tokens,
            template,
            error: e.to_string(),
        }),
    }
}

/// Aligns every record, keeping failures separately in input order.
pub fn annotate_all(
    raw: &[RawLogRecord],
    label_set: &LabelSet,
) -> (Vec<AnnotatedRecord>, Vec<UnalignedRecord>) {
    let mut ok = Vec::with_capacity(raw.len());
    let mut failed = Vec::new();
    for r in raw {
        match annotate(r, label_set) {
            Ok(a) => ok.push(a),
            Err(f) => failed.push(f),
        }
    }
    (ok, failed)
}
