//! Group Accuracy, Parsing Accuracy and cross-dataset robustness.

#[cfg(test)]
mod tests;

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{is_label_shaped, Mode, GENERAL_LABEL, WILDCARD};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("need at least 2 datasets, got {n}")]
    TooFewDatasets { n: usize },
    #[error("line {0} appears more than once")]
    DuplicateLineId(u64),
    #[error("line {0} has a prediction but no gold template, or the reverse")]
    LineIdMismatch(u64),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedMessage {
    pub line_id: u64,
    pub predicted: Vec<String>,
    pub gold: Vec<String>,
}

/// Predicted and gold templates over one set of line ids.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParsedCorpus {
    messages: Vec<ParsedMessage>,
}

impl ParsedCorpus {
    pub fn new(messages: Vec<ParsedMessage>) -> Result<Self, MetricsError> {
        let mut seen = HashSet::with_capacity(messages.len());
        if let Some(m) = messages.iter().find(|m| !seen.insert(m.line_id)) {
            return Err(MetricsError::DuplicateLineId(m.line_id));
        }
        Ok(Self { messages })
    }

    /// Pairs predictions with gold templates by line id. Both sides must
    /// cover the same ids; the gold side's order is kept.
    pub fn from_sides(
        predicted: impl IntoIterator<Item = (u64, Vec<String>)>,
        gold: impl IntoIterator<Item = (u64, Vec<String>)>,
    ) -> Result<Self, MetricsError> {
        let mut pred: HashMap<u64, Vec<String>> = HashMap::new();
        for (id, t) in predicted {
            if pred.insert(id, t).is_some() {
                return Err(MetricsError::DuplicateLineId(id));
            }
        }
        let mut messages = Vec::with_capacity(pred.len());
        for (id, g) in gold {
            let p = pred.remove(&id).ok_or(MetricsError::LineIdMismatch(id))?;
            messages.push(ParsedMessage {
                line_id: id,
                predicted: p,
                gold: g,
            });
        }
        if let Some(&id) = pred.keys().min() {
            return Err(MetricsError::LineIdMismatch(id));
        }
        Self::new(messages)
    }

    pub fn messages(&self) -> &[ParsedMessage] {
        &self.messages
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }
}

fn is_variable(token: &str) -> bool {
    token == WILDCARD || is_label_shaped(token)
}

/// Template string used for grouping: every variable label becomes `<*>`.
pub fn group_key(template: &[String]) -> String {
    template
        .iter()
        .map(|t| if is_variable(t) { WILDCARD } else { t.as_str() })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Replaces every category label with the general label.
pub fn collapse_labels(template: &[String]) -> Vec<String> {
    template
        .iter()
        .map(|t| {
            if is_variable(t) {
                GENERAL_LABEL.to_string()
            } else {
                t.clone()
            }
        })
        .collect()
}

/// Fraction of messages whose predicted group (messages sharing its
/// predicted template) is exactly its gold group.
pub fn group_accuracy(corpus: &ParsedCorpus) -> Result<f64, MetricsError> {
    if corpus.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let keys: Vec<(String, String)> = corpus
        .messages
        .iter()
        .map(|m| (group_key(&m.predicted), group_key(&m.gold)))
        .collect();
    let mut pred_size: HashMap<&str, usize> = HashMap::new();
    let mut gold_size: HashMap<&str, usize> = HashMap::new();
    let mut both: HashMap<(&str, &str), usize> = HashMap::new();
    for (p, g) in &keys {
        *pred_size.entry(p).or_default() += 1;
        *gold_size.entry(g).or_default() += 1;
        *both.entry((p, g)).or_default() += 1;
    }
    // The two groups are equal iff their intersection is as large as both.
    let correct = keys
        .iter()
        .filter(|(p, g)| {
            let shared = both[&(p.as_str(), g.as_str())];
            shared == pred_size[p.as_str()] && shared == gold_size[g.as_str()]
        })
        .count();
    Ok(correct as f64 / corpus.len() as f64)
}

/// Whether one message counts as correctly parsed in `mode`.
pub fn template_matches(predicted: &[String], gold: &[String], mode: Mode) -> bool {
    match mode {
        Mode::VariableAware => predicted == gold,
        Mode::General => collapse_labels(predicted) == collapse_labels(gold),
    }
}

/// Fraction of messages whose predicted template equals the gold one token
/// for token. General mode compares with categories collapsed.
pub fn parsing_accuracy(corpus: &ParsedCorpus, mode: Mode) -> Result<f64, MetricsError> {
    if corpus.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let correct = corpus
        .messages
        .iter()
        .filter(|m| template_matches(&m.predicted, &m.gold, mode))
        .count();
    Ok(correct as f64 / corpus.len() as f64)
}

/// Messages that are right up to variable categories but wrong with them.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryConfusion {
    pub messages: usize,
    /// Variable positions carrying the wrong category.
    pub positions: usize,
    /// `"gold -> predicted"` counts over those positions.
    pub pairs: BTreeMap<String, usize>,
}

pub fn category_confusion(corpus: &ParsedCorpus) -> CategoryConfusion {
    let mut out = CategoryConfusion::default();
    for m in &corpus.messages {
        if m.predicted == m.gold || collapse_labels(&m.predicted) != collapse_labels(&m.gold) {
            continue;
        }
        out.messages += 1;
        for (p, g) in m.predicted.iter().zip(&m.gold) {
            if p != g {
                out.positions += 1;
                *out.pairs.entry(format!("{g} -> {p}")).or_default() += 1;
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub std: f64,
    pub population_std: f64,
}

pub fn robustness_report(values: &[f64]) -> Result<RobustnessReport, MetricsError> {
    let n = values.len();
    if n < 2 {
        return Err(MetricsError::TooFewDatasets { n });
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok(RobustnessReport {
        mean,
        std: (ss / (n - 1) as f64).sqrt(),
        population_std: (ss / n as f64).sqrt(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetScores {
    pub ga: f64,
    pub pa: f64,
    pub messages: usize,
    /// PA with categories collapsed; only present for variable-aware runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pa_general: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category_confusion: Option<CategoryConfusion>,
}

impl DatasetScores {
    pub fn compute(corpus: &ParsedCorpus, mode: Mode) -> Result<Self, MetricsError> {
        let ga = group_accuracy(corpus)?;
        let pa = parsing_accuracy(corpus, mode)?;
        let (pa_general, category_confusion) = match mode {
            Mode::General => (None, None),
            Mode::VariableAware => (
                Some(parsing_accuracy(corpus, Mode::General)?),
                Some(category_confusion(corpus)),
            ),
        };
        Ok(Self {
            ga,
            pa,
            messages: corpus.len(),
            pa_general,
            category_confusion,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean_ga: f64,
    pub mean_pa: f64,
    /// Sample std of PA; absent with fewer than two datasets.
    pub std_pa: Option<f64>,
    pub population_std_pa: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub datasets: BTreeMap<String, DatasetScores>,
    pub aggregate: Option<Aggregate>,
}

impl MetricsReport {
    pub fn from_scores(datasets: BTreeMap<String, DatasetScores>) -> Self {
        let n = datasets.len();
        let aggregate = (n > 0).then(|| {
            let pas: Vec<f64> = datasets.values().map(|s| s.pa).collect();
            let robust = robustness_report(&pas).ok();
            Aggregate {
                mean_ga: datasets.values().map(|s| s.ga).sum::<f64>() / n as f64,
                mean_pa: pas.iter().sum::<f64>() / n as f64,
                std_pa: robust.map(|r| r.std),
                population_std_pa: robust.map(|r| r.population_std),
            }
        });
        Self {
            datasets,
            aggregate,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}
