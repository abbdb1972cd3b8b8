//! Run configuration: built-in defaults, then `LOGPTR_SEED`, then a flat
//! JSON file, then command-line flags.

use std::path::{Path, PathBuf};

use clap::Args;
use logptr::ingest::{LabelSet, Mode};
use logptr::model::ModelConfig;
use logptr::trainer::TrainConfig;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::CliError;

pub const SEED_ENV: &str = "LOGPTR_SEED";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    /// Custom label spellings; the mode's defaults when absent.
    pub labels: Option<Vec<String>>,
    pub seed: u64,
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    pub clip_norm: f64,
    pub patience: Option<usize>,
    pub embedding_dim: usize,
    pub hidden_dim: usize,
    pub dropout: f64,
    pub vocab_size: usize,
    pub max_decode_factor: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        let m = ModelConfig::default();
        Self {
            mode: Mode::General,
            labels: None,
            seed: t.seed,
            batch_size: t.batch_size,
            epochs: t.epochs,
            lr: t.lr,
            clip_norm: t.clip_norm,
            patience: t.patience,
            embedding_dim: m.embedding_dim,
            hidden_dim: m.hidden_dim,
            dropout: m.dropout,
            vocab_size: m.vocab_size,
            max_decode_factor: m.max_decode_factor,
        }
    }
}

impl RunConfig {
    pub fn label_set(&self) -> Result<LabelSet, CliError> {
        Ok(match &self.labels {
            Some(labels) => LabelSet::new(self.mode, labels.clone())?,
            None => LabelSet::default_for(self.mode),
        })
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            epochs: self.epochs,
            lr: self.lr,
            seed: self.seed,
            clip_norm: self.clip_norm,
            patience: self.patience,
        }
    }

    /// Label count and vocabulary size are filled in by training.
    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            embedding_dim: self.embedding_dim,
            hidden_dim: self.hidden_dim,
            dropout: self.dropout,
            vocab_size: self.vocab_size,
            max_decode_factor: self.max_decode_factor,
            ..ModelConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.train_config()
            .validate()
            .map_err(|e| CliError::Other(e.to_string()))?;
        self.model_config()
            .validate()
            .map_err(|e| CliError::Other(e.to_string()))?;
        self.label_set()?;
        Ok(())
    }

    /// Applies the precedence chain. `env_seed` is the raw `LOGPTR_SEED`.
    pub fn resolve(
        env_seed: Option<&str>,
        file: Option<&Path>,
        flags: &Overrides,
    ) -> Result<Self, CliError> {
        let mut config = RunConfig::default();
        if let Some(s) = env_seed {
            config.seed = s.trim().parse().map_err(|_| {
                CliError::Other(format!("{SEED_ENV}={s:?} is not an unsigned integer"))
            })?;
        }
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let overlay: Map<String, Value> = serde_json::from_str(&text).map_err(|e| {
                CliError::Other(format!(
                    "{}: expected a flat JSON object: {e}",
                    path.display()
                ))
            })?;
            let Value::Object(mut merged) =
                serde_json::to_value(&config).expect("config serializes")
            else {
                unreachable!("config serializes to an object")
            };
            merged.extend(overlay);
            config = serde_json::from_value(Value::Object(merged))
                .map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?;
        }
        flags.apply(&mut config)?;
        config.validate()?;
        Ok(config)
    }
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
        .map_err(|e: logptr::ingest::IngestError| e.to_string())
}

/// Flags shared by every command that takes a run configuration.
#[derive(Args, Clone, Debug, Default)]
pub struct Overrides {
    /// Flat JSON config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// general or variable_aware.
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<Mode>,
    /// One label per line, replacing the mode's default labels.
    #[arg(long)]
    pub labels_file: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub clip_norm: Option<f64>,
    /// Stop after this many epochs without a validation improvement.
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub embedding_dim: Option<usize>,
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub vocab_size: Option<usize>,
    #[arg(long)]
    pub max_decode_factor: Option<usize>,
}

impl Overrides {
    fn apply(&self, c: &mut RunConfig) -> Result<(), CliError> {
        if let Some(path) = &self.labels_file {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            c.labels = Some(
                text.lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .map(str::to_string)
                    .collect(),
            );
        }
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field.clone() { c.$field = v; })*
            };
        }
        set!(
            mode,
            seed,
            epochs,
            batch_size,
            lr,
            clip_norm,
            embedding_dim,
            hidden_dim,
            dropout,
            vocab_size,
            max_decode_factor
        );
        if self.patience.is_some() {
            c.patience = self.patience;
        }
        Ok(())
    }

    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let env = std::env::var(SEED_ENV).ok();
        RunConfig::resolve(env.as_deref(), self.config.as_deref(), self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_published_setup() {
        let c = RunConfig::default();
        assert_eq!((c.embedding_dim, c.hidden_dim), (256, 256));
        assert_eq!((c.batch_size, c.epochs), (32, 100));
        assert_eq!((c.lr, c.dropout, c.clip_norm), (0.001, 0.2, 5.0));
        assert_eq!(c.label_set().unwrap(), LabelSet::general());
    }

    #[test]
    fn precedence_is_defaults_env_file_flags() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("c.json");

        let c = RunConfig::resolve(Some("7"), None, &Overrides::default()).unwrap();
        assert_eq!(c.seed, 7);

        std::fs::write(&file, r#"{"epochs": 5, "lr": 0.01}"#).unwrap();
        let c = RunConfig::resolve(Some("7"), Some(&file), &Overrides::default()).unwrap();
        assert_eq!((c.seed, c.epochs, c.lr), (7, 5, 0.01));

        std::fs::write(&file, r#"{"seed": 9, "epochs": 5}"#).unwrap();
        let flags = Overrides {
            epochs: Some(2),
            ..Overrides::default()
        };
        let c = RunConfig::resolve(Some("7"), Some(&file), &flags).unwrap();
        assert_eq!((c.seed, c.epochs), (9, 2));
        assert_eq!(c.batch_size, 32);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("c.json");
        assert!(RunConfig::resolve(Some("x"), None, &Overrides::default()).is_err());
        std::fs::write(&file, r#"{"epoch": 5}"#).unwrap();
        assert!(RunConfig::resolve(None, Some(&file), &Overrides::default()).is_err());
        std::fs::write(&file, "[1]").unwrap();
        assert!(RunConfig::resolve(None, Some(&file), &Overrides::default()).is_err());
        let zero = Overrides {
            batch_size: Some(0),
            ..Overrides::default()
        };
        assert!(RunConfig::resolve(None, None, &zero).is_err());
    }

    #[test]
    fn labels_come_from_a_file() {
        let dir = tempfile::tempdir().unwrap();
        let labels = dir.path().join("labels.txt");
        let names: Vec<String> = (0..10).map(|i| format!("[C{i}]")).collect();
        std::fs::write(&labels, names.join("\n") + "\n").unwrap();
        let flags = Overrides {
            mode: Some(Mode::VariableAware),
            labels_file: Some(labels),
            ..Overrides::default()
        };
        let c = RunConfig::resolve(None, None, &flags).unwrap();
        assert_eq!(c.label_set().unwrap().labels(), &names[..]);

        let wrong = Overrides {
            mode: Some(Mode::General),
            ..flags
        };
        let e = RunConfig::resolve(None, None, &wrong).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
