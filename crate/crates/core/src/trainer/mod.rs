//! Mini-batch training with teacher forcing, validation-based model
//! selection and the model file format.

mod model_file;


use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{apply_target, AnnotatedRecord, DatasetSplit, IngestError, LabelSet};
use crate::metrics::template_matches;
use crate::model::{ModelConfig, ModelError, ModelInput, ParseResult, PointerModel};
use crate::numcore::{Adam, Graph};
use crate::tokenizer::{train_vocab, SubwordVocab, TokenizerError};

pub use model_file::{
    from_bytes, load_model, save_model, to_bytes, write_atomic, ModelFileError, FORMAT_VERSION,
    MAGIC,
};

/// Records are grouped into this many length buckets before batching.
pub const NUM_BUCKETS: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    pub clip_norm: f64,
    /// Stop after this many epochs without a validation improvement.
    pub patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            epochs: 100,
            lr: 0.001,
            seed: 42,
            clip_norm: 5.0,
            patience: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |msg: String| Err(TrainError::InvalidConfig(msg));
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if !(self.clip_norm.is_finite() && self.clip_norm > 0.0) {
            return bad(format!(
                "clip_norm must be positive, got {}",
                self.clip_norm
            ));
        }
        if self.patience == Some(0) {
            return bad("patience must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training set is empty")]
    EmptyTrainSet,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("epoch {epoch}: {source}")]
    Numeric {
        epoch: usize,
        #[source]
        source: ModelError,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tokenizer(#[from] TokenizerError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    /// 1-based.
    pub epoch: usize,
    /// Mean per-record training loss over the epoch.
    pub train_loss: f64,
    pub validation_pa: Option<f64>,
}

/// A trained model with everything needed to run it.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub model: PointerModel<f32>,
    pub vocab: SubwordVocab,
    pub label_set: LabelSet,
    /// Epoch the parameters come from (1-based).
    pub epoch: usize,
    pub validation_pa: Option<f64>,
}

impl Checkpoint {
    /// Parses pre-tokenized messages, decoding in length-sorted batches.
    /// Results come back in input order.
    pub fn parse_tokens(
        &self,
        messages: &[Vec<String>],
        batch_size: usize,
    ) -> Result<Vec<ParseResult>, ModelError> {
        let mut order: Vec<usize> = (0..messages.len()).collect();
        order.sort_by_key(|&i| messages[i].len());
        let mut results: Vec<Option<ParseResult>> = vec![None; messages.len()];
        for chunk in order.chunks(batch_size.max(1)) {
            let batch: Vec<Vec<String>> = chunk.iter().map(|&i| messages[i].clone()).collect();
            let parsed = self
                .model
                .parse_tokens_batch(&batch, &self.vocab, &self.label_set)?;
            for (&i, p) in chunk.iter().zip(parsed) {
                results[i] = Some(p);
            }
        }
        Ok(results
            .into_iter()
            .map(|r| r.expect("every message decoded"))
            .collect())
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Highest validation PA, earliest epoch on ties; the last epoch when
    /// there is no validation set.
    pub best: Checkpoint,
    pub log: Vec<EpochLog>,
}

/// Length-bucketed batches over `lengths.len()` items. Items are sorted by
/// length (ties by index), cut into `NUM_BUCKETS` equal runs, each run is
/// shuffled, the runs are concatenated and cut into batches, and the batch
/// order is shuffled.
pub fn make_batches<R: Rng + ?Sized>(
    lengths: &[usize],
    batch_size: usize,
    rng: &mut R,
) -> Vec<Vec<usize>> {
    let n = lengths.len();
    if n == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (lengths[i], i));
    for bucket in order.chunks_mut(n.div_ceil(NUM_BUCKETS)) {
        bucket.shuffle(rng);
    }
    let mut batches: Vec<Vec<usize>> = order
        .chunks(batch_size.max(1))
        .map(<[usize]>::to_vec)
        .collect();
    batches.shuffle(rng);
    batches
}

/// Fraction of `records` whose greedy decode reproduces the gold template.
pub fn parsing_accuracy_on(
    model: &PointerModel<f32>,
    inputs: &[ModelInput],
    records: &[AnnotatedRecord],
    label_set: &LabelSet,
    batch_size: usize,
) -> Result<f64, ModelError> {
    if records.is_empty() {
        return Ok(0.0);
    }
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by_key(|&i| inputs[i].num_words());
    let mut correct = 0;
    for chunk in order.chunks(batch_size.max(1)) {
        let batch: Vec<&ModelInput> = chunk.iter().map(|&i| &inputs[i]).collect();
        for (&i, target) in chunk.iter().zip(model.greedy_decode_batch(&batch)?) {
            let r = &records[i];
            let predicted = apply_target(&r.message_tokens, &target, label_set)?;
            if template_matches(&predicted, &r.template_tokens, label_set.mode()) {
                correct += 1;
            }
        }
    }
    Ok(correct as f64 / records.len() as f64)
}

/// Builds the vocabulary from the training words, then trains a fresh model.
/// `model_config`'s label count and vocabulary size are replaced by the
/// label set's and the trained vocabulary's; its `vocab_size` is the
/// vocabulary target. `on_epoch` sees each log row as it is produced.
pub fn train(
    split: &DatasetSplit<AnnotatedRecord>,
    label_set: &LabelSet,
    model_config: &ModelConfig,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    if split.train.is_empty() {
        return Err(TrainError::EmptyTrainSet);
    }
    let vocab = train_vocab(
        split.train.iter().flat_map(|r| r.message_tokens.iter()),
        model_config.vocab_size,
    )?;
    let model_config = ModelConfig {
        num_labels: label_set.len(),
        vocab_size: vocab.len(),
        ..model_config.clone()
    };

    let mut seeds = SplitMix64::seed_from_u64(config.seed);
    let mut model = PointerModel::<f32>::new(model_config, seeds.next_u64())?;
    let mut shuffle_rng = SplitMix64::seed_from_u64(seeds.next_u64());
    let mut dropout_rng = SplitMix64::seed_from_u64(seeds.next_u64());
    let adam = Adam::with_lr(config.lr);

    let encode = |records: &[AnnotatedRecord]| -> Vec<ModelInput> {
        records
            .iter()
            .map(|r| ModelInput::new(&r.message_tokens, &vocab))
            .collect()
    };
    let train_inputs = encode(&split.train);
    let val_inputs = encode(&split.validation);
    let lengths: Vec<usize> = train_inputs.iter().map(ModelInput::num_words).collect();

    let mut log = Vec::with_capacity(config.epochs);
    let mut best: Option<(Checkpoint, f64)> = None;
    for epoch in 1..=config.epochs {
        let numeric = |source: ModelError| TrainError::Numeric { epoch, source };
        let mut loss_sum = 0.0;
        for batch in make_batches(&lengths, config.batch_size, &mut shuffle_rng) {
            let inputs: Vec<&ModelInput> = batch.iter().map(|&i| &train_inputs[i]).collect();
            let targets: Vec<_> = batch.iter().map(|&i| &split.train[i].target).collect();
            let grads = {
                let mut g = Graph::new(model.params());
                let loss = model
                    .batch_loss(&mut g, &inputs, &targets, Some(&mut dropout_rng))
                    .map_err(numeric)?;
                loss_sum += f64::from(g.value(loss).data()[0]) * batch.len() as f64;
                g.backward(loss).map_err(|e| numeric(e.into()))?
            };
            let params = model.params_mut();
            params.accumulate(&grads);
            params.clip_grad_norm(config.clip_norm);
            adam.step(params);
        }
        let train_loss = loss_sum / split.train.len() as f64;
        if !train_loss.is_finite() {
            return Err(numeric(ModelError::Num(
                crate::numcore::NumError::NonFinite("training loss"),
            )));
        }
        let validation_pa = if split.validation.is_empty() {
            None
        } else {
            Some(
                parsing_accuracy_on(
                    &model,
                    &val_inputs,
                    &split.validation,
                    label_set,
                    config.batch_size,
                )
                .map_err(numeric)?,
            )
        };
        let row = EpochLog {
            epoch,
            train_loss,
            validation_pa,
        };
        on_epoch(&row);
        log.push(row);

        let score = validation_pa.unwrap_or(f64::NEG_INFINITY);
        let improved = match &best {
            None => true,
            Some((_, s)) => score > *s || validation_pa.is_none(),
        };
        if improved {
            let checkpoint = Checkpoint {
                model: model.clone(),
                vocab: vocab.clone(),
                label_set: label_set.clone(),
                epoch,
                validation_pa,
            };
            best = Some((checkpoint, score));
        }
        if let (Some(patience), Some((b, _))) = (config.patience, &best) {
            if validation_pa.is_some() && epoch - b.epoch >= patience {
                break;
            }
        }
    }
    let (best, _) = best.expect("at least one epoch ran");
    Ok(TrainOutcome { best, log })
}
