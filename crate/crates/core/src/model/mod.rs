//! Pointer-network parser: a Bi-LSTM encoder over `[labels, words, EOS]`, an
//! LSTM decoder, and additive attention whose distribution over input
//! positions is the output.

mod forward;
mod infer;


use rand::{RngExt, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::IngestError;
use crate::numcore::{NumError, ParamId, ParamStore, Scalar, Tensor};
use crate::tokenizer::SubwordVocab;

pub use infer::{pointer_distribution, DecoderState, Encoded, ParseResult, TokenTag, VariableSpan};

/// Half-width of the uniform initialisation range.
pub const INIT_RANGE: f64 = 0.08;
pub const FORGET_GATE_BIAS: f64 = 1.0;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("parameter {name}: {reason}")]
    BadParameter { name: String, reason: String },
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub embedding_dim: usize,
    pub hidden_dim: usize,
    pub dropout: f64,
    pub num_labels: usize,
    pub vocab_size: usize,
    pub max_decode_factor: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            embedding_dim: 256,
            hidden_dim: 256,
            dropout: 0.2,
            num_labels: 1,
            vocab_size: crate::tokenizer::DEFAULT_VOCAB_SIZE,
            max_decode_factor: 2,
        }
    }
}

impl ModelConfig {
    pub fn new(num_labels: usize, vocab_size: usize) -> Self {
        Self {
            num_labels,
            vocab_size,
            ..Self::default()
        }
    }

    /// Inner width of the pointer attention.
    pub fn attention_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            ("embedding_dim", self.embedding_dim),
            ("hidden_dim", self.hidden_dim),
            ("num_labels", self.num_labels),
            ("vocab_size", self.vocab_size),
            ("max_decode_factor", self.max_decode_factor),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(ModelError::InvalidConfig(format!(
                "{name} must be positive"
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ModelError::InvalidConfig(format!(
                "dropout {} outside [0, 1)",
                self.dropout
            )));
        }
        Ok(())
    }

    /// Parameter names and shapes in canonical (serialization) order.
    pub fn parameter_layout(&self) -> Vec<(String, Vec<usize>)> {
        let (e, h, a) = (self.embedding_dim, self.hidden_dim, self.attention_dim());
        let mut layout = vec![
            ("subword_embedding".to_string(), vec![self.vocab_size, e]),
            ("label_embedding".to_string(), vec![self.num_labels + 2, e]),
        ];
        let lstm = |prefix: &str, input: usize| {
            vec![
                (format!("{prefix}.w_input"), vec![input, 4 * h]),
                (format!("{prefix}.w_recurrent"), vec![h, 4 * h]),
                (format!("{prefix}.bias"), vec![4 * h]),
            ]
        };
        layout.extend(lstm("encoder_fwd", e));
        layout.extend(lstm("encoder_bwd", e));
        for name in ["bridge_h", "bridge_c"] {
            layout.push((format!("{name}.weight"), vec![2 * h, h]));
            layout.push((format!("{name}.bias"), vec![h]));
        }
        layout.extend(lstm("decoder", e));
        layout.push(("pointer.w1".to_string(), vec![2 * h, a]));
        layout.push(("pointer.w2".to_string(), vec![h, a]));
        layout.push(("pointer.v".to_string(), vec![a, 1]));
        layout
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct LstmIds {
    input: ParamId,
    recurrent: ParamId,
    bias: ParamId,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct ParamIds {
    subword_embedding: ParamId,
    label_embedding: ParamId,
    encoder_fwd: LstmIds,
    encoder_bwd: LstmIds,
    bridge_h: (ParamId, ParamId),
    bridge_c: (ParamId, ParamId),
    decoder: LstmIds,
    w1: ParamId,
    w2: ParamId,
    v: ParamId,
}

impl ParamIds {
    /// Ids follow `parameter_layout` order.
    fn canonical() -> Self {
        let id = ParamId;
        let lstm = |s: usize| LstmIds {
            input: id(s),
            recurrent: id(s + 1),
            bias: id(s + 2),
        };
        Self {
            subword_embedding: id(0),
            label_embedding: id(1),
            encoder_fwd: lstm(2),
            encoder_bwd: lstm(5),
            bridge_h: (id(8), id(9)),
            bridge_c: (id(10), id(11)),
            decoder: lstm(12),
            w1: id(15),
            w2: id(16),
            v: id(17),
        }
    }
}

/// Subword ids of every word of one message.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelInput {
    pub word_pieces: Vec<Vec<usize>>,
}

impl ModelInput {
    pub fn new(tokens: &[String], vocab: &SubwordVocab) -> Self {
        Self {
            word_pieces: tokens.iter().map(|t| vocab.encode_word(t)).collect(),
        }
    }

    pub fn num_words(&self) -> usize {
        self.word_pieces.len()
    }
}

#[derive(Clone, Debug)]
pub struct PointerModel<T: Scalar = f32> {
    config: ModelConfig,
    params: ParamStore<T>,
    ids: ParamIds,
}

impl<T: Scalar> PointerModel<T> {
    /// Fresh parameters: uniform in `±INIT_RANGE`, zero biases except the
    /// LSTM forget gate.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = SplitMix64::seed_from_u64(seed);
        let h = config.hidden_dim;
        let mut params = ParamStore::new();
        for (name, shape) in config.parameter_layout() {
            let n: usize = shape.iter().product();
            let data: Vec<T> = if name.ends_with("bias") {
                let forget = name.starts_with("encoder") || name.starts_with("decoder");
                (0..n)
                    .map(|j| {
                        if forget && (h..2 * h).contains(&j) {
                            T::from_f64(FORGET_GATE_BIAS)
                        } else {
                            T::ZERO
                        }
                    })
                    .collect()
            } else {
                (0..n)
                    .map(|_| T::from_f64(rng.random_range(-INIT_RANGE..INIT_RANGE)))
                    .collect()
            };
            params.add(name, Tensor::new(&shape, data)?);
        }
        Ok(Self {
            config,
            params,
            ids: ParamIds::canonical(),
        })
    }

    /// Wraps loaded parameters after checking names and shapes.
    pub fn from_params(config: ModelConfig, params: ParamStore<T>) -> Result<Self, ModelError> {
        config.validate()?;
        let layout = config.parameter_layout();
        if params.len() != layout.len() {
            return Err(ModelError::InvalidConfig(format!(
                "expected {} parameter tensors, got {}",
                layout.len(),
                params.len()
            )));
        }
        for (p, (name, shape)) in params.iter().zip(&layout) {
            if &p.name != name {
                return Err(ModelError::BadParameter {
                    name: p.name.clone(),
                    reason: format!("expected {name} at this position"),
                });
            }
            if p.value.shape() != shape.as_slice() {
                return Err(ModelError::BadParameter {
                    name: name.clone(),
                    reason: format!("shape {:?}, expected {shape:?}", p.value.shape()),
                });
            }
        }
        Ok(Self {
            config,
            params,
            ids: ParamIds::canonical(),
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.params
    }

    pub fn into_params(self) -> ParamStore<T> {
        self.params
    }

    pub fn cast<U: Scalar>(&self) -> PointerModel<U> {
        PointerModel {
            config: self.config.clone(),
            params: self.params.cast(),
            ids: self.ids,
        }
    }

    /// Length of the augmented input `[labels, words, EOS]`.
    pub fn input_len(&self, input: &ModelInput) -> usize {
        self.config.num_labels + input.num_words() + 1
    }

    pub fn max_decode_steps(&self, input: &ModelInput) -> usize {
        self.config.max_decode_factor * self.input_len(input)
    }
}
