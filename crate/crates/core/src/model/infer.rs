//! Inference on plain tensors: single-example encoding, step-wise decoding,
//! batched greedy decoding and message parsing.

use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use super::{ModelError, ModelInput, PointerModel};
use crate::ingest::{align_with_spans, apply_target, pre_tokenize, LabelSet, PointerTarget};
use crate::numcore::ops::{self, LstmWeights};
use crate::numcore::{Graph, NumError, Scalar, Tensor};
use crate::tokenizer::SubwordVocab;

/// Encoder output for one example.
#[derive(Clone, Debug, PartialEq)]
pub struct Encoded<T: Scalar = f32> {
    /// `[L × 2H]`, forward half then backward half.
    pub states: Tensor<T>,
    /// `[L + 1 × E]` input embeddings; the last row is BOS.
    pub embeddings: Tensor<T>,
    /// `W1·e_i` for every position, `[L × A]`.
    pub projected: Tensor<T>,
    pub initial: DecoderState<T>,
}

impl<T: Scalar> Encoded<T> {
    pub fn len(&self) -> usize {
        self.states.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecoderState<T: Scalar = f32> {
    pub h: Tensor<T>,
    pub c: Tensor<T>,
}

/// Masked softmax over pointer scores.
pub fn pointer_distribution<T: Scalar>(
    scores: &Tensor<T>,
    mask: &[bool],
) -> Result<Tensor<T>, NumError> {
    ops::masked_softmax(scores, mask)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenTag {
    Static,
    Category(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableSpan {
    pub label: String,
    /// 0-based half-open range over the message tokens.
    pub start: usize,
    pub end: usize,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseResult {
    pub tokens: Vec<String>,
    pub target: PointerTarget,
    pub template: Vec<String>,
    pub tags: Vec<TokenTag>,
    pub spans: Vec<VariableSpan>,
    /// False when the decoded template could not be re-aligned to the
    /// message; `spans` is then empty.
    pub aligned: bool,
}

/// `scores[i] = v · tanh(projected[i] + w2d)` for the first `len` rows.
fn scores_into<T: Scalar>(projected: &[T], w2d: &[T], v: &[T], len: usize, out: &mut Vec<T>) {
    let a = w2d.len();
    let mut hidden = vec![T::ZERO; a];
    out.clear();
    for i in 0..len {
        ops::tanh_sum_into(&projected[i * a..(i + 1) * a], w2d, &mut hidden);
        out.push(ops::dot(&hidden, v));
    }
}

/// Lowest index among the maxima.
fn argmax<T: Scalar>(xs: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

impl<T: Scalar> PointerModel<T> {
    fn decoder_weights(&self) -> LstmWeights<T> {
        let d = self.ids.decoder;
        LstmWeights {
            input: self.params.value(d.input).clone(),
            recurrent: self.params.value(d.recurrent).clone(),
            bias: self.params.value(d.bias).clone(),
        }
    }

    /// `[L × E]` embeddings of `[labels, words, EOS]` (inference mode).
    pub fn embed_input(&self, input: &ModelInput) -> Result<Tensor<T>, ModelError> {
        let mut g = Graph::new(&self.params);
        let (x_ext, lens, _) = self.embed_batch(&mut g, &[input], None::<&mut SplitMix64>)?;
        let x = g.slice_rows(x_ext, 0, lens[0])?;
        Ok(g.value(x).clone())
    }

    pub fn encode(&self, input: &ModelInput) -> Result<Encoded<T>, ModelError> {
        let mut g = Graph::new(&self.params);
        let enc = self.encode_batch(&mut g, &[input], None::<&mut SplitMix64>)?;
        Ok(Encoded {
            states: g.value(enc.states).clone(),
            embeddings: g.value(enc.x_ext).clone(),
            projected: g.value(enc.projected).clone(),
            initial: DecoderState {
                h: g.value(enc.h0).clone(),
                c: g.value(enc.c0).clone(),
            },
        })
    }

    /// Raw scores `u_i = v · tanh(W1 e_i + W2 d)` over every position.
    pub fn pointer_scores(
        &self,
        encoded: &Encoded<T>,
        d: &Tensor<T>,
    ) -> Result<Tensor<T>, ModelError> {
        let w2d = ops::matmul(d, self.params.value(self.ids.w2))?;
        if w2d.rows() != 1 || w2d.cols() != encoded.projected.cols() {
            return Err(NumError::ShapeMismatch(format!("decoder state {:?}", d.shape())).into());
        }
        let mut out = Vec::new();
        scores_into(
            encoded.projected.data(),
            w2d.data(),
            self.params.value(self.ids.v).data(),
            encoded.len(),
            &mut out,
        );
        Ok(Tensor::matrix(1, out.len(), out)?)
    }

    /// Feeds the element at 1-based `prev` (0 = BOS) and returns the pointer
    /// distribution with the new state.
    pub fn decode_step(
        &self,
        encoded: &Encoded<T>,
        prev: usize,
        state: &DecoderState<T>,
    ) -> Result<(Tensor<T>, DecoderState<T>), ModelError> {
        let len = encoded.len();
        if prev > len {
            return Err(NumError::IndexOutOfRange { index: prev, len }.into());
        }
        let row = if prev == 0 { len } else { prev - 1 };
        let x = Tensor::matrix(
            1,
            encoded.embeddings.cols(),
            encoded.embeddings.row(row).to_vec(),
        )?;
        let (h, c) = ops::lstm_cell(&x, &state.h, &state.c, &self.decoder_weights())?;
        let scores = self.pointer_scores(encoded, &h)?;
        let dist = pointer_distribution(&scores, &vec![true; len])?;
        Ok((dist, DecoderState { h, c }))
    }

    /// Summed teacher-forced NLL of one example, without dropout.
    pub fn sequence_loss(
        &self,
        input: &ModelInput,
        target: &PointerTarget,
    ) -> Result<T, ModelError> {
        let mut g = Graph::new(&self.params);
        let loss = self.batch_loss(&mut g, &[input], &[target], None::<&mut SplitMix64>)?;
        Ok(g.value(loss).data()[0])
    }

    pub fn greedy_decode(&self, input: &ModelInput) -> Result<PointerTarget, ModelError> {
        Ok(self.greedy_decode_batch(&[input])?.remove(0))
    }

    /// Argmax decoding (ties to the lowest index) fed back step by step.
    /// Each example stops at EOS; one that has not produced EOS after
    /// `max_decode_steps − 1` pointers gets EOS appended.
    pub fn greedy_decode_batch(
        &self,
        inputs: &[&ModelInput],
    ) -> Result<Vec<PointerTarget>, ModelError> {
        let (x_ext, projected, mut h, mut c, lens, lmax) = {
            let mut g = Graph::new(&self.params);
            let enc = self.encode_batch(&mut g, inputs, None::<&mut SplitMix64>)?;
            (
                g.value(enc.x_ext).clone(),
                g.value(enc.projected).clone(),
                g.value(enc.h0).clone(),
                g.value(enc.c0).clone(),
                enc.lens,
                enc.lmax,
            )
        };
        let batch = inputs.len();
        let e = x_ext.cols();
        let a = projected.cols();
        let weights = self.decoder_weights();
        let w2 = self.params.value(self.ids.w2);
        let v = self.params.value(self.ids.v).data();
        let factor = self.config.max_decode_factor;

        let mut prev = vec![0usize; batch];
        let mut outputs: Vec<Vec<usize>> = vec![Vec::new(); batch];
        let mut done = vec![false; batch];
        let mut scores = Vec::with_capacity(lmax);
        while done.iter().any(|d| !d) {
            let mut x = Vec::with_capacity(batch * e);
            for (b, &p) in prev.iter().enumerate() {
                let row = if p == 0 {
                    lmax * batch
                } else {
                    (p - 1) * batch + b
                };
                x.extend_from_slice(x_ext.row(row));
            }
            let x = Tensor::matrix(batch, e, x)?;
            (h, c) = ops::lstm_cell(&x, &h, &c, &weights)?;
            let w2d = ops::matmul(&h, w2)?;
            for b in 0..batch {
                if done[b] {
                    continue;
                }
                let len = lens[b];
                let proj = &projected.data()[b * lmax * a..(b * lmax + len) * a];
                scores_into(proj, w2d.row(b), v, len, &mut scores);
                let pick = argmax(&scores) + 1;
                outputs[b].push(pick);
                prev[b] = pick;
                if pick == len {
                    done[b] = true;
                } else if outputs[b].len() + 1 >= factor * len {
                    outputs[b].push(len);
                    done[b] = true;
                }
            }
        }
        outputs
            .into_iter()
            .zip(inputs)
            .map(|(indices, input)| {
                PointerTarget::new(indices, self.config.num_labels, input.num_words())
                    .map_err(ModelError::from)
            })
            .collect()
    }

    /// Tokenizes, decodes and recovers variable spans by re-aligning the
    /// decoded template to the message.
    pub fn parse_message(
        &self,
        content: &str,
        vocab: &SubwordVocab,
        label_set: &LabelSet,
    ) -> Result<ParseResult, ModelError> {
        let tokens = pre_tokenize(content)?;
        let mut results = self.parse_tokens_batch(&[tokens], vocab, label_set)?;
        Ok(results.remove(0))
    }

    pub fn parse_tokens_batch(
        &self,
        messages: &[Vec<String>],
        vocab: &SubwordVocab,
        label_set: &LabelSet,
    ) -> Result<Vec<ParseResult>, ModelError> {
        if label_set.len() != self.config.num_labels {
            return Err(ModelError::InvalidConfig(format!(
                "label set has {} labels, model expects {}",
                label_set.len(),
                self.config.num_labels
            )));
        }
        let inputs: Vec<ModelInput> = messages.iter().map(|t| ModelInput::new(t, vocab)).collect();
        let refs: Vec<&ModelInput> = inputs.iter().collect();
        let targets = self.greedy_decode_batch(&refs)?;
        messages
            .iter()
            .zip(targets)
            .map(|(tokens, target)| {
                let template = apply_target(tokens, &target, label_set)?;
                let tags = template
                    .iter()
                    .map(|t| {
                        if label_set.is_label(t) {
                            TokenTag::Category(t.clone())
                        } else {
                            TokenTag::Static
                        }
                    })
                    .collect();
                let (spans, aligned) = match align_with_spans(tokens, &template, label_set) {
                    Ok(a) => (
                        a.spans
                            .into_iter()
                            .map(|(j, r)| VariableSpan {
                                label: label_set.label(j).to_string(),
                                value: tokens[r.clone()].join(" "),
                                start: r.start,
                                end: r.end,
                            })
                            .collect(),
                        true,
                    ),
                    Err(_) => (Vec::new(), false),
                };
                Ok(ParseResult {
                    tokens: tokens.clone(),
                    target,
                    template,
                    tags,
                    spans,
                    aligned,
                })
            })
            .collect()
    }
}
