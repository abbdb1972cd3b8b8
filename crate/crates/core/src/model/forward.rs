//! Batched forward pass recorded on the autodiff tape.
//!
//! Sequences are laid out time-major (`row = t·B + b`) and padded to the
//! longest one in the batch. Padding never reaches a real example: LSTM
//! states are frozen outside each sequence, attention masks padded
//! positions, and padded decoder steps carry zero loss weight.

use rand::{Rng, RngExt};

use super::{LstmIds, ModelError, ModelInput, PointerModel};
use crate::ingest::PointerTarget;
use crate::numcore::{Graph, NumError, Scalar, Tensor, Var};

pub(crate) struct EncoderVars {
    /// Time-major input embeddings plus one trailing BOS row.
    pub x_ext: Var,
    /// `[lmax·B × 2H]` time-major encoder states.
    pub states: Var,
    /// `W1·e`, batch-major: row `b·lmax + i`.
    pub projected: Var,
    pub h0: Var,
    pub c0: Var,
    pub lens: Vec<usize>,
    pub lmax: usize,
}

impl EncoderVars {
    pub fn bos_row(&self) -> usize {
        self.lmax * self.lens.len()
    }

    /// Row of `x_ext` holding 1-based position `p` of example `b`; 0 is BOS.
    pub fn feedback_row(&self, p: usize, b: usize) -> usize {
        if p == 0 {
            self.bos_row()
        } else {
            (p - 1) * self.lens.len() + b
        }
    }
}

impl<T: Scalar> PointerModel<T> {
    fn dropout<R: Rng + ?Sized>(
        &self,
        g: &mut Graph<T>,
        x: Var,
        rng: Option<&mut R>,
    ) -> Result<Var, NumError> {
        let p = self.config.dropout;
        let Some(rng) = rng.filter(|_| p > 0.0) else {
            return Ok(x);
        };
        let scale = T::from_f64(1.0 / (1.0 - p));
        let shape = g.value(x).shape().to_vec();
        let n: usize = shape.iter().product();
        let mask: Vec<T> = (0..n)
            .map(|_| {
                if rng.random::<f64>() < p {
                    T::ZERO
                } else {
                    scale
                }
            })
            .collect();
        let mask = g.input(Tensor::new(&shape, mask)?);
        g.mul(x, mask)
    }

    /// Embeds the batch: labels and EOS from the label table, words as the
    /// mean of their subword rows, zero rows for padding, BOS appended.
    pub(crate) fn embed_batch<R: Rng + ?Sized>(
        &self,
        g: &mut Graph<T>,
        inputs: &[&ModelInput],
        rng: Option<&mut R>,
    ) -> Result<(Var, Vec<usize>, usize), ModelError> {
        let m = self.config.num_labels;
        let e = self.config.embedding_dim;
        let batch = inputs.len();
        if batch == 0 || inputs.iter().any(|x| x.num_words() == 0) {
            return Err(NumError::ShapeMismatch("empty batch or message".into()).into());
        }
        let lens: Vec<usize> = inputs.iter().map(|x| self.input_len(x)).collect();
        let lmax = *lens.iter().max().expect("non-empty batch");

        let groups: Vec<Vec<usize>> = inputs
            .iter()
            .flat_map(|x| x.word_pieces.iter().cloned())
            .collect();
        let sub = g.param(self.ids.subword_embedding);
        let words = g.pool_rows(sub, groups)?;
        let labels = g.param(self.ids.label_embedding);
        let zero = g.input(Tensor::zeros(&[1, e]));
        let table = g.concat_rows(&[labels, words, zero])?;
        let word_base = m + 2;
        let zero_row = word_base + g.value(words).rows();

        let mut offsets = Vec::with_capacity(batch);
        let mut acc = 0;
        for x in inputs {
            offsets.push(acc);
            acc += x.num_words();
        }
        let mut index = Vec::with_capacity(lmax * batch + 1);
        for t in 0..lmax {
            for (b, x) in inputs.iter().enumerate() {
                let n = x.num_words();
                index.push(if t < m {
                    t
                } else if t < m + n {
                    word_base + offsets[b] + t - m
                } else if t == m + n {
                    m
                } else {
                    zero_row
                });
            }
        }
        index.push(m + 1);
        let x_ext = g.gather_rows(table, &index)?;
        let x_ext = self.dropout(g, x_ext, rng)?;
        Ok((x_ext, lens, lmax))
    }

    /// One LSTM direction over the padded batch. Rows outside their sequence
    /// keep their previous state, so the forward direction ends on each
    /// sequence's last element and the backward one starts from zero at it.
    pub(crate) fn run_lstm(
        &self,
        g: &mut Graph<T>,
        x: Var,
        lstm: LstmIds,
        lens: &[usize],
        lmax: usize,
        reverse: bool,
    ) -> Result<(Vec<Var>, Var, Var), ModelError> {
        let batch = lens.len();
        let h_dim = self.config.hidden_dim;
        let w_in = g.param(lstm.input);
        let w_rec = g.param(lstm.recurrent);
        let bias = g.param(lstm.bias);
        let xw = g.matmul(x, w_in)?;
        let xw = g.add_row(xw, bias)?;
        let mut h = g.input(Tensor::zeros(&[batch, h_dim]));
        let mut c = g.input(Tensor::zeros(&[batch, h_dim]));
        let mut outs = vec![h; lmax];
        for step in 0..lmax {
            let t = if reverse { lmax - 1 - step } else { step };
            let xt = g.slice_rows(xw, t * batch, (t + 1) * batch)?;
            let hr = g.matmul(h, w_rec)?;
            let gates = g.add(xt, hr)?;
            let (h_new, c_new) = g.lstm_step_from_gates(gates, c)?;
            let keep: Vec<bool> = lens.iter().map(|&l| t < l).collect();
            if keep.iter().all(|&k| k) {
                h = h_new;
                c = c_new;
            } else {
                h = g.blend_rows(h_new, h, keep.clone())?;
                c = g.blend_rows(c_new, c, keep)?;
            }
            outs[t] = h;
        }
        Ok((outs, h, c))
    }

    pub(crate) fn encode_batch<R: Rng + ?Sized>(
        &self,
        g: &mut Graph<T>,
        inputs: &[&ModelInput],
        mut rng: Option<&mut R>,
    ) -> Result<EncoderVars, ModelError> {
        let batch = inputs.len();
        let (x_ext, lens, lmax) = self.embed_batch(g, inputs, rng.as_deref_mut())?;
        let x = g.slice_rows(x_ext, 0, lmax * batch)?;
        let (fwd, hf, cf) = self.run_lstm(g, x, self.ids.encoder_fwd, &lens, lmax, false)?;
        let (bwd, hb, cb) = self.run_lstm(g, x, self.ids.encoder_bwd, &lens, lmax, true)?;

        let per_step: Vec<Var> = fwd
            .iter()
            .zip(&bwd)
            .map(|(&f, &b)| g.concat_cols(&[f, b]))
            .collect::<Result<_, _>>()?;
        let states = g.concat_rows(&per_step)?;
        let dropped = self.dropout(g, states, rng)?;
        let w1 = g.param(self.ids.w1);
        let projected = g.matmul(dropped, w1)?;
        let batch_major: Vec<usize> = (0..batch)
            .flat_map(|b| (0..lmax).map(move |i| i * batch + b))
            .collect();
        let projected = g.gather_rows(projected, &batch_major)?;

        let bridge = |g: &mut Graph<T>, f: Var, b: Var, (w, bias)| -> Result<Var, NumError> {
            let both = g.concat_cols(&[f, b])?;
            let w = g.param(w);
            let bias = g.param(bias);
            let z = g.matmul(both, w)?;
            let z = g.add_row(z, bias)?;
            g.tanh(z)
        };
        let h0 = bridge(g, hf, hb, self.ids.bridge_h)?;
        let c0 = bridge(g, cf, cb, self.ids.bridge_c)?;
        Ok(EncoderVars {
            x_ext,
            states,
            projected,
            h0,
            c0,
            lens,
            lmax,
        })
    }

    /// Mean over the batch of each example's summed negative log-likelihood
    /// under teacher forcing. Dropout is active iff `rng` is given.
    pub fn batch_loss<R: Rng + ?Sized>(
        &self,
        g: &mut Graph<T>,
        inputs: &[&ModelInput],
        targets: &[&PointerTarget],
        mut rng: Option<&mut R>,
    ) -> Result<Var, ModelError> {
        if inputs.len() != targets.len() {
            return Err(NumError::ShapeMismatch(format!(
                "{} inputs, {} targets",
                inputs.len(),
                targets.len()
            ))
            .into());
        }
        let batch = inputs.len();
        let enc = self.encode_batch(g, inputs, rng.as_deref_mut())?;
        let lmax = enc.lmax;
        for (b, t) in targets.iter().enumerate() {
            if t.indices().iter().any(|&i| i == 0 || i > enc.lens[b])
                || t.indices().last() != Some(&enc.lens[b])
            {
                return Err(ModelError::Num(NumError::IndexOutOfRange {
                    index: *t.indices().iter().max().unwrap_or(&0),
                    len: enc.lens[b],
                }));
            }
        }
        let kmax = targets.iter().map(|t| t.len()).max().unwrap_or(0);

        let mut feed = Vec::with_capacity(kmax * batch);
        for t in 0..kmax {
            for (b, target) in targets.iter().enumerate() {
                let prev = if t == 0 || t >= target.len() {
                    0
                } else {
                    target.indices()[t - 1]
                };
                feed.push(enc.feedback_row(prev, b));
            }
        }
        let dec = self.ids.decoder;
        let din = g.gather_rows(enc.x_ext, &feed)?;
        let w_in = g.param(dec.input);
        let w_rec = g.param(dec.recurrent);
        let bias = g.param(dec.bias);
        let dw = g.matmul(din, w_in)?;
        let dw = g.add_row(dw, bias)?;
        let (mut h, mut c) = (enc.h0, enc.c0);
        let mut hs = Vec::with_capacity(kmax);
        for t in 0..kmax {
            let xt = g.slice_rows(dw, t * batch, (t + 1) * batch)?;
            let hr = g.matmul(h, w_rec)?;
            let gates = g.add(xt, hr)?;
            (h, c) = g.lstm_step_from_gates(gates, c)?;
            hs.push(h);
        }
        let d = g.concat_rows(&hs)?;
        let d = self.dropout(g, d, rng)?;
        let w2 = g.param(self.ids.w2);
        let w2d = g.matmul(d, w2)?;

        // Step t of example b is scored against example b's positions.
        let v = g.param(self.ids.v);
        let blocks = (0..kmax * batch).map(|tb| tb % batch).collect();
        let u = g.additive_scores(enc.projected, w2d, v, blocks, lmax)?;
        let mask: Vec<bool> = (0..kmax * batch)
            .flat_map(|tb| {
                let len = enc.lens[tb % batch];
                (0..lmax).map(move |i| i < len)
            })
            .collect();
        let probs = g.masked_softmax(u, &mask)?;

        let mut gold = Vec::with_capacity(kmax * batch);
        let mut weights = Vec::with_capacity(kmax * batch);
        for t in 0..kmax {
            for target in targets {
                match target.indices().get(t) {
                    Some(&i) => {
                        gold.push(i - 1);
                        weights.push(T::ONE);
                    }
                    None => {
                        gold.push(0);
                        weights.push(T::ZERO);
                    }
                }
            }
        }
        let total = g.nll(probs, gold, weights)?;
        Ok(g.scale(total, T::ONE / T::from_f64(batch as f64))?)
    }
}
