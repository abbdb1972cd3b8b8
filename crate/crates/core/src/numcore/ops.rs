//! Forward kernels over plain tensors. The autodiff [`Graph`](super::Graph)
//! calls into these, so eager and recorded evaluation share one code path.

use super::{NumError, Scalar, Tensor};

/// Probability floor inside the log of [`nll_loss`].
pub const NLL_EPSILON: f64 = 1e-12;

pub(crate) fn check_finite<T: Scalar>(op: &'static str, t: &Tensor<T>) -> Result<(), NumError> {
    if t.all_finite() {
        Ok(())
    } else {
        Err(NumError::NonFinite(op))
    }
}

pub fn matmul<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>, NumError> {
    let (m, k) = a.dims2();
    let (k2, n) = b.dims2();
    if k != k2 {
        return Err(NumError::ShapeMismatch(format!(
            "matmul {:?} x {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let out = if n == 1 && k > 0 {
        let col = a
            .data()
            .chunks_exact(k)
            .map(|row| dot(row, b.data()))
            .collect();
        Tensor::matrix(m, 1, col)?
    } else {
        let mut out = Tensor::zeros(&[m, n]);
        T::gemm(
            m,
            k,
            n,
            a.data(),
            k as isize,
            1,
            b.data(),
            n as isize,
            1,
            T::ZERO,
            out.data_mut(),
            n as isize,
            1,
        );
        out
    };
    check_finite("matmul", &out)?;
    Ok(out)
}

/// Dot product with eight interleaved partial sums.
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut lanes = [T::ZERO; 8];
    let (ac, bc) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: T = ac
        .remainder()
        .iter()
        .zip(bc.remainder())
        .map(|(&x, &y)| x * y)
        .sum();
    for (x, y) in ac.zip(bc) {
        for j in 0..8 {
            lanes[j] += x[j] * y[j];
        }
    }
    lanes.iter().copied().sum::<T>() + tail
}

/// `out[j] = tanh(a[j] + b[j])`.
pub fn tanh_sum_into<T: Scalar>(a: &[T], b: &[T], out: &mut [T]) {
    for ((o, &x), &y) in out.iter_mut().zip(a).zip(b) {
        *o = (x + y).tanh();
    }
}

pub fn tanh<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    x.map(T::tanh)
}

pub fn sigmoid<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    x.map(T::sigmoid)
}

/// Softmax over every row of `x`.
pub fn softmax<T: Scalar>(x: &Tensor<T>) -> Result<Tensor<T>, NumError> {
    let mask = vec![true; x.len()];
    masked_softmax(x, &mask)
}

/// Row-wise softmax where `mask[i] == false` positions get exactly zero
/// probability. Each row needs at least one live position.
pub fn masked_softmax<T: Scalar>(x: &Tensor<T>, mask: &[bool]) -> Result<Tensor<T>, NumError> {
    if mask.len() != x.len() {
        return Err(NumError::ShapeMismatch(format!(
            "mask of length {} for tensor {:?}",
            mask.len(),
            x.shape()
        )));
    }
    let (rows, cols) = x.dims2();
    let mut out = Tensor::zeros(x.shape());
    for r in 0..rows {
        let xs = x.row(r);
        let live = &mask[r * cols..(r + 1) * cols];
        let Some(max) = xs
            .iter()
            .zip(live)
            .filter(|(_, &keep)| keep)
            .map(|(&v, _)| v)
            .reduce(T::max)
        else {
            return Err(NumError::AllMasked);
        };
        let ys = out.row_mut(r);
        let mut total = T::ZERO;
        for ((y, &v), &keep) in ys.iter_mut().zip(xs).zip(live) {
            if keep {
                *y = (v - max).exp();
                total += *y;
            }
        }
        for y in ys.iter_mut() {
            *y = *y / total;
        }
    }
    check_finite("masked_softmax", &out)?;
    Ok(out)
}

/// Negative log-likelihood of a 1-based `target` under a probability vector.
pub fn nll_loss<T: Scalar>(dist: &Tensor<T>, target: usize) -> Result<T, NumError> {
    if target == 0 || target > dist.len() {
        return Err(NumError::IndexOutOfRange {
            index: target,
            len: dist.len(),
        });
    }
    let p = dist.data()[target - 1];
    let loss = -(p + T::from_f64(NLL_EPSILON)).ln();
    if !loss.is_finite() {
        return Err(NumError::NonFinite("nll_loss"));
    }
    Ok(loss)
}

/// Weights of one LSTM layer, gate order `i, f, g, o` along the `4H` axis.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmWeights<T = f32> {
    /// `E × 4H`
    pub input: Tensor<T>,
    /// `H × 4H`
    pub recurrent: Tensor<T>,
    /// `4H`
    pub bias: Tensor<T>,
}

impl<T: Scalar> LstmWeights<T> {
    pub fn hidden_size(&self) -> usize {
        self.recurrent.rows()
    }

    fn check(&self, x: &Tensor<T>, h: &Tensor<T>, c: &Tensor<T>) -> Result<(), NumError> {
        let hidden = self.hidden_size();
        let ok = self.input.cols() == 4 * hidden
            && self.recurrent.cols() == 4 * hidden
            && self.bias.len() == 4 * hidden
            && x.cols() == self.input.rows()
            && h.cols() == hidden
            && c.cols() == hidden
            && x.rows() == h.rows()
            && h.rows() == c.rows();
        if ok {
            Ok(())
        } else {
            Err(NumError::ShapeMismatch(format!(
                "lstm cell: x {:?}, h {:?}, c {:?}, W_ih {:?}, W_hh {:?}, b {:?}",
                x.shape(),
                h.shape(),
                c.shape(),
                self.input.shape(),
                self.recurrent.shape(),
                self.bias.shape()
            )))
        }
    }
}

/// One LSTM step for a batch of rows. Returns `(h', c')`.
pub fn lstm_cell<T: Scalar>(
    x: &Tensor<T>,
    h: &Tensor<T>,
    c: &Tensor<T>,
    weights: &LstmWeights<T>,
) -> Result<(Tensor<T>, Tensor<T>), NumError> {
    weights.check(x, h, c)?;
    let mut gates = matmul(x, &weights.input)?;
    gates.add_assign(&matmul(h, &weights.recurrent)?);
    add_row_in_place(&mut gates, &weights.bias);
    let out = lstm_pointwise(&gates, c);
    let hidden = weights.hidden_size();
    let rows = out.rows();
    let mut h_next = Tensor::zeros(&[rows, hidden]);
    let mut c_next = Tensor::zeros(&[rows, hidden]);
    for r in 0..rows {
        h_next.row_mut(r).copy_from_slice(&out.row(r)[..hidden]);
        c_next.row_mut(r).copy_from_slice(&out.row(r)[hidden..]);
    }
    check_finite("lstm_cell", &out)?;
    Ok((h_next, c_next))
}

pub(crate) fn add_row_in_place<T: Scalar>(x: &mut Tensor<T>, bias: &Tensor<T>) {
    let rows = x.rows();
    for r in 0..rows {
        for (v, &b) in x.row_mut(r).iter_mut().zip(bias.data()) {
            *v += b;
        }
    }
}

/// Gate activations of an LSTM step, `[B × 4H]` pre-activations in, `[B × 2H]`
/// (`h' | c'`) out.
pub(crate) fn lstm_pointwise<T: Scalar>(gates: &Tensor<T>, c: &Tensor<T>) -> Tensor<T> {
    let (rows, hidden) = c.dims2();
    let mut out = Tensor::zeros(&[rows, 2 * hidden]);
    for r in 0..rows {
        let a = gates.row(r);
        let c_prev = c.row(r);
        let o_row = out.row_mut(r);
        for j in 0..hidden {
            let i = a[j].sigmoid();
            let f = a[hidden + j].sigmoid();
            let g = a[2 * hidden + j].tanh();
            let o = a[3 * hidden + j].sigmoid();
            let c_next = f * c_prev[j] + i * g;
            o_row[j] = o * c_next.tanh();
            o_row[hidden + j] = c_next;
        }
    }
    out
}
