//! Eager reverse-mode autodiff over 2-D tensors.
//!
//! Every op evaluates immediately and records itself on the tape. Nodes that
//! do not depend on a parameter are skipped during the backward sweep.

use super::ops::{self, check_finite, NLL_EPSILON};
use super::{Gradients, NumError, ParamId, ParamStore, Scalar, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

enum Op<T> {
    Input,
    Param(ParamId),
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    Scale(Var, T),
    Tanh(Var),
    Sigmoid(Var),
    Map {
        x: Var,
        derivative: fn(T, T) -> T,
    },
    SliceCols {
        x: Var,
        start: usize,
    },
    ConcatCols(Vec<Var>),
    SliceRows {
        x: Var,
        start: usize,
    },
    ConcatRows(Vec<Var>),
    PoolRows {
        x: Var,
        groups: Vec<Vec<usize>>,
    },
    LstmPointwise {
        gates: Var,
        c: Var,
    },
    Blend {
        new: Var,
        old: Var,
        keep_new: Vec<bool>,
    },
    AddGroups {
        x: Var,
        y: Var,
        group_len: usize,
    },
    AdditiveScores {
        keys: Var,
        queries: Var,
        v: Var,
        blocks: Vec<usize>,
        /// `tanh(key + query)` for every output element, row-major.
        hidden: Vec<T>,
    },
    Reshape(Var),
    MaskedSoftmax(Var),
    Nll {
        probs: Var,
        targets: Vec<usize>,
        weights: Vec<T>,
    },
    Sum(Var),
}

struct Node<T> {
    /// `None` for parameters, whose value lives in the store.
    value: Option<Tensor<T>>,
    op: Op<T>,
    needs_grad: bool,
}

/// Operations return `Result` so non-finite values surface where they appear.
pub struct Graph<'s, T: Scalar = f32> {
    store: &'s ParamStore<T>,
    nodes: Vec<Node<T>>,
    param_vars: Vec<Option<Var>>,
}

impl<'s, T: Scalar> Graph<'s, T> {
    pub fn new(store: &'s ParamStore<T>) -> Self {
        Self {
            store,
            nodes: Vec::new(),
            param_vars: vec![None; store.len()],
        }
    }

    pub fn store(&self) -> &'s ParamStore<T> {
        self.store
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        let node = &self.nodes[v.0];
        match (&node.value, &node.op) {
            (Some(t), _) => t,
            (None, Op::Param(id)) => self.store.value(*id),
            _ => unreachable!("node without value"),
        }
    }

    fn needs_grad(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value: Some(value),
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn push_checked(
        &mut self,
        name: &'static str,
        value: Tensor<T>,
        op: Op<T>,
        needs_grad: bool,
    ) -> Result<Var, NumError> {
        check_finite(name, &value)?;
        Ok(self.push(value, op, needs_grad))
    }

    pub fn input(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Input, false)
    }

    /// Leaf bound to a stored parameter; repeated calls return the same var.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.param_vars[id.0] {
            return v;
        }
        self.nodes.push(Node {
            value: None,
            op: Op::Param(id),
            needs_grad: true,
        });
        let v = Var(self.nodes.len() - 1);
        self.param_vars[id.0] = Some(v);
        v
    }

    fn shape_err(&self, what: &str, vars: &[Var]) -> NumError {
        let shapes: Vec<_> = vars
            .iter()
            .map(|&v| self.value(v).shape().to_vec())
            .collect();
        NumError::ShapeMismatch(format!("{what}: {shapes:?}"))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        let out = ops::matmul(self.value(a), self.value(b))?;
        let ng = self.needs_grad(a) || self.needs_grad(b);
        Ok(self.push(out, Op::MatMul(a, b), ng))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape() != y.shape() {
            return Err(self.shape_err("add", &[a, b]));
        }
        let mut out = x.clone();
        out.add_assign(y);
        let ng = self.needs_grad(a) || self.needs_grad(b);
        self.push_checked("add", out, Op::Add(a, b), ng)
    }

    /// `x[r × c] + b[c]` broadcast over rows.
    pub fn add_row(&mut self, x: Var, b: Var) -> Result<Var, NumError> {
        if self.value(x).cols() != self.value(b).len() {
            return Err(self.shape_err("add_row", &[x, b]));
        }
        let mut out = self.value(x).clone();
        ops::add_row_in_place(&mut out, self.value(b));
        let ng = self.needs_grad(x) || self.needs_grad(b);
        self.push_checked("add_row", out, Op::AddRow(x, b), ng)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape() != y.shape() {
            return Err(self.shape_err("mul", &[a, b]));
        }
        let data = x
            .data()
            .iter()
            .zip(y.data())
            .map(|(&p, &q)| p * q)
            .collect();
        let out = Tensor::new(x.shape(), data)?;
        let ng = self.needs_grad(a) || self.needs_grad(b);
        self.push_checked("mul", out, Op::Mul(a, b), ng)
    }

    pub fn scale(&mut self, x: Var, s: T) -> Result<Var, NumError> {
        let out = self.value(x).map(|v| v * s);
        let ng = self.needs_grad(x);
        self.push_checked("scale", out, Op::Scale(x, s), ng)
    }

    pub fn tanh(&mut self, x: Var) -> Result<Var, NumError> {
        let out = ops::tanh(self.value(x));
        let ng = self.needs_grad(x);
        self.push_checked("tanh", out, Op::Tanh(x), ng)
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var, NumError> {
        let out = ops::sigmoid(self.value(x));
        let ng = self.needs_grad(x);
        self.push_checked("sigmoid", out, Op::Sigmoid(x), ng)
    }

    /// Elementwise map with a caller-supplied derivative `d(x, y)`, where
    /// `y = f(x)`.
    pub fn map(
        &mut self,
        x: Var,
        f: fn(T) -> T,
        derivative: fn(T, T) -> T,
    ) -> Result<Var, NumError> {
        let out = self.value(x).map(f);
        let ng = self.needs_grad(x);
        self.push_checked("map", out, Op::Map { x, derivative }, ng)
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, end: usize) -> Result<Var, NumError> {
        let src = self.value(x);
        let (rows, cols) = src.dims2();
        if start >= end || end > cols {
            return Err(NumError::ShapeMismatch(format!(
                "slice_cols {start}..{end} of {:?}",
                src.shape()
            )));
        }
        let width = end - start;
        let mut data = Vec::with_capacity(rows * width);
        for r in 0..rows {
            data.extend_from_slice(&src.row(r)[start..end]);
        }
        let out = Tensor::matrix(rows, width, data)?;
        let ng = self.needs_grad(x);
        Ok(self.push(out, Op::SliceCols { x, start }, ng))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var, NumError> {
        let rows = self.value(parts[0]).rows();
        if parts.iter().any(|&p| self.value(p).rows() != rows) {
            return Err(self.shape_err("concat_cols", parts));
        }
        let width: usize = parts.iter().map(|&p| self.value(p).cols()).sum();
        let mut data = Vec::with_capacity(rows * width);
        for r in 0..rows {
            for &p in parts {
                data.extend_from_slice(self.value(p).row(r));
            }
        }
        let out = Tensor::matrix(rows, width, data)?;
        let ng = parts.iter().any(|&p| self.needs_grad(p));
        Ok(self.push(out, Op::ConcatCols(parts.to_vec()), ng))
    }

    pub fn slice_rows(&mut self, x: Var, start: usize, end: usize) -> Result<Var, NumError> {
        let src = self.value(x);
        let (rows, cols) = src.dims2();
        if start >= end || end > rows {
            return Err(NumError::ShapeMismatch(format!(
                "slice_rows {start}..{end} of {:?}",
                src.shape()
            )));
        }
        let data = src.data()[start * cols..end * cols].to_vec();
        let out = Tensor::matrix(end - start, cols, data)?;
        let ng = self.needs_grad(x);
        Ok(self.push(out, Op::SliceRows { x, start }, ng))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var, NumError> {
        let cols = self.value(parts[0]).cols();
        if parts.iter().any(|&p| self.value(p).cols() != cols) {
            return Err(self.shape_err("concat_rows", parts));
        }
        let mut data = Vec::new();
        for &p in parts {
            data.extend_from_slice(self.value(p).data());
        }
        let rows = data.len() / cols;
        let out = Tensor::matrix(rows, cols, data)?;
        let ng = parts.iter().any(|&p| self.needs_grad(p));
        Ok(self.push(out, Op::ConcatRows(parts.to_vec()), ng))
    }

    /// Output row `i` is the mean of the rows of `x` listed in `groups[i]`.
    pub fn pool_rows(&mut self, x: Var, groups: Vec<Vec<usize>>) -> Result<Var, NumError> {
        let src = self.value(x);
        let (rows, cols) = src.dims2();
        let mut out = Tensor::zeros(&[groups.len(), cols]);
        for (i, group) in groups.iter().enumerate() {
            if group.is_empty() {
                return Err(NumError::ShapeMismatch(format!(
                    "pool_rows: empty group {i}"
                )));
            }
            let inv = T::ONE / T::from_f64(group.len() as f64);
            let dst = out.row_mut(i);
            for &r in group {
                if r >= rows {
                    return Err(NumError::IndexOutOfRange {
                        index: r,
                        len: rows,
                    });
                }
                for (d, &s) in dst.iter_mut().zip(src.row(r)) {
                    *d += s;
                }
            }
            dst.iter_mut().for_each(|d| *d *= inv);
        }
        let ng = self.needs_grad(x);
        Ok(self.push(out, Op::PoolRows { x, groups }, ng))
    }

    pub fn gather_rows(&mut self, x: Var, indices: &[usize]) -> Result<Var, NumError> {
        self.pool_rows(x, indices.iter().map(|&i| vec![i]).collect())
    }

    /// LSTM gate nonlinearities: `[B × 4H]` pre-activations and `[B × H]`
    /// cell state in, `[B × 2H]` holding `h' | c'` out.
    pub fn lstm_pointwise(&mut self, gates: Var, c: Var) -> Result<Var, NumError> {
        let (g, cv) = (self.value(gates), self.value(c));
        if g.cols() != 4 * cv.cols() || g.rows() != cv.rows() {
            return Err(self.shape_err("lstm_pointwise", &[gates, c]));
        }
        let out = ops::lstm_pointwise(g, cv);
        let ng = self.needs_grad(gates) || self.needs_grad(c);
        self.push_checked("lstm_pointwise", out, Op::LstmPointwise { gates, c }, ng)
    }

    /// Full LSTM step returning `(h', c')`.
    pub fn lstm_cell(
        &mut self,
        x: Var,
        h: Var,
        c: Var,
        w_input: Var,
        w_recurrent: Var,
        bias: Var,
    ) -> Result<(Var, Var), NumError> {
        let xi = self.matmul(x, w_input)?;
        let hr = self.matmul(h, w_recurrent)?;
        let sum = self.add(xi, hr)?;
        let gates = self.add_row(sum, bias)?;
        self.lstm_step_from_gates(gates, c)
    }

    pub fn lstm_step_from_gates(&mut self, gates: Var, c: Var) -> Result<(Var, Var), NumError> {
        let hidden = self.value(c).cols();
        let both = self.lstm_pointwise(gates, c)?;
        let h_next = self.slice_cols(both, 0, hidden)?;
        let c_next = self.slice_cols(both, hidden, 2 * hidden)?;
        Ok((h_next, c_next))
    }

    /// Row `r` of the output is `new[r]` where `keep_new[r]`, else `old[r]`.
    pub fn blend_rows(&mut self, new: Var, old: Var, keep_new: Vec<bool>) -> Result<Var, NumError> {
        let (a, b) = (self.value(new), self.value(old));
        if a.shape() != b.shape() || keep_new.len() != a.rows() {
            return Err(self.shape_err("blend_rows", &[new, old]));
        }
        let mut out = b.clone();
        for (r, &keep) in keep_new.iter().enumerate() {
            if keep {
                out.row_mut(r).copy_from_slice(a.row(r));
            }
        }
        let ng = self.needs_grad(new) || self.needs_grad(old);
        Ok(self.push(out, Op::Blend { new, old, keep_new }, ng))
    }

    /// Adds row `g` of `y` to rows `g·len .. (g+1)·len` of `x`.
    pub fn add_groups(&mut self, x: Var, y: Var, group_len: usize) -> Result<Var, NumError> {
        let (xv, yv) = (self.value(x), self.value(y));
        if xv.cols() != yv.cols() || xv.rows() != yv.rows() * group_len {
            return Err(self.shape_err("add_groups", &[x, y]));
        }
        let mut out = xv.clone();
        for r in 0..xv.rows() {
            let add = yv.row(r / group_len);
            for (o, &v) in out.row_mut(r).iter_mut().zip(add) {
                *o += v;
            }
        }
        let ng = self.needs_grad(x) || self.needs_grad(y);
        self.push_checked("add_groups", out, Op::AddGroups { x, y, group_len }, ng)
    }

    /// Additive attention scores. Query `q` is scored against the keys of
    /// block `blocks[q]` (rows `blocks[q]·len ..` of `keys`, `len` = block
    /// length): `out[q, i] = v · tanh(keys[blocks[q]·len + i] + queries[q])`.
    pub fn additive_scores(
        &mut self,
        keys: Var,
        queries: Var,
        v: Var,
        blocks: Vec<usize>,
        block_len: usize,
    ) -> Result<Var, NumError> {
        let (kv, qv, vv) = (self.value(keys), self.value(queries), self.value(v));
        let a = kv.cols();
        let num_blocks = kv.rows().checked_div(block_len).unwrap_or(0);
        if qv.cols() != a
            || vv.len() != a
            || blocks.len() != qv.rows()
            || kv.rows() != num_blocks * block_len
            || blocks.iter().any(|&b| b >= num_blocks)
        {
            return Err(self.shape_err("additive_scores", &[keys, queries, v]));
        }
        let vd = vv.data();
        let mut hidden = vec![T::ZERO; blocks.len() * block_len * a];
        let mut out = Vec::with_capacity(blocks.len() * block_len);
        for (q, &b) in blocks.iter().enumerate() {
            let query = qv.row(q);
            for i in 0..block_len {
                let r = q * block_len + i;
                let hrow = &mut hidden[r * a..(r + 1) * a];
                ops::tanh_sum_into(kv.row(b * block_len + i), query, hrow);
                let acc = ops::dot(hrow, vd);
                out.push(acc);
            }
        }
        let out = Tensor::matrix(blocks.len(), block_len, out)?;
        let ng = self.needs_grad(keys) || self.needs_grad(queries) || self.needs_grad(v);
        let op = Op::AdditiveScores {
            keys,
            queries,
            v,
            blocks,
            hidden,
        };
        self.push_checked("additive_scores", out, op, ng)
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var, NumError> {
        let out = self.value(x).clone().reshaped(shape)?;
        let ng = self.needs_grad(x);
        Ok(self.push(out, Op::Reshape(x), ng))
    }

    pub fn softmax(&mut self, x: Var) -> Result<Var, NumError> {
        let mask = vec![true; self.value(x).len()];
        self.masked_softmax(x, &mask)
    }

    /// Row-wise softmax; `mask` has one entry per element of `x`.
    pub fn masked_softmax(&mut self, x: Var, mask: &[bool]) -> Result<Var, NumError> {
        let out = ops::masked_softmax(self.value(x), mask)?;
        let ng = self.needs_grad(x);
        Ok(self.push(out, Op::MaskedSoftmax(x), ng))
    }

    /// `Σ_r weights[r] · −ln(probs[r, targets[r]] + ε)` with 0-based targets.
    pub fn nll(
        &mut self,
        probs: Var,
        targets: Vec<usize>,
        weights: Vec<T>,
    ) -> Result<Var, NumError> {
        let p = self.value(probs);
        let (rows, cols) = p.dims2();
        if targets.len() != rows || weights.len() != rows {
            return Err(NumError::ShapeMismatch(format!(
                "nll: {rows} rows, {} targets, {} weights",
                targets.len(),
                weights.len()
            )));
        }
        let eps = T::from_f64(NLL_EPSILON);
        let mut total = T::ZERO;
        for (r, (&t, &w)) in targets.iter().zip(&weights).enumerate() {
            if t >= cols {
                return Err(NumError::IndexOutOfRange {
                    index: t,
                    len: cols,
                });
            }
            if w != T::ZERO {
                total += w * -(p.row(r)[t] + eps).ln();
            }
        }
        let ng = self.needs_grad(probs);
        self.push_checked(
            "nll",
            Tensor::scalar(total),
            Op::Nll {
                probs,
                targets,
                weights,
            },
            ng,
        )
    }

    pub fn sum(&mut self, x: Var) -> Result<Var, NumError> {
        let out = Tensor::scalar(self.value(x).sum());
        let ng = self.needs_grad(x);
        self.push_checked("sum", out, Op::Sum(x), ng)
    }

    pub fn sum_all(&mut self, parts: &[Var]) -> Result<Var, NumError> {
        let mut acc = parts[0];
        for &p in &parts[1..] {
            acc = self.add(acc, p)?;
        }
        Ok(acc)
    }

    /// Reverse sweep from a scalar output. Returns gradients for every
    /// parameter reached.
    pub fn backward(&self, output: Var) -> Result<Gradients<T>, NumError> {
        if self.value(output).len() != 1 {
            return Err(NumError::ShapeMismatch(format!(
                "backward from non-scalar {:?}",
                self.value(output).shape()
            )));
        }
        let mut grads: Vec<Option<Tensor<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[output.0] = Some(Tensor::filled(self.value(output).shape(), T::ONE));
        let mut param_grads: Vec<Option<Tensor<T>>> = (0..self.store.len()).map(|_| None).collect();
        let mut transposed: Vec<Option<Tensor<T>>> = (0..self.store.len()).map(|_| None).collect();

        for i in (0..=output.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            let out = Var(i);
            self.backward_node(out, &node.op, &g, &mut grads, &mut transposed);
            if let Op::Param(id) = node.op {
                param_grads[id.0] = Some(g);
            }
        }
        for g in param_grads.iter().flatten() {
            check_finite("backward", g)?;
        }
        Ok(Gradients { grads: param_grads })
    }

    fn backward_node(
        &self,
        out: Var,
        op: &Op<T>,
        g: &Tensor<T>,
        grads: &mut [Option<Tensor<T>>],
        transposed: &mut [Option<Tensor<T>>],
    ) {
        match op {
            Op::Input | Op::Param(_) => {}
            Op::MatMul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let (m, k) = av.dims2();
                let n = bv.cols();
                if n == 1 {
                    // Matrix-vector product: plain loops beat a packed gemm.
                    let bd = bv.data();
                    if let Some(da) = self.grad_buf(grads, *a) {
                        for (row, &gi) in da.data_mut().chunks_exact_mut(k).zip(g.data()) {
                            for (d, &w) in row.iter_mut().zip(bd) {
                                *d += gi * w;
                            }
                        }
                    }
                    if let Some(db) = self.grad_buf(grads, *b) {
                        let dbd = db.data_mut();
                        for (row, &gi) in av.data().chunks_exact(k).zip(g.data()) {
                            for (d, &x) in dbd.iter_mut().zip(row) {
                                *d += gi * x;
                            }
                        }
                    }
                    return;
                }
                if let Some(da) = self.grad_buf(grads, *a) {
                    // dA += dC · Bᵀ, against a contiguous Bᵀ when B is a
                    // parameter reused across many products.
                    match &self.nodes[b.0].op {
                        Op::Param(id) => {
                            let bt = transposed[id.0].get_or_insert_with(|| bv.transpose());
                            T::gemm(
                                m,
                                n,
                                k,
                                g.data(),
                                n as isize,
                                1,
                                bt.data(),
                                k as isize,
                                1,
                                T::ONE,
                                da.data_mut(),
                                k as isize,
                                1,
                            );
                        }
                        _ => T::gemm(
                            m,
                            n,
                            k,
                            g.data(),
                            n as isize,
                            1,
                            bv.data(),
                            1,
                            n as isize,
                            T::ONE,
                            da.data_mut(),
                            k as isize,
                            1,
                        ),
                    }
                }
                if let Some(db) = self.grad_buf(grads, *b) {
                    // dB += Aᵀ · dC
                    T::gemm(
                        k,
                        m,
                        n,
                        av.data(),
                        1,
                        k as isize,
                        g.data(),
                        n as isize,
                        1,
                        T::ONE,
                        db.data_mut(),
                        n as isize,
                        1,
                    );
                }
            }
            Op::Add(a, b) => {
                for v in [*a, *b] {
                    if let Some(d) = self.grad_buf(grads, v) {
                        d.add_assign(g);
                    }
                }
            }
            Op::AddRow(x, b) => {
                if let Some(dx) = self.grad_buf(grads, *x) {
                    dx.add_assign(g);
                }
                if let Some(db) = self.grad_buf(grads, *b) {
                    let dbd = db.data_mut();
                    for r in 0..g.rows() {
                        for (d, &v) in dbd.iter_mut().zip(g.row(r)) {
                            *d += v;
                        }
                    }
                }
            }
            Op::Mul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                if let Some(da) = self.grad_buf(grads, *a) {
                    for ((d, &gv), &bv) in da.data_mut().iter_mut().zip(g.data()).zip(bv.data()) {
                        *d += gv * bv;
                    }
                }
                if let Some(db) = self.grad_buf(grads, *b) {
                    for ((d, &gv), &av) in db.data_mut().iter_mut().zip(g.data()).zip(av.data()) {
                        *d += gv * av;
                    }
                }
            }
            Op::Scale(x, s) => {
                if let Some(dx) = self.grad_buf(grads, *x) {
                    for (d, &gv) in dx.data_mut().iter_mut().zip(g.data()) {
                        *d += gv * *s;
                    }
                }
            }
            Op::Tanh(x) => {
                let y = self.value(out);
                if let Some(dx) = self.grad_buf(grads, *x) {
                    for ((d, &gv), &yv) in dx.data_mut().iter_mut().zip(g.data()).zip(y.data()) {
                        *d += gv * (T::ONE - yv * yv);
                    }
                }
            }
            Op::Sigmoid(x) => {
                let y = self.value(out);
                if let Some(dx) = self.grad_buf(grads, *x) {
                    for ((d, &gv), &yv) in dx.data_mut().iter_mut().zip(g.data()).zip(y.data()) {
                        *d += gv * yv * (T::ONE - yv);
                    }
                }
            }
            Op::Map { x, derivative } => {
                let (xv, y) = (self.value(*x), self.value(out));
                if let Some(dx) = self.grad_buf(grads, *x) {
                    for (((d, &gv), &xi), &yi) in dx
                        .data_mut()
                        .iter_mut()
                        .zip(g.data())
                        .zip(xv.data())
                        .zip(y.data())
                    {
                        *d += gv * derivative(xi, yi);
                    }
                }
            }
            Op::SliceCols { x, start } => {
                if let Some(dx) = self.grad_buf(grads, *x) {
                    let width = g.cols();
                    for r in 0..g.rows() {
                        let dst = &mut dx.row_mut(r)[*start..*start + width];
                        for (d, &v) in dst.iter_mut().zip(g.row(r)) {
                            *d += v;
                        }
                    }
                }
            }
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let width = self.value(p).cols();
                    if let Some(dp) = self.grad_buf(grads, p) {
                        for r in 0..g.rows() {
                            let src = &g.row(r)[offset..offset + width];
                            for (d, &v) in dp.row_mut(r).iter_mut().zip(src) {
                                *d += v;
                            }
                        }
                    }
                    offset += width;
                }
            }
            Op::SliceRows { x, start } => {
                if let Some(dx) = self.grad_buf(grads, *x) {
                    let cols = g.cols();
                    let dst = &mut dx.data_mut()[start * cols..start * cols + g.len()];
                    for (d, &v) in dst.iter_mut().zip(g.data()) {
                        *d += v;
                    }
                }
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let len = self.value(p).len();
                    if let Some(dp) = self.grad_buf(grads, p) {
                        for (d, &v) in dp
                            .data_mut()
                            .iter_mut()
                            .zip(&g.data()[offset..offset + len])
                        {
                            *d += v;
                        }
                    }
                    offset += len;
                }
            }
            Op::PoolRows { x, groups } => {
                if let Some(dx) = self.grad_buf(grads, *x) {
                    for (i, group) in groups.iter().enumerate() {
                        let inv = T::ONE / T::from_f64(group.len() as f64);
                        for &r in group {
                            for (d, &v) in dx.row_mut(r).iter_mut().zip(g.row(i)) {
                                *d += v * inv;
                            }
                        }
                    }
                }
            }
            Op::LstmPointwise { gates, c } => {
                self.lstm_pointwise_backward(out, *gates, *c, g, grads);
            }
            Op::Blend { new, old, keep_new } => {
                if let Some(dn) = self.grad_buf(grads, *new) {
                    for (r, _) in keep_new.iter().enumerate().filter(|(_, &k)| k) {
                        for (d, &v) in dn.row_mut(r).iter_mut().zip(g.row(r)) {
                            *d += v;
                        }
                    }
                }
                if let Some(do_) = self.grad_buf(grads, *old) {
                    for (r, _) in keep_new.iter().enumerate().filter(|(_, &k)| !k) {
                        for (d, &v) in do_.row_mut(r).iter_mut().zip(g.row(r)) {
                            *d += v;
                        }
                    }
                }
            }
            Op::AddGroups { x, y, group_len } => {
                if let Some(dx) = self.grad_buf(grads, *x) {
                    dx.add_assign(g);
                }
                if let Some(dy) = self.grad_buf(grads, *y) {
                    for r in 0..g.rows() {
                        for (d, &v) in dy.row_mut(r / group_len).iter_mut().zip(g.row(r)) {
                            *d += v;
                        }
                    }
                }
            }
            Op::AdditiveScores {
                keys,
                queries,
                v,
                blocks,
                hidden,
            } => {
                let a = self.value(*keys).cols();
                let block_len = g.cols();
                let vd = self.value(*v).data();
                let mut dkeys = vec![T::ZERO; self.value(*keys).len()];
                let mut dqueries = vec![T::ZERO; self.value(*queries).len()];
                let mut dv = vec![T::ZERO; a];
                let mut pre = vec![T::ZERO; a];
                for (q, &b) in blocks.iter().enumerate() {
                    let dq = &mut dqueries[q * a..(q + 1) * a];
                    for i in 0..block_len {
                        let r = q * block_len + i;
                        let gu = g.data()[r];
                        if gu == T::ZERO {
                            continue;
                        }
                        let hrow = &hidden[r * a..(r + 1) * a];
                        for (((p, d), &h), &w) in
                            pre.iter_mut().zip(dv.iter_mut()).zip(hrow).zip(vd)
                        {
                            *d += gu * h;
                            *p = gu * w * (T::ONE - h * h);
                        }
                        let k = b * block_len + i;
                        for ((dk, dqq), &p) in dkeys[k * a..(k + 1) * a]
                            .iter_mut()
                            .zip(dq.iter_mut())
                            .zip(&pre)
                        {
                            *dk += p;
                            *dqq += p;
                        }
                    }
                }
                for (var, upd) in [(*keys, dkeys), (*queries, dqueries), (*v, dv)] {
                    if let Some(d) = self.grad_buf(grads, var) {
                        for (x, u) in d.data_mut().iter_mut().zip(upd) {
                            *x += u;
                        }
                    }
                }
            }
            Op::Reshape(x) => {
                if let Some(dx) = self.grad_buf(grads, *x) {
                    for (d, &v) in dx.data_mut().iter_mut().zip(g.data()) {
                        *d += v;
                    }
                }
            }
            Op::MaskedSoftmax(x) => {
                let y = self.value(out);
                if let Some(dx) = self.grad_buf(grads, *x) {
                    for r in 0..y.rows() {
                        let (yr, gr) = (y.row(r), g.row(r));
                        let dot: T = yr.iter().zip(gr).map(|(&a, &b)| a * b).sum();
                        for ((d, &yv), &gv) in dx.row_mut(r).iter_mut().zip(yr).zip(gr) {
                            *d += yv * (gv - dot);
                        }
                    }
                }
            }
            Op::Nll {
                probs,
                targets,
                weights,
            } => {
                let p = self.value(*probs);
                let eps = T::from_f64(NLL_EPSILON);
                let upstream = g.data()[0];
                if let Some(dp) = self.grad_buf(grads, *probs) {
                    for (r, (&t, &w)) in targets.iter().zip(weights).enumerate() {
                        if w != T::ZERO {
                            dp.row_mut(r)[t] += -upstream * w / (p.row(r)[t] + eps);
                        }
                    }
                }
            }
            Op::Sum(x) => {
                let upstream = g.data()[0];
                if let Some(dx) = self.grad_buf(grads, *x) {
                    dx.data_mut().iter_mut().for_each(|d| *d += upstream);
                }
            }
        }
    }

    fn lstm_pointwise_backward(
        &self,
        out: Var,
        gates: Var,
        c: Var,
        g: &Tensor<T>,
        grads: &mut [Option<Tensor<T>>],
    ) {
        let a = self.value(gates);
        let c_prev = self.value(c);
        let y = self.value(out);
        let (rows, hidden) = c_prev.dims2();
        let mut d_gates = Tensor::zeros(a.shape());
        let mut d_c = Tensor::zeros(c_prev.shape());
        for r in 0..rows {
            let (ar, cr, yr, gr) = (a.row(r), c_prev.row(r), y.row(r), g.row(r));
            let dgr = d_gates.row_mut(r);
            let dcr = d_c.row_mut(r);
            for j in 0..hidden {
                let i = ar[j].sigmoid();
                let f = ar[hidden + j].sigmoid();
                let gg = ar[2 * hidden + j].tanh();
                let o = ar[3 * hidden + j].sigmoid();
                let tc = yr[hidden + j].tanh();
                let dh = gr[j];
                let dc_next = gr[hidden + j] + dh * o * (T::ONE - tc * tc);
                dgr[j] = dc_next * gg * i * (T::ONE - i);
                dgr[hidden + j] = dc_next * cr[j] * f * (T::ONE - f);
                dgr[2 * hidden + j] = dc_next * i * (T::ONE - gg * gg);
                dgr[3 * hidden + j] = dh * tc * o * (T::ONE - o);
                dcr[j] = dc_next * f;
            }
        }
        if let Some(dg) = self.grad_buf(grads, gates) {
            dg.add_assign(&d_gates);
        }
        if let Some(dc) = self.grad_buf(grads, c) {
            dc.add_assign(&d_c);
        }
    }

    /// Lazily allocated gradient accumulator for `v`, or `None` when `v`
    /// does not lead to any parameter.
    fn grad_buf<'g>(
        &self,
        grads: &'g mut [Option<Tensor<T>>],
        v: Var,
    ) -> Option<&'g mut Tensor<T>> {
        if !self.needs_grad(v) {
            return None;
        }
        let shape = self.value(v).shape();
        Some(grads[v.0].get_or_insert_with(|| Tensor::zeros(shape)))
    }
}
