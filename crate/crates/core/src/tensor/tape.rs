//! Reverse-mode tape.
//!
//! Each operation appends a node holding its forward value and whatever the
//! backward pass needs. [`Tape::backward`] walks the nodes in reverse and
//! returns gradients for every node that depends on a parameter or a
//! differentiable input. Parameter values are borrowed from the
//! [`ParamStore`], never copied.

use alloc::vec;
use alloc::vec::Vec;

use super::kernels::{self, axpy};
use super::{mismatch, ParamGrads, ParamId, ParamStore, Tensor, TensorError};
use crate::math;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

enum Value {
    Owned(Tensor),
    Param(ParamId),
}

enum Op {
    Leaf,
    MatMul { a: Var, b: Var },
    Dense { x: Var, w: Var, b: Var },
    Add(Var, Var),
    Mul(Var, Var),
    Scale(Var, f32),
    Relu(Var),
    Tanh(Var),
    Sigmoid(Var),
    Exp(Var),
    Clamp(Var, f32, f32),
    Sum(Var),
    Concat(Vec<Var>),
    Stack(Vec<Var>),
    Slice { x: Var, start: usize },
    Embedding { table: Var, idx: Vec<usize> },
    Conv { x: Var, banks: Vec<(Var, Var, usize)>, arg: Vec<usize> },
    Lstm { x: Var, h: Var, c: Var, w: Var, b: Var, gates: Vec<f32>, tanh_c: Vec<f32> },
    SoftmaxCe { logits: Var, targets: Vec<usize>, probs: Vec<f32> },
    Kl { mu: Var, log_sigma: Var },
}

struct Node {
    value: Value,
    op: Op,
    needs_grad: bool,
}

pub struct Tape<'p> {
    store: Option<&'p ParamStore>,
    nodes: Vec<Node>,
    param_vars: Vec<Option<Var>>,
}

impl Default for Tape<'_> {
    fn default() -> Self {
        Tape::new()
    }
}

impl<'p> Tape<'p> {
    /// A tape with no parameter store; leaves come from [`Tape::input`].
    pub fn new() -> Tape<'p> {
        Tape { store: None, nodes: Vec::new(), param_vars: Vec::new() }
    }

    pub fn with_params(store: &'p ParamStore) -> Tape<'p> {
        Tape { store: Some(store), nodes: Vec::with_capacity(256), param_vars: vec![None; store.len()] }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        match &self.nodes[v.0].value {
            Value::Owned(t) => t,
            Value::Param(id) => self.store.expect("parameter leaf without a store").value(*id),
        }
    }

    fn data(&self, v: Var) -> &[f32] {
        self.value(v).data()
    }

    fn push(&mut self, t: Tensor, op: Op, parents: &[Var]) -> Var {
        let needs_grad = parents.iter().any(|p| self.nodes[p.0].needs_grad);
        #[cfg(debug_assertions)]
        if parents.iter().all(|&p| self.value(p).is_finite()) {
            debug_assert!(t.is_finite(), "non-finite output from finite inputs");
        }
        self.nodes.push(Node { value: Value::Owned(t), op, needs_grad });
        Var(self.nodes.len() - 1)
    }

    /// Leaf for a parameter; repeated calls return the same node.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.param_vars[id.0] {
            return v;
        }
        self.nodes.push(Node { value: Value::Param(id), op: Op::Leaf, needs_grad: true });
        let v = Var(self.nodes.len() - 1);
        self.param_vars[id.0] = Some(v);
        v
    }

    /// Differentiable leaf; its gradient is available from [`Gradients::wrt`].
    pub fn input(&mut self, t: Tensor) -> Var {
        self.nodes.push(Node { value: Value::Owned(t), op: Op::Leaf, needs_grad: true });
        Var(self.nodes.len() - 1)
    }

    /// Leaf that receives no gradient.
    pub fn constant(&mut self, t: Tensor) -> Var {
        self.nodes.push(Node { value: Value::Owned(t), op: Op::Leaf, needs_grad: false });
        Var(self.nodes.len() - 1)
    }

    /// `a[m×k] · b[k×n]`. A vector `a` is treated as one row and the result
    /// stays a vector.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (ta, tb) = (self.value(a), self.value(b));
        let (m, k) = ta.as_matrix();
        if tb.shape().len() != 2 || tb.shape()[0] != k {
            return Err(mismatch("matmul", alloc::format!("{:?} x {:?}", ta.shape(), tb.shape())));
        }
        let n = tb.shape()[1];
        let mut out = vec![0.0; m * n];
        kernels::matmul_acc(ta.data(), tb.data(), &mut out, m, k, n);
        let shape: Vec<usize> = if ta.shape().len() == 1 { vec![n] } else { vec![m, n] };
        Ok(self.push(Tensor::new(&shape, out)?, Op::MatMul { a, b }, &[a, b]))
    }

    /// `x · w + b` with the bias added to every row.
    pub fn dense(&mut self, x: Var, w: Var, b: Var) -> Result<Var, TensorError> {
        let (tx, tw, tb) = (self.value(x), self.value(w), self.value(b));
        let (m, k) = tx.as_matrix();
        if tw.shape().len() != 2 || tw.shape()[0] != k || tb.len() != tw.shape()[1] {
            return Err(mismatch("dense", alloc::format!("{:?} x {:?} + {:?}", tx.shape(), tw.shape(), tb.shape())));
        }
        let n = tb.len();
        let mut out = Vec::with_capacity(m * n);
        for _ in 0..m {
            out.extend_from_slice(tb.data());
        }
        kernels::matmul_acc(tx.data(), tw.data(), &mut out, m, k, n);
        let shape: Vec<usize> = if tx.shape().len() == 1 { vec![n] } else { vec![m, n] };
        Ok(self.push(Tensor::new(&shape, out)?, Op::Dense { x, w, b }, &[x, w, b]))
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<(), TensorError> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(mismatch(op, alloc::format!("{:?} vs {:?}", self.value(a).shape(), self.value(b).shape())));
        }
        Ok(())
    }

    fn map(&mut self, a: Var, op: Op, f: impl Fn(f32) -> f32) -> Var {
        let t = self.value(a);
        let out = Tensor::new(t.shape(), t.data().iter().map(|&v| f(v)).collect()).expect("same shape");
        self.push(out, op, &[a])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.same_shape("add", a, b)?;
        let d: Vec<f32> = self.data(a).iter().zip(self.data(b)).map(|(x, y)| x + y).collect();
        let t = Tensor::new(self.value(a).shape(), d)?;
        Ok(self.push(t, Op::Add(a, b), &[a, b]))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.same_shape("mul", a, b)?;
        let d: Vec<f32> = self.data(a).iter().zip(self.data(b)).map(|(x, y)| x * y).collect();
        let t = Tensor::new(self.value(a).shape(), d)?;
        Ok(self.push(t, Op::Mul(a, b), &[a, b]))
    }

    pub fn scale(&mut self, a: Var, c: f32) -> Var {
        self.map(a, Op::Scale(a, c), |v| v * c)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.map(a, Op::Relu(a), |v| v.max(0.0))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.map(a, Op::Tanh(a), math::tanh)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.map(a, Op::Sigmoid(a), math::sigmoid)
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.map(a, Op::Exp(a), math::exp)
    }

    /// Clips into `[lo, hi]`; the gradient is zero outside the interval.
    pub fn clamp(&mut self, a: Var, lo: f32, hi: f32) -> Var {
        self.map(a, Op::Clamp(a, lo, hi), |v| v.clamp(lo, hi))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.data(a).iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(a), &[a])
    }

    /// Flattens and joins the inputs into one vector.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        if parts.is_empty() {
            return Err(mismatch("concat", "no inputs"));
        }
        let mut d = Vec::new();
        for &p in parts {
            d.extend_from_slice(self.data(p));
        }
        Ok(self.push(Tensor::vector(d), Op::Concat(parts.to_vec()), parts))
    }

    /// Stacks equally sized inputs as the rows of a matrix.
    pub fn stack(&mut self, rows: &[Var]) -> Result<Var, TensorError> {
        let n = rows.first().map(|&r| self.value(r).len()).ok_or_else(|| mismatch("stack", "no inputs"))?;
        let mut d = Vec::with_capacity(n * rows.len());
        for &r in rows {
            if self.value(r).len() != n {
                return Err(mismatch("stack", "rows differ in length"));
            }
            d.extend_from_slice(self.data(r));
        }
        let t = Tensor::new(&[rows.len(), n], d)?;
        Ok(self.push(t, Op::Stack(rows.to_vec()), rows))
    }

    /// Contiguous range `start..start+len` of the flattened input, as a vector.
    pub fn slice(&mut self, x: Var, start: usize, len: usize) -> Result<Var, TensorError> {
        let d = self.data(x);
        if len == 0 || start + len > d.len() {
            return Err(TensorError::IndexOutOfRange { index: start + len, len: d.len() });
        }
        let t = Tensor::vector(d[start..start + len].to_vec());
        Ok(self.push(t, Op::Slice { x, start }, &[x]))
    }

    /// Rows of `table[V×E]` selected by `idx`, as `[n×E]`.
    pub fn embedding_lookup(&mut self, table: Var, idx: &[usize]) -> Result<Var, TensorError> {
        let t = self.value(table);
        let (v, e) = t.as_matrix();
        let mut d = Vec::with_capacity(idx.len() * e);
        for &i in idx {
            if i >= v {
                return Err(TensorError::IndexOutOfRange { index: i, len: v });
            }
            d.extend_from_slice(&t.data()[i * e..(i + 1) * e]);
        }
        let out = Tensor::new(&[idx.len(), e], d)?;
        Ok(self.push(out, Op::Embedding { table, idx: idx.to_vec() }, &[table]))
    }

    /// Bank of valid 1-D convolutions over `x[len×e]`, each max-pooled over
    /// time, outputs concatenated. Each bank is `(weight[(w·e)×f], bias[f])`;
    /// the width `w` is read from the weight shape.
    pub fn conv1d_bank(&mut self, x: Var, banks: &[(Var, Var)]) -> Result<Var, TensorError> {
        let tx = self.value(x);
        let (len, e) = tx.as_matrix();
        let mut out = Vec::new();
        let mut arg = Vec::new();
        let mut meta = Vec::with_capacity(banks.len());
        for &(w, b) in banks {
            let (tw, tb) = (self.value(w), self.value(b));
            let (rows, f) = tw.as_matrix();
            if rows % e != 0 || tb.len() != f {
                return Err(mismatch("conv1d_bank", alloc::format!("weight {:?}, bias {:?}, embed {e}", tw.shape(), tb.shape())));
            }
            let width = rows / e;
            if width == 0 || width > len {
                return Err(mismatch("conv1d_bank", alloc::format!("width {width} exceeds sequence length {len}")));
            }
            let base = out.len();
            out.resize(base + f, 0.0);
            arg.resize(base + f, 0);
            let mut scratch = vec![0.0; f];
            kernels::conv_max_forward(tx.data(), len, e, tw.data(), tb.data(), width, &mut out[base..], &mut arg[base..], &mut scratch);
            meta.push((w, b, width));
        }
        let mut parents = vec![x];
        for &(w, b) in banks {
            parents.push(w);
            parents.push(b);
        }
        Ok(self.push(Tensor::vector(out), Op::Conv { x, banks: meta, arg }, &parents))
    }

    /// One LSTM step with gates `[i | f | g | o]`:
    /// `c' = f⊙c + i⊙g`, `h' = o⊙tanh(c')`. `w` is `[(in+units)×4·units]`
    /// applied to `[x, h]`. Returns `(h', c')`.
    pub fn lstm_cell_step(&mut self, x: Var, h: Var, c: Var, w: Var, b: Var) -> Result<(Var, Var), TensorError> {
        let (tx, th, tc, tw, tb) = (self.value(x), self.value(h), self.value(c), self.value(w), self.value(b));
        let u = th.len();
        let inp = tx.len();
        if tc.len() != u || tw.shape() != [inp + u, 4 * u] || tb.len() != 4 * u {
            return Err(mismatch(
                "lstm_cell_step",
                alloc::format!("x {:?} h {:?} c {:?} w {:?} b {:?}", tx.shape(), th.shape(), tc.shape(), tw.shape(), tb.shape()),
            ));
        }
        let mut gates = tb.data().to_vec();
        kernels::matmul_acc(tx.data(), &tw.data()[..inp * 4 * u], &mut gates, 1, inp, 4 * u);
        kernels::matmul_acc(th.data(), &tw.data()[inp * 4 * u..], &mut gates, 1, u, 4 * u);
        let mut out = vec![0.0; 2 * u];
        let mut tanh_c = vec![0.0; u];
        let (ho, co) = out.split_at_mut(u);
        kernels::lstm_activate(&mut gates, tc.data(), ho, co, &mut tanh_c);
        let cell = self.push(Tensor::vector(out), Op::Lstm { x, h, c, w, b, gates, tanh_c }, &[x, h, c, w, b]);
        Ok((self.slice(cell, 0, u)?, self.slice(cell, u, u)?))
    }

    /// Sum over rows of `-log softmax(logits)[target]`, with the max
    /// subtracted before exponentiating. `logits` is `[T×V]` (or `[V]` for
    /// one target).
    pub fn softmax_cross_entropy(&mut self, logits: Var, targets: &[usize]) -> Result<Var, TensorError> {
        let t = self.value(logits);
        let (rows, v) = t.as_matrix();
        if rows != targets.len() {
            return Err(mismatch("softmax_cross_entropy", alloc::format!("{rows} rows, {} targets", targets.len())));
        }
        let mut probs = t.data().to_vec();
        let mut loss = 0.0f32;
        for (r, &y) in targets.iter().enumerate() {
            if y >= v {
                return Err(TensorError::IndexOutOfRange { index: y, len: v });
            }
            let row = &mut probs[r * v..(r + 1) * v];
            let x = row[y];
            let lse = kernels::softmax_row(row);
            loss += lse - x;
        }
        Ok(self.push(Tensor::scalar(loss), Op::SoftmaxCe { logits, targets: targets.to_vec(), probs }, &[logits]))
    }

    /// `KL(N(μ, σ²) ‖ N(0, 1))` summed over dimensions, with `σ = exp(log_sigma)`.
    pub fn kl_gaussian_to_standard(&mut self, mu: Var, log_sigma: Var) -> Result<Var, TensorError> {
        self.same_shape("kl_gaussian_to_standard", mu, log_sigma)?;
        let kl: f32 =
            self.data(mu).iter().zip(self.data(log_sigma)).map(|(&m, &s)| 0.5 * (m * m + math::exp(2.0 * s) - 2.0 * s - 1.0)).sum();
        Ok(self.push(Tensor::scalar(kl), Op::Kl { mu, log_sigma }, &[mu, log_sigma]))
    }

    /// Gradients of a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Gradients {
        let seed = vec![1.0; self.value(loss).len()];
        self.backward_with(loss, seed)
    }

    /// Gradients of `Σ seed ⊙ out`.
    pub fn backward_with(&self, out: Var, seed: Vec<f32>) -> Gradients {
        assert_eq!(seed.len(), self.value(out).len(), "seed must match the output length");
        let n = self.nodes.len();
        let mut grads: Vec<Option<Vec<f32>>> = (0..n).map(|_| None).collect();
        grads[out.0] = Some(seed);
        for i in (0..=out.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            if !self.nodes[i].needs_grad {
                continue;
            }
            self.step_back(i, &g, &mut grads);
            grads[i] = Some(g);
        }
        let param_of = self
            .nodes
            .iter()
            .map(|nd| match nd.value {
                Value::Param(id) => Some(id),
                Value::Owned(_) => None,
            })
            .collect();
        Gradients { grads, param_of, n_params: self.param_vars.len() }
    }

    fn step_back(&self, i: usize, g: &[f32], grads: &mut [Option<Vec<f32>>]) {
        let node = &self.nodes[i];
        let out = match &node.value {
            Value::Owned(t) => t.data(),
            Value::Param(_) => return,
        };
        let needs = |v: Var| self.nodes[v.0].needs_grad;
        macro_rules! acc {
            ($v:expr) => {{
                let v: Var = $v;
                let len = self.value(v).len();
                grads[v.0].get_or_insert_with(|| vec![0.0; len])
            }};
        }
        match &node.op {
            Op::Leaf => {}
            Op::MatMul { a, b } | Op::Dense { x: a, w: b, .. } => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let (m, k) = ta.as_matrix();
                let nn = tb.shape()[1];
                if needs(*a) {
                    kernels::matmul_a_bt_acc(g, tb.data(), acc!(*a), m, k, nn);
                }
                if needs(*b) {
                    kernels::matmul_at_b_acc(ta.data(), g, acc!(*b), m, k, nn);
                }
                if let Op::Dense { b: bias, .. } = &node.op {
                    if needs(*bias) {
                        let db = acc!(*bias);
                        for r in 0..m {
                            axpy(1.0, &g[r * nn..(r + 1) * nn], db);
                        }
                    }
                }
            }
            Op::Add(a, b) => {
                for v in [*a, *b] {
                    if needs(v) {
                        axpy(1.0, g, acc!(v));
                    }
                }
            }
            Op::Mul(a, b) => {
                if needs(*a) {
                    let tb = self.data(*b);
                    acc!(*a).iter_mut().zip(g).zip(tb).for_each(|((d, &gi), &y)| *d += gi * y);
                }
                if needs(*b) {
                    let ta = self.data(*a);
                    acc!(*b).iter_mut().zip(g).zip(ta).for_each(|((d, &gi), &x)| *d += gi * x);
                }
            }
            Op::Scale(a, c) => axpy(*c, g, acc!(*a)),
            Op::Relu(a) => {
                acc!(*a).iter_mut().zip(g).zip(out).for_each(|((d, &gi), &y)| {
                    if y > 0.0 {
                        *d += gi
                    }
                });
            }
            Op::Tanh(a) => acc!(*a).iter_mut().zip(g).zip(out).for_each(|((d, &gi), &y)| *d += gi * (1.0 - y * y)),
            Op::Sigmoid(a) => acc!(*a).iter_mut().zip(g).zip(out).for_each(|((d, &gi), &y)| *d += gi * y * (1.0 - y)),
            Op::Exp(a) => acc!(*a).iter_mut().zip(g).zip(out).for_each(|((d, &gi), &y)| *d += gi * y),
            Op::Clamp(a, lo, hi) => {
                let x = self.data(*a);
                acc!(*a).iter_mut().zip(g).zip(x).for_each(|((d, &gi), &xi)| {
                    if xi >= *lo && xi <= *hi {
                        *d += gi
                    }
                });
            }
            Op::Sum(a) => acc!(*a).iter_mut().for_each(|d| *d += g[0]),
            Op::Concat(parts) | Op::Stack(parts) => {
                let mut off = 0;
                for &p in parts {
                    let len = self.value(p).len();
                    if needs(p) {
                        axpy(1.0, &g[off..off + len], acc!(p));
                    }
                    off += len;
                }
            }
            Op::Slice { x, start } => {
                let d = acc!(*x);
                axpy(1.0, g, &mut d[*start..*start + g.len()]);
            }
            Op::Embedding { table, idx } => {
                let e = self.value(*table).as_matrix().1;
                let d = acc!(*table);
                for (r, &k) in idx.iter().enumerate() {
                    axpy(1.0, &g[r * e..(r + 1) * e], &mut d[k * e..(k + 1) * e]);
                }
            }
            Op::Conv { x, banks, arg } => {
                let tx = self.value(*x);
                let e = tx.as_matrix().1;
                let mut off = 0;
                for &(w, b, width) in banks {
                    let tw = self.value(w);
                    let f = self.value(b).len();
                    let gs = &g[off..off + f];
                    let args = &arg[off..off + f];
                    if needs(b) {
                        axpy(1.0, gs, acc!(b));
                    }
                    if needs(w) {
                        kernels::conv_max_backward(tx.data(), e, tw.data(), width, args, gs, None, Some(acc!(w)), None);
                    }
                    if needs(*x) {
                        kernels::conv_max_backward(tx.data(), e, tw.data(), width, args, gs, Some(acc!(*x)), None, None);
                    }
                    off += f;
                }
            }
            Op::Lstm { x, h, c, w, b, gates, tanh_c } => {
                let u = tanh_c.len();
                let inp = self.value(*x).len();
                let tc = self.data(*c);
                let mut dpre = vec![0.0; 4 * u];
                let mut dc_prev = vec![0.0; u];
                kernels::lstm_gate_grads(gates, tc, tanh_c, &g[..u], &g[u..], &mut dpre, &mut dc_prev);
                if needs(*c) {
                    axpy(1.0, &dc_prev, acc!(*c));
                }
                if needs(*b) {
                    axpy(1.0, &dpre, acc!(*b));
                }
                let tw = self.data(*w);
                let (wx, wh) = tw.split_at(inp * 4 * u);
                if needs(*w) {
                    let dw = acc!(*w);
                    let (dwx, dwh) = dw.split_at_mut(inp * 4 * u);
                    kernels::matmul_at_b_acc(self.data(*x), &dpre, dwx, 1, inp, 4 * u);
                    kernels::matmul_at_b_acc(self.data(*h), &dpre, dwh, 1, u, 4 * u);
                }
                if needs(*x) {
                    kernels::matmul_a_bt_acc(&dpre, wx, acc!(*x), 1, inp, 4 * u);
                }
                if needs(*h) {
                    kernels::matmul_a_bt_acc(&dpre, wh, acc!(*h), 1, u, 4 * u);
                }
            }
            Op::SoftmaxCe { logits, targets, probs } => {
                let v = probs.len() / targets.len();
                let d = acc!(*logits);
                for (r, &y) in targets.iter().enumerate() {
                    let row = &mut d[r * v..(r + 1) * v];
                    axpy(g[0], &probs[r * v..(r + 1) * v], row);
                    row[y] -= g[0];
                }
            }
            Op::Kl { mu, log_sigma } => {
                if needs(*mu) {
                    let m = self.data(*mu);
                    acc!(*mu).iter_mut().zip(m).for_each(|(d, &x)| *d += g[0] * x);
                }
                if needs(*log_sigma) {
                    let s = self.data(*log_sigma);
                    acc!(*log_sigma).iter_mut().zip(s).for_each(|(d, &x)| *d += g[0] * (math::exp(2.0 * x) - 1.0));
                }
            }
        }
    }
}

/// Result of a backward pass.
pub struct Gradients {
    grads: Vec<Option<Vec<f32>>>,
    param_of: Vec<Option<ParamId>>,
    n_params: usize,
}

impl Gradients {
    /// Gradient with respect to any node, if it received one.
    pub fn wrt(&self, v: Var) -> Option<&[f32]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    /// Moves parameter gradients out, indexed by [`ParamId`].
    pub fn into_params(self) -> ParamGrads {
        let mut out: Vec<Option<Vec<f32>>> = vec![None; self.n_params];
        for (g, p) in self.grads.into_iter().zip(self.param_of) {
            if let (Some(g), Some(p)) = (g, p) {
                out[p.0] = Some(g);
            }
        }
        ParamGrads(out)
    }
}
