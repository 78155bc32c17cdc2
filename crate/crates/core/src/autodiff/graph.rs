//! Tape-based reverse-mode differentiation.
//!
//! Nodes are appended in evaluation order, so the tape itself is a
//! topological order and `backward` is a single reverse sweep.

use super::tensor::{matmul_into, matmul_nt_into, matmul_tn_into, Tensor, TensorError};

/// Handle to a node on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Lower clamp applied to probabilities inside the cross-entropy loss.
pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    MatMulNt(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRowBias(Var, Var),
    Scale(Var, f64),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    SliceRows(Var, usize),
    SliceCols(Var, usize),
    ConcatRows(Vec<Var>),
    ConcatCols(Vec<Var>),
    GatherRows(Var, Vec<usize>),
    MaxOverRows(Var, Vec<usize>),
    Sum(Var),
    Mean(Var),
    Reshape(Var),
    Bce(Var, Vec<f64>),
    Mse(Var, Vec<f64>),
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

#[derive(Debug, Default, Clone)]
pub struct Graph {
    nodes: Vec<Node>,
    grads: Vec<Option<Vec<f64>>>,
    check_finite: bool,
}

fn mismatch(op: &'static str, a: &Tensor, b: &Tensor) -> TensorError {
    TensorError::ShapeMismatch {
        op,
        left: a.shape().to_vec(),
        right: b.shape().to_vec(),
    }
}

fn same_shape(a: &Tensor, b: &Tensor) -> bool {
    match (a.dims2(), b.dims2()) {
        (Some(x), Some(y)) => x == y,
        _ => a.shape() == b.shape(),
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Graph that fails any op producing NaN or infinity.
    pub fn with_finite_checks() -> Self {
        Graph {
            check_finite: true,
            ..Self::default()
        }
    }

    pub fn set_finite_checks(&mut self, on: bool) {
        self.check_finite = on;
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Drop every node recorded after the first `len`, so a graph holding
    /// bound parameters can be reused across inference calls.
    pub fn truncate(&mut self, len: usize) {
        self.nodes.truncate(len);
        self.grads.clear();
    }

    /// Leaf that receives a gradient.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push_raw(value, Op::Leaf, true)
    }

    /// Leaf that does not receive a gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push_raw(value, Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Gradient of the last `backward` target with respect to `v`, if reached.
    pub fn grad(&self, v: Var) -> Option<Tensor> {
        let g = self.grads.get(v.0)?.as_ref()?;
        Some(Tensor::new(self.nodes[v.0].value.shape().to_vec(), g.clone()).expect("grad shape"))
    }

    /// Gradient, or zeros when `v` did not influence the loss.
    pub fn grad_or_zeros(&self, v: Var) -> Tensor {
        self.grad(v)
            .unwrap_or_else(|| Tensor::zeros(self.nodes[v.0].value.shape()))
    }

    fn push_raw(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn push(&mut self, name: &'static str, value: Tensor, op: Op, requires_grad: bool) -> Result<Var, TensorError> {
        if self.check_finite && !value.is_finite() {
            return Err(TensorError::NonFinite { op: name });
        }
        Ok(self.push_raw(value, op, requires_grad))
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let out = self.value(a).matmul(self.value(b))?;
        let rg = self.rg(a) || self.rg(b);
        self.push("matmul", out, Op::MatMul(a, b), rg)
    }

    /// `a · bᵀ`, the shape of a dense layer with weights stored `[out × in]`.
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (ta, tb) = (self.value(a), self.value(b));
        let (m, k) = ta.expect_dims2("matmul_nt")?;
        let (n, k2) = tb.expect_dims2("matmul_nt")?;
        if k != k2 {
            return Err(mismatch("matmul_nt", ta, tb));
        }
        let mut out = vec![0.0; m * n];
        matmul_nt_into(ta.data(), tb.data(), &mut out, m, k, n);
        let out = Tensor::matrix(m, n, out)?;
        let rg = self.rg(a) || self.rg(b);
        self.push("matmul_nt", out, Op::MatMulNt(a, b), rg)
    }

    fn zip(&mut self, name: &'static str, a: Var, b: Var, op: Op, f: impl Fn(f64, f64) -> f64) -> Result<Var, TensorError> {
        let (ta, tb) = (self.value(a), self.value(b));
        if !same_shape(ta, tb) {
            return Err(mismatch(name, ta, tb));
        }
        let data = ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect();
        let out = Tensor::new(ta.shape().to_vec(), data)?;
        let rg = self.rg(a) || self.rg(b);
        self.push(name, out, op, rg)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.zip("add", a, b, Op::Add(a, b), |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.zip("sub", a, b, Op::Sub(a, b), |x, y| x - y)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.zip("mul", a, b, Op::Mul(a, b), |x, y| x * y)
    }

    /// Adds a length-`n` bias to every row of an `m × n` matrix.
    pub fn add_row_bias(&mut self, x: Var, bias: Var) -> Result<Var, TensorError> {
        let (tx, tb) = (self.value(x), self.value(bias));
        let (m, n) = tx.expect_dims2("add_row_bias")?;
        if tb.numel() != n {
            return Err(mismatch("add_row_bias", tx, tb));
        }
        let mut data = tx.data().to_vec();
        for r in 0..m {
            for (d, &b) in data[r * n..(r + 1) * n].iter_mut().zip(tb.data()) {
                *d += b;
            }
        }
        let out = Tensor::new(tx.shape().to_vec(), data)?;
        let rg = self.rg(x) || self.rg(bias);
        self.push("add_row_bias", out, Op::AddRowBias(x, bias), rg)
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Result<Var, TensorError> {
        let out = self.value(x).map(|v| v * c);
        let rg = self.rg(x);
        self.push("scale", out, Op::Scale(x, c), rg)
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var, TensorError> {
        let out = self.value(x).map(sigmoid);
        let rg = self.rg(x);
        self.push("sigmoid", out, Op::Sigmoid(x), rg)
    }

    pub fn tanh(&mut self, x: Var) -> Result<Var, TensorError> {
        let out = self.value(x).map(f64::tanh);
        let rg = self.rg(x);
        self.push("tanh", out, Op::Tanh(x), rg)
    }

    pub fn relu(&mut self, x: Var) -> Result<Var, TensorError> {
        let out = self.value(x).map(|v| if v > 0.0 { v } else { 0.0 });
        let rg = self.rg(x);
        self.push("relu", out, Op::Relu(x), rg)
    }

    pub fn slice_rows(&mut self, x: Var, start: usize, len: usize) -> Result<Var, TensorError> {
        let tx = self.value(x);
        let (r, c) = tx.expect_dims2("slice_rows")?;
        if len == 0 || start + len > r {
            return Err(TensorError::IndexOutOfRange {
                op: "slice_rows",
                index: start + len,
                extent: r,
            });
        }
        let out = Tensor::matrix(len, c, tx.data()[start * c..(start + len) * c].to_vec())?;
        let rg = self.rg(x);
        self.push("slice_rows", out, Op::SliceRows(x, start), rg)
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Result<Var, TensorError> {
        let tx = self.value(x);
        let (r, c) = tx.expect_dims2("slice_cols")?;
        if len == 0 || start + len > c {
            return Err(TensorError::IndexOutOfRange {
                op: "slice_cols",
                index: start + len,
                extent: c,
            });
        }
        let mut data = Vec::with_capacity(r * len);
        for i in 0..r {
            data.extend_from_slice(&tx.data()[i * c + start..i * c + start + len]);
        }
        let out = Tensor::matrix(r, len, data)?;
        let rg = self.rg(x);
        self.push("slice_cols", out, Op::SliceCols(x, start), rg)
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        let first = parts.first().ok_or(TensorError::Contract {
            op: "concat_rows",
            msg: "no inputs".into(),
        })?;
        let (_, c) = self.value(*first).expect_dims2("concat_rows")?;
        let mut rows = 0;
        let mut data = Vec::new();
        for &p in parts {
            let t = self.value(p);
            let (r, c2) = t.expect_dims2("concat_rows")?;
            if c2 != c {
                return Err(mismatch("concat_rows", self.value(*first), t));
            }
            rows += r;
            data.extend_from_slice(t.data());
        }
        let out = Tensor::matrix(rows, c, data)?;
        let rg = parts.iter().any(|&p| self.rg(p));
        self.push("concat_rows", out, Op::ConcatRows(parts.to_vec()), rg)
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        let first = parts.first().ok_or(TensorError::Contract {
            op: "concat_cols",
            msg: "no inputs".into(),
        })?;
        let (r, _) = self.value(*first).expect_dims2("concat_cols")?;
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let t = self.value(p);
            let (r2, c) = t.expect_dims2("concat_cols")?;
            if r2 != r {
                return Err(mismatch("concat_cols", self.value(*first), t));
            }
            widths.push(c);
        }
        let total: usize = widths.iter().sum();
        let mut data = Vec::with_capacity(r * total);
        for i in 0..r {
            for (&p, &w) in parts.iter().zip(&widths) {
                data.extend_from_slice(&self.value(p).data()[i * w..(i + 1) * w]);
            }
        }
        let out = Tensor::matrix(r, total, data)?;
        let rg = parts.iter().any(|&p| self.rg(p));
        self.push("concat_cols", out, Op::ConcatCols(parts.to_vec()), rg)
    }

    /// Rows of `table` selected by `ids`, in order.
    pub fn gather_rows(&mut self, table: Var, ids: &[usize]) -> Result<Var, TensorError> {
        let tt = self.value(table);
        let (r, c) = tt.expect_dims2("gather_rows")?;
        if ids.is_empty() {
            return Err(TensorError::Contract {
                op: "gather_rows",
                msg: "empty index list".into(),
            });
        }
        let mut data = Vec::with_capacity(ids.len() * c);
        for &id in ids {
            if id >= r {
                return Err(TensorError::IndexOutOfRange {
                    op: "gather_rows",
                    index: id,
                    extent: r,
                });
            }
            data.extend_from_slice(tt.row(id));
        }
        let out = Tensor::matrix(ids.len(), c, data)?;
        let rg = self.rg(table);
        self.push("gather_rows", out, Op::GatherRows(table, ids.to_vec()), rg)
    }

    /// Column-wise maximum over rows, `[T × f] → [1 × f]`. Ties resolve to
    /// the lowest row index, which alone receives the gradient.
    pub fn max_over_rows(&mut self, x: Var) -> Result<Var, TensorError> {
        let tx = self.value(x);
        let (r, c) = tx.expect_dims2("max_over_rows")?;
        let mut arg = vec![0usize; c];
        let mut best: Vec<f64> = tx.row(0).to_vec();
        for i in 1..r {
            for (j, &v) in tx.row(i).iter().enumerate() {
                if v > best[j] {
                    best[j] = v;
                    arg[j] = i;
                }
            }
        }
        let out = Tensor::matrix(1, c, best)?;
        let rg = self.rg(x);
        self.push("max_over_rows", out, Op::MaxOverRows(x, arg), rg)
    }

    pub fn sum(&mut self, x: Var) -> Result<Var, TensorError> {
        let s = self.value(x).data().iter().sum();
        let rg = self.rg(x);
        self.push("sum", Tensor::scalar(s), Op::Sum(x), rg)
    }

    pub fn mean(&mut self, x: Var) -> Result<Var, TensorError> {
        let t = self.value(x);
        let s = t.data().iter().sum::<f64>() / t.numel() as f64;
        let rg = self.rg(x);
        self.push("mean", Tensor::scalar(s), Op::Mean(x), rg)
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var, TensorError> {
        let out = self.value(x).reshape(shape)?;
        let rg = self.rg(x);
        self.push("reshape", out, Op::Reshape(x), rg)
    }

    /// Mean binary cross-entropy of probabilities `pred` against `target`,
    /// with `pred` clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]`.
    pub fn bce(&mut self, pred: Var, target: &[f64]) -> Result<Var, TensorError> {
        let tp = self.value(pred);
        if tp.numel() != target.len() {
            return Err(TensorError::ShapeMismatch {
                op: "bce",
                left: tp.shape().to_vec(),
                right: vec![target.len()],
            });
        }
        let loss = bce_value(tp.data(), target);
        let rg = self.rg(pred);
        self.push("bce", Tensor::scalar(loss), Op::Bce(pred, target.to_vec()), rg)
    }

    /// Mean squared error of `pred` against `target`.
    pub fn mse(&mut self, pred: Var, target: &[f64]) -> Result<Var, TensorError> {
        let tp = self.value(pred);
        if tp.numel() != target.len() {
            return Err(TensorError::ShapeMismatch {
                op: "mse",
                left: tp.shape().to_vec(),
                right: vec![target.len()],
            });
        }
        let loss = tp
            .data()
            .iter()
            .zip(target)
            .map(|(p, y)| (p - y) * (p - y))
            .sum::<f64>()
            / target.len() as f64;
        let rg = self.rg(pred);
        self.push("mse", Tensor::scalar(loss), Op::Mse(pred, target.to_vec()), rg)
    }

    /// Fill gradients of `loss` with respect to every node reaching it.
    pub fn backward(&mut self, loss: Var) -> Result<(), TensorError> {
        let lv = self.value(loss);
        if !lv.is_scalar() {
            return Err(TensorError::NonScalarLoss(lv.shape().to_vec()));
        }
        self.grads = vec![None; self.nodes.len()];
        self.grads[loss.0] = Some(vec![1.0]);
        for i in (0..=loss.0).rev() {
            if !self.nodes[i].requires_grad {
                continue;
            }
            let Some(g) = self.grads[i].take() else {
                continue;
            };
            propagate(&self.nodes, &mut self.grads, i, &g);
            self.grads[i] = Some(g);
        }
        Ok(())
    }
}

fn acc<'g>(nodes: &[Node], grads: &'g mut [Option<Vec<f64>>], v: Var) -> Option<&'g mut Vec<f64>> {
    if !nodes[v.0].requires_grad {
        return None;
    }
    let n = nodes[v.0].value.numel();
    Some(grads[v.0].get_or_insert_with(|| vec![0.0; n]))
}

fn propagate(nodes: &[Node], grads: &mut [Option<Vec<f64>>], i: usize, g: &[f64]) {
    let rg = |v: Var| nodes[v.0].requires_grad;
    let val = |v: Var| &nodes[v.0].value;
    match nodes[i].op {
        Op::Leaf => {}
        Op::MatMul(a, b) => {
            let (m, k) = val(a).dims2().unwrap();
            let (_, n) = val(b).dims2().unwrap();
            if rg(a) {
                // dA = G · Bᵀ
                let bd = val(b).data();
                let ga = acc(nodes, grads, a).unwrap();
                matmul_nt_into(g, bd, ga, m, n, k);
            }
            if rg(b) {
                // dB = Aᵀ · G
                let ad = val(a).data();
                let gb = acc(nodes, grads, b).unwrap();
                matmul_tn_into(ad, g, gb, m, k, n);
            }
        }
        Op::MatMulNt(a, b) => {
            let (m, k) = val(a).dims2().unwrap();
            let (n, _) = val(b).dims2().unwrap();
            if rg(a) {
                // dA = G · B
                let bd = val(b).data();
                let ga = acc(nodes, grads, a).unwrap();
                matmul_into(g, bd, ga, m, n, k);
            }
            if rg(b) {
                // dB = Gᵀ · A
                let ad = val(a).data();
                let gb = acc(nodes, grads, b).unwrap();
                matmul_tn_into(g, ad, gb, m, n, k);
            }
        }
        Op::Add(a, b) => {
            if let Some(ga) = acc(nodes, grads, a) {
                ga.iter_mut().zip(g).for_each(|(x, y)| *x += y);
            }
            if let Some(gb) = acc(nodes, grads, b) {
                gb.iter_mut().zip(g).for_each(|(x, y)| *x += y);
            }
        }
        Op::Sub(a, b) => {
            if let Some(ga) = acc(nodes, grads, a) {
                ga.iter_mut().zip(g).for_each(|(x, y)| *x += y);
            }
            if let Some(gb) = acc(nodes, grads, b) {
                gb.iter_mut().zip(g).for_each(|(x, y)| *x -= y);
            }
        }
        Op::Mul(a, b) => {
            if rg(a) {
                let bd = val(b).data();
                let ga = acc(nodes, grads, a).unwrap();
                for ((x, gv), bv) in ga.iter_mut().zip(g).zip(bd) {
                    *x += gv * bv;
                }
            }
            if rg(b) {
                let ad = val(a).data();
                let gb = acc(nodes, grads, b).unwrap();
                for ((x, gv), av) in gb.iter_mut().zip(g).zip(ad) {
                    *x += gv * av;
                }
            }
        }
        Op::AddRowBias(x, bias) => {
            if let Some(gx) = acc(nodes, grads, x) {
                gx.iter_mut().zip(g).for_each(|(a, b)| *a += b);
            }
            if let Some(gb) = acc(nodes, grads, bias) {
                let n = gb.len();
                for row in g.chunks(n) {
                    gb.iter_mut().zip(row).for_each(|(a, b)| *a += b);
                }
            }
        }
        Op::Scale(x, c) => {
            if let Some(gx) = acc(nodes, grads, x) {
                gx.iter_mut().zip(g).for_each(|(a, b)| *a += c * b);
            }
        }
        Op::Sigmoid(x) => {
            let out = nodes[i].value.data();
            if let Some(gx) = acc(nodes, grads, x) {
                for ((a, gv), s) in gx.iter_mut().zip(g).zip(out) {
                    *a += gv * s * (1.0 - s);
                }
            }
        }
        Op::Tanh(x) => {
            let out = nodes[i].value.data();
            if let Some(gx) = acc(nodes, grads, x) {
                for ((a, gv), t) in gx.iter_mut().zip(g).zip(out) {
                    *a += gv * (1.0 - t * t);
                }
            }
        }
        Op::Relu(x) => {
            let inp = val(x).data();
            if let Some(gx) = acc(nodes, grads, x) {
                for ((a, gv), v) in gx.iter_mut().zip(g).zip(inp) {
                    if *v > 0.0 {
                        *a += gv;
                    }
                }
            }
        }
        Op::SliceRows(x, start) => {
            let (_, c) = val(x).dims2().unwrap();
            if let Some(gx) = acc(nodes, grads, x) {
                let dst = &mut gx[start * c..start * c + g.len()];
                dst.iter_mut().zip(g).for_each(|(a, b)| *a += b);
            }
        }
        Op::SliceCols(x, start) => {
            let (r, c) = val(x).dims2().unwrap();
            let len = g.len() / r;
            if let Some(gx) = acc(nodes, grads, x) {
                for row in 0..r {
                    let dst = &mut gx[row * c + start..row * c + start + len];
                    dst.iter_mut()
                        .zip(&g[row * len..(row + 1) * len])
                        .for_each(|(a, b)| *a += b);
                }
            }
        }
        Op::ConcatRows(ref parts) => {
            let mut offset = 0;
            for &p in parts {
                let n = val(p).numel();
                if let Some(gp) = acc(nodes, grads, p) {
                    gp.iter_mut()
                        .zip(&g[offset..offset + n])
                        .for_each(|(a, b)| *a += b);
                }
                offset += n;
            }
        }
        Op::ConcatCols(ref parts) => {
            let (r, total) = nodes[i].value.dims2().unwrap();
            let mut offset = 0;
            for &p in parts {
                let (_, w) = val(p).dims2().unwrap();
                if let Some(gp) = acc(nodes, grads, p) {
                    for row in 0..r {
                        let src = &g[row * total + offset..row * total + offset + w];
                        gp[row * w..(row + 1) * w]
                            .iter_mut()
                            .zip(src)
                            .for_each(|(a, b)| *a += b);
                    }
                }
                offset += w;
            }
        }
        Op::GatherRows(table, ref ids) => {
            let (_, c) = val(table).dims2().unwrap();
            if let Some(gt) = acc(nodes, grads, table) {
                for (k, id) in ids.iter().enumerate() {
                    gt[id * c..(id + 1) * c]
                        .iter_mut()
                        .zip(&g[k * c..(k + 1) * c])
                        .for_each(|(a, b)| *a += b);
                }
            }
        }
        Op::MaxOverRows(x, ref arg) => {
            let (_, c) = val(x).dims2().unwrap();
            if let Some(gx) = acc(nodes, grads, x) {
                for (j, &r) in arg.iter().enumerate() {
                    gx[r * c + j] += g[j];
                }
            }
        }
        Op::Sum(x) => {
            if let Some(gx) = acc(nodes, grads, x) {
                gx.iter_mut().for_each(|a| *a += g[0]);
            }
        }
        Op::Mean(x) => {
            if let Some(gx) = acc(nodes, grads, x) {
                let s = g[0] / gx.len() as f64;
                gx.iter_mut().for_each(|a| *a += s);
            }
        }
        Op::Reshape(x) => {
            if let Some(gx) = acc(nodes, grads, x) {
                gx.iter_mut().zip(g).for_each(|(a, b)| *a += b);
            }
        }
        Op::Bce(pred, ref target) => {
            let p = val(pred).data();
            let k = target.len() as f64;
            if let Some(gp) = acc(nodes, grads, pred) {
                for ((a, &pv), &y) in gp.iter_mut().zip(p).zip(target) {
                    let pc = pv.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
                    *a += g[0] * (pc - y) / (pc * (1.0 - pc)) / k;
                }
            }
        }
        Op::Mse(pred, ref target) => {
            let p = val(pred).data();
            let k = target.len() as f64;
            if let Some(gp) = acc(nodes, grads, pred) {
                for ((a, &pv), &y) in gp.iter_mut().zip(p).zip(target) {
                    *a += g[0] * 2.0 * (pv - y) / k;
                }
            }
        }
    }
}

/// Mean binary cross-entropy with clamped probabilities.
pub fn bce_value(pred: &[f64], target: &[f64]) -> f64 {
    let total: f64 = pred
        .iter()
        .zip(target)
        .map(|(&p, &y)| {
            let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum();
    total / target.len() as f64
}
