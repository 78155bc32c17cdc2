//! Network building blocks: embedding lookup, LSTM, same-padded Conv1D with
//! ReLU, max-pooling over time, sigmoid dense output and inverted dropout.
//!
//! Each layer has a graph form (operating on [`Var`]s, used for training and
//! batched inference) and an eager convenience form over plain tensors.

use rand::Rng as _;

use crate::autodiff::{Graph, Tensor, Var};
use crate::error::{Error, Result};
use crate::Rng;

/// Uniform Glorot initialization, `±sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform(shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut Rng) -> Tensor {
    let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let mut t = Tensor::zeros(shape);
    for v in t.data_mut() {
        *v = rng.gen_range(-s..s);
    }
    t
}

/// Weights of a single LSTM layer.
///
/// `w_*` are `[units × input_dim]`, `u_*` are `[units × units]`, `b_*` have
/// length `units`.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams {
    pub w_f: Tensor,
    pub w_i: Tensor,
    pub w_o: Tensor,
    pub w_c: Tensor,
    pub u_f: Tensor,
    pub u_i: Tensor,
    pub u_o: Tensor,
    pub u_c: Tensor,
    pub b_f: Tensor,
    pub b_i: Tensor,
    pub b_o: Tensor,
    pub b_c: Tensor,
}

pub const LSTM_PARAM_NAMES: [&str; 12] = [
    "lstm.w_f", "lstm.w_i", "lstm.w_o", "lstm.w_c", "lstm.u_f", "lstm.u_i", "lstm.u_o", "lstm.u_c", "lstm.b_f",
    "lstm.b_i", "lstm.b_o", "lstm.b_c",
];

impl LstmParams {
    pub fn zeros(input_dim: usize, units: usize) -> Self {
        let w = || Tensor::zeros(&[units, input_dim]);
        let u = || Tensor::zeros(&[units, units]);
        let b = || Tensor::zeros(&[units]);
        LstmParams {
            w_f: w(),
            w_i: w(),
            w_o: w(),
            w_c: w(),
            u_f: u(),
            u_i: u(),
            u_o: u(),
            u_c: u(),
            b_f: b(),
            b_i: b(),
            b_o: b(),
            b_c: b(),
        }
    }

    /// Glorot-uniform matrices, zero biases, forget-gate bias 1.
    pub fn init(input_dim: usize, units: usize, rng: &mut Rng) -> Self {
        let mut p = Self::zeros(input_dim, units);
        for w in [&mut p.w_f, &mut p.w_i, &mut p.w_o, &mut p.w_c] {
            *w = glorot_uniform(&[units, input_dim], input_dim, units, rng);
        }
        for u in [&mut p.u_f, &mut p.u_i, &mut p.u_o, &mut p.u_c] {
            *u = glorot_uniform(&[units, units], units, units, rng);
        }
        p.b_f = Tensor::filled(&[units], 1.0);
        p
    }

    pub fn units(&self) -> usize {
        self.b_f.numel()
    }

    pub fn input_dim(&self) -> usize {
        self.w_f.shape()[1]
    }

    pub fn tensors(&self) -> [&Tensor; 12] {
        [
            &self.w_f, &self.w_i, &self.w_o, &self.w_c, &self.u_f, &self.u_i, &self.u_o, &self.u_c, &self.b_f,
            &self.b_i, &self.b_o, &self.b_c,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Tensor; 12] {
        [
            &mut self.w_f,
            &mut self.w_i,
            &mut self.w_o,
            &mut self.w_c,
            &mut self.u_f,
            &mut self.u_i,
            &mut self.u_o,
            &mut self.u_c,
            &mut self.b_f,
            &mut self.b_i,
            &mut self.b_o,
            &mut self.b_c,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let units = self.units();
        let input = self.input_dim();
        let t = self.tensors();
        for (name, w) in LSTM_PARAM_NAMES.iter().zip(&t[..4]) {
            if w.shape() != [units, input] {
                return Err(Error::dimension(format!("{name} has shape {:?}", w.shape())));
            }
        }
        for (name, u) in LSTM_PARAM_NAMES[4..].iter().zip(&t[4..8]) {
            if u.shape() != [units, units] {
                return Err(Error::dimension(format!("{name} has shape {:?}", u.shape())));
            }
        }
        for (name, b) in LSTM_PARAM_NAMES[8..].iter().zip(&t[8..]) {
            if b.numel() != units {
                return Err(Error::dimension(format!("{name} has shape {:?}", b.shape())));
            }
        }
        Ok(())
    }
}

/// LSTM weights on a graph with the four gates stacked in `f, i, o, c` order.
#[derive(Clone, Copy, Debug)]
pub struct LstmVars {
    w: Var,
    u: Var,
    b: Var,
    units: usize,
}

impl LstmVars {
    /// Stack twelve leaves given in [`LSTM_PARAM_NAMES`] order.
    pub fn stack(g: &mut Graph, leaves: &[Var]) -> Result<Self> {
        if leaves.len() != 12 {
            return Err(Error::contract("LSTM binding needs 12 parameter leaves"));
        }
        let units = g.value(leaves[8]).numel();
        let w = g.concat_rows(&leaves[0..4])?;
        let u = g.concat_rows(&leaves[4..8])?;
        let mut bs = Vec::with_capacity(4);
        for &b in &leaves[8..12] {
            bs.push(g.reshape(b, &[1, units])?);
        }
        let b = g.concat_cols(&bs)?;
        Ok(LstmVars { w, u, b, units })
    }

    pub fn units(&self) -> usize {
        self.units
    }

    /// Input projections `W x_t + b` for every row of `xs`, `[T × 4·units]`.
    pub fn project_inputs(&self, g: &mut Graph, xs: Var) -> Result<Var> {
        let wx = g.matmul_nt(xs, self.w)?;
        Ok(g.add_row_bias(wx, self.b)?)
    }

    /// One recurrence given the projected input row for this step.
    pub fn step(&self, g: &mut Graph, x_proj: Var, h_prev: Var, c_prev: Var) -> Result<(Var, Var)> {
        let u = self.units;
        let uh = g.matmul_nt(h_prev, self.u)?;
        let z = g.add(x_proj, uh)?;
        let gates_pre = g.slice_cols(z, 0, 3 * u)?;
        let gates = g.sigmoid(gates_pre)?;
        let f = g.slice_cols(gates, 0, u)?;
        let i = g.slice_cols(gates, u, u)?;
        let o = g.slice_cols(gates, 2 * u, u)?;
        let cand_pre = g.slice_cols(z, 3 * u, u)?;
        let cand = g.tanh(cand_pre)?;
        let keep = g.mul(f, c_prev)?;
        let write = g.mul(i, cand)?;
        let c = g.add(keep, write)?;
        let tc = g.tanh(c)?;
        let h = g.mul(o, tc)?;
        Ok((h, c))
    }

    /// Run over all rows of `xs` from zero state; returns `[T × units]` of
    /// hidden states, each passed through output dropout when `dropout` is
    /// given.
    pub fn sequence(&self, g: &mut Graph, xs: Var, mut dropout: Option<(f64, &mut Rng)>) -> Result<Var> {
        let (t_len, _) = g.value(xs).dims2().ok_or_else(|| Error::dimension("LSTM input must be a matrix"))?;
        let proj = self.project_inputs(g, xs)?;
        let mut h = g.constant(Tensor::zeros(&[1, self.units]));
        let mut c = g.constant(Tensor::zeros(&[1, self.units]));
        let mut outs = Vec::with_capacity(t_len);
        for t in 0..t_len {
            let xp = g.slice_rows(proj, t, 1)?;
            let (h_next, c_next) = self.step(g, xp, h, c)?;
            h = h_next;
            c = c_next;
            let out = match dropout.as_mut() {
                Some((rate, rng)) => apply_dropout(g, h, *rate, rng)?,
                None => h,
            };
            outs.push(out);
        }
        Ok(g.concat_rows(&outs)?)
    }
}

fn check_lstm_inputs(p: &LstmParams, x: &[f64], h: &[f64], c: &[f64]) -> Result<()> {
    p.validate()?;
    if x.len() != p.input_dim() || h.len() != p.units() || c.len() != p.units() {
        return Err(Error::dimension(format!(
            "lstm_step expects x[{}], h[{}], c[{}]; got x[{}], h[{}], c[{}]",
            p.input_dim(),
            p.units(),
            p.units(),
            x.len(),
            h.len(),
            c.len()
        )));
    }
    Ok(())
}

fn bind_lstm(g: &mut Graph, p: &LstmParams) -> Result<LstmVars> {
    let leaves: Vec<Var> = p.tensors().iter().map(|t| g.constant((*t).clone())).collect();
    LstmVars::stack(g, &leaves)
}

/// A single LSTM step, `(h_t, c_t)`.
pub fn lstm_step(p: &LstmParams, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    check_lstm_inputs(p, x, h_prev, c_prev)?;
    let mut g = Graph::new();
    let lv = bind_lstm(&mut g, p)?;
    let xs = g.constant(Tensor::vector(x.to_vec()).reshape(&[1, x.len()])?);
    let h0 = g.constant(Tensor::vector(h_prev.to_vec()).reshape(&[1, h_prev.len()])?);
    let c0 = g.constant(Tensor::vector(c_prev.to_vec()).reshape(&[1, c_prev.len()])?);
    let xp = lv.project_inputs(&mut g, xs)?;
    let (h, c) = lv.step(&mut g, xp, h0, c0)?;
    Ok((g.value(h).data().to_vec(), g.value(c).data().to_vec()))
}

/// Hidden state for every step of `xs`, `[T × units]`.
pub fn lstm_sequence(
    p: &LstmParams,
    xs: &[Vec<f64>],
    dropout_rate: f64,
    training: bool,
    rng: &mut Rng,
) -> Result<Tensor> {
    if xs.is_empty() {
        return Err(Error::EmptySequence);
    }
    p.validate()?;
    let input = Tensor::from_rows(xs)?;
    if input.shape()[1] != p.input_dim() {
        return Err(Error::dimension(format!(
            "LSTM input dim {} but got rows of {}",
            p.input_dim(),
            input.shape()[1]
        )));
    }
    let mut g = Graph::new();
    let lv = bind_lstm(&mut g, p)?;
    let x = g.constant(input);
    let dropout = (training && dropout_rate > 0.0).then_some((dropout_rate, rng));
    let out = lv.sequence(&mut g, x, dropout)?;
    Ok(g.value(out).clone())
}

/// Inverted dropout: zero each unit with probability `rate`, scale survivors
/// by `1 / (1 - rate)`.
pub fn apply_dropout(g: &mut Graph, x: Var, rate: f64, rng: &mut Rng) -> Result<Var> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::contract(format!("dropout rate {rate} outside [0, 1)")));
    }
    if rate == 0.0 {
        return Ok(x);
    }
    let keep = 1.0 / (1.0 - rate);
    let shape = g.value(x).shape().to_vec();
    let mut mask = Tensor::zeros(&shape);
    for m in mask.data_mut() {
        if rng.gen::<f64>() >= rate {
            *m = keep;
        }
    }
    let m = g.constant(mask);
    Ok(g.mul(x, m)?)
}

/// Weights of a 1-D convolution, `[filters × kernel_size × input_dim]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvParams {
    pub weights: Tensor,
    pub bias: Tensor,
}

impl ConvParams {
    pub fn zeros(filters: usize, kernel_size: usize, input_dim: usize) -> Self {
        ConvParams {
            weights: Tensor::zeros(&[filters, kernel_size, input_dim]),
            bias: Tensor::zeros(&[filters]),
        }
    }

    pub fn init(filters: usize, kernel_size: usize, input_dim: usize, rng: &mut Rng) -> Self {
        ConvParams {
            weights: glorot_uniform(
                &[filters, kernel_size, input_dim],
                kernel_size * input_dim,
                kernel_size * filters,
                rng,
            ),
            bias: Tensor::zeros(&[filters]),
        }
    }

    pub fn filters(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn kernel_size(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn input_dim(&self) -> usize {
        self.weights.shape()[2]
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.shape().len() != 3 {
            return Err(Error::dimension("conv weights must be rank 3"));
        }
        if self.bias.numel() != self.filters() {
            return Err(Error::dimension("conv bias length must equal filter count"));
        }
        if !self.weights.is_finite() {
            return Err(Error::contract("conv weights must be finite"));
        }
        Ok(())
    }
}

/// Same-length convolution with ReLU. The window at step `t` covers rows
/// `t..t+k`; `k - 1` zero rows are appended after the sequence.
///
/// `weights` is the graph leaf of the rank-3 kernel; `bias` has length
/// `filters`.
pub fn conv1d_same_graph(g: &mut Graph, weights: Var, bias: Var, seq: Var) -> Result<Var> {
    let wshape = g.value(weights).shape().to_vec();
    let &[filters, k, d] = wshape.as_slice() else {
        return Err(Error::dimension("conv weights must be rank 3"));
    };
    let (t_len, d_in) = g
        .value(seq)
        .dims2()
        .ok_or_else(|| Error::dimension("conv input must be a matrix"))?;
    if d_in != d {
        return Err(Error::dimension(format!("conv expects input dim {d}, got {d_in}")));
    }
    let windows = if k == 1 {
        seq
    } else {
        let pad = g.constant(Tensor::zeros(&[k - 1, d]));
        let padded = g.concat_rows(&[seq, pad])?;
        let mut shifted = Vec::with_capacity(k);
        for j in 0..k {
            shifted.push(g.slice_rows(padded, j, t_len)?);
        }
        g.concat_cols(&shifted)?
    };
    let flat = g.reshape(weights, &[filters, k * d])?;
    let pre = g.matmul_nt(windows, flat)?;
    let pre = g.add_row_bias(pre, bias)?;
    Ok(g.relu(pre)?)
}

pub fn conv1d_same(p: &ConvParams, seq: &Tensor) -> Result<Tensor> {
    p.validate()?;
    let mut g = Graph::new();
    let w = g.constant(p.weights.clone());
    let b = g.constant(p.bias.clone());
    let s = g.constant(seq.clone());
    let out = conv1d_same_graph(&mut g, w, b, s)?;
    Ok(g.value(out).clone())
}

/// Per-channel maximum over time steps.
pub fn max_pool_over_time(seq: &Tensor) -> Result<Vec<f64>> {
    let mut g = Graph::new();
    let s = g.constant(seq.clone());
    let out = g.max_over_rows(s)?;
    Ok(g.value(out).data().to_vec())
}

/// Sigmoid output layer, `W` stored `[outputs × inputs]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub weights: Tensor,
    pub bias: Tensor,
}

impl Dense {
    pub fn zeros(outputs: usize, inputs: usize) -> Self {
        Dense {
            weights: Tensor::zeros(&[outputs, inputs]),
            bias: Tensor::zeros(&[outputs]),
        }
    }

    pub fn init(outputs: usize, inputs: usize, rng: &mut Rng) -> Self {
        Dense {
            weights: glorot_uniform(&[outputs, inputs], inputs, outputs, rng),
            bias: Tensor::zeros(&[outputs]),
        }
    }

    pub fn outputs(&self) -> usize {
        self.bias.numel()
    }

    pub fn inputs(&self) -> usize {
        self.weights.shape()[1]
    }
}

pub fn dense_sigmoid_graph(g: &mut Graph, weights: Var, bias: Var, x: Var) -> Result<Var> {
    let z = g.matmul_nt(x, weights)?;
    let z = g.add_row_bias(z, bias)?;
    Ok(g.sigmoid(z)?)
}

pub fn dense_sigmoid(layer: &Dense, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != layer.inputs() || layer.weights.shape().len() != 2 {
        return Err(Error::dimension(format!(
            "dense layer expects {} inputs, got {}",
            layer.inputs(),
            x.len()
        )));
    }
    let mut g = Graph::new();
    let w = g.constant(layer.weights.clone());
    let b = g.constant(layer.bias.clone());
    let xv = g.constant(Tensor::matrix(1, x.len(), x.to_vec())?);
    let out = dense_sigmoid_graph(&mut g, w, b, xv)?;
    Ok(g.value(out).data().to_vec())
}

/// Word embedding matrix; row 0 is the padding token and stays zero.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    matrix: Tensor,
    pub trainable: bool,
}

impl EmbeddingTable {
    pub fn new(matrix: Tensor, trainable: bool) -> Result<Self> {
        let (_, _) = matrix
            .dims2()
            .filter(|_| matrix.shape().len() == 2)
            .ok_or_else(|| Error::dimension("embedding matrix must be rank 2"))?;
        if !matrix.is_finite() {
            return Err(Error::contract("embedding rows must be finite"));
        }
        if matrix.row(0).iter().any(|&v| v != 0.0) {
            return Err(Error::contract("embedding row 0 (padding) must be all zeros"));
        }
        Ok(EmbeddingTable { matrix, trainable })
    }

    /// Uniform `(-scale, scale)` rows with a zero padding row.
    pub fn random(vocab_size: usize, dim: usize, scale: f64, trainable: bool, rng: &mut Rng) -> Self {
        let mut m = Tensor::zeros(&[vocab_size, dim]);
        for v in m.data_mut()[dim..].iter_mut() {
            *v = rng.gen_range(-scale..scale);
        }
        EmbeddingTable { matrix: m, trainable }
    }

    pub fn vocab_size(&self) -> usize {
        self.matrix.shape()[0]
    }

    pub fn dim(&self) -> usize {
        self.matrix.shape()[1]
    }

    pub fn matrix(&self) -> &Tensor {
        &self.matrix
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut Tensor {
        &mut self.matrix
    }

    pub fn row(&self, id: usize) -> &[f64] {
        self.matrix.row(id)
    }

    pub(crate) fn zero_padding_row(&mut self) {
        let d = self.dim();
        self.matrix.data_mut()[..d].iter_mut().for_each(|v| *v = 0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng() -> Rng {
        Rng::seed_from_u64(7)
    }

    #[test]
    fn zero_lstm_stays_at_rest() {
        let p = LstmParams::zeros(3, 2);
        let (h, c) = lstm_step(&p, &[0.3, -1.0, 2.0], &[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(h, vec![0.0, 0.0]);
        assert_eq!(c, vec![0.0, 0.0]);
    }

    #[test]
    fn zero_lstm_halves_cell_state() {
        let p = LstmParams::zeros(1, 1);
        let (h, c) = lstm_step(&p, &[5.0], &[0.0], &[2.0]).unwrap();
        assert_eq!(c, vec![1.0]);
        assert!((h[0] - 0.5 * 1f64.tanh()).abs() < 1e-15);
        assert!((h[0] - 0.380797).abs() < 1e-6);
    }

    #[test]
    fn lstm_step_rejects_bad_dims() {
        let p = LstmParams::zeros(3, 2);
        assert!(matches!(lstm_step(&p, &[0.0; 2], &[0.0; 2], &[0.0; 2]), Err(Error::Dimension(_))));
    }

    #[test]
    fn single_step_sequence_matches_step() {
        let mut r = rng();
        let p = LstmParams::init(3, 4, &mut r);
        let x = vec![0.1, -0.4, 0.7];
        let seq = lstm_sequence(&p, &[x.clone()], 0.0, false, &mut r).unwrap();
        let (h, _) = lstm_step(&p, &x, &[0.0; 4], &[0.0; 4]).unwrap();
        assert_eq!(seq.data(), h.as_slice());
    }

    #[test]
    fn zero_dropout_ignores_training_flag() {
        let mut r = rng();
        let p = LstmParams::init(2, 3, &mut r);
        let xs = vec![vec![0.5, -0.5], vec![1.0, 0.2]];
        let a = lstm_sequence(&p, &xs, 0.0, true, &mut r).unwrap();
        let b = lstm_sequence(&p, &xs, 0.0, false, &mut r).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_sequence_rejected() {
        let p = LstmParams::zeros(2, 2);
        assert!(matches!(lstm_sequence(&p, &[], 0.0, false, &mut rng()), Err(Error::EmptySequence)));
    }

    #[test]
    fn summing_window_kernel() {
        let p = ConvParams {
            weights: Tensor::new(vec![1, 2, 1], vec![1.0, 1.0]).unwrap(),
            bias: Tensor::zeros(&[1]),
        };
        let seq = Tensor::matrix(3, 1, vec![1.0, 2.0, 3.0]).unwrap();
        let out = conv1d_same(&p, &seq).unwrap();
        assert_eq!(out.data(), &[3.0, 5.0, 3.0]);
    }

    #[test]
    fn conv_relu_clips_negative() {
        let p = ConvParams {
            weights: Tensor::new(vec![2, 2, 1], vec![-1.0, -1.0, -2.0, 0.0]).unwrap(),
            bias: Tensor::vector(vec![-0.5, 0.0]),
        };
        let seq = Tensor::matrix(3, 1, vec![1.0, 2.0, 3.0]).unwrap();
        let out = conv1d_same(&p, &seq).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn conv_length_matches_input() {
        let mut r = rng();
        for t in 1..6 {
            for k in 1..4 {
                let p = ConvParams::init(3, k, 2, &mut r);
                let seq = glorot_uniform(&[t, 2], 1, 1, &mut r);
                assert_eq!(conv1d_same(&p, &seq).unwrap().shape(), &[t, 3]);
            }
        }
    }

    #[test]
    fn max_pool_examples() {
        let one = Tensor::matrix(1, 3, vec![1.0, -2.0, 0.5]).unwrap();
        assert_eq!(max_pool_over_time(&one).unwrap(), vec![1.0, -2.0, 0.5]);
        let two = Tensor::matrix(2, 2, vec![1.0, 5.0, 3.0, 2.0]).unwrap();
        assert_eq!(max_pool_over_time(&two).unwrap(), vec![3.0, 5.0]);
    }

    #[test]
    fn dense_zero_is_half() {
        let d = Dense::zeros(4, 3);
        assert_eq!(dense_sigmoid(&d, &[1.0, 2.0, 3.0]).unwrap(), vec![0.5; 4]);
        assert!(dense_sigmoid(&d, &[1.0]).is_err());
    }

    #[test]
    fn embedding_requires_zero_padding_row() {
        let m = Tensor::matrix(2, 2, vec![0.0, 0.1, 0.2, 0.3]).unwrap();
        assert!(EmbeddingTable::new(m, false).is_err());
        let t = EmbeddingTable::random(5, 3, 0.05, false, &mut rng());
        assert!(t.row(0).iter().all(|&v| v == 0.0));
        assert!(t.row(4).iter().all(|&v| v.abs() < 0.05));
    }

    #[test]
    fn dropout_rate_bounds() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::vector(vec![1.0; 4]));
        assert!(apply_dropout(&mut g, x, 1.0, &mut rng()).is_err());
        assert_eq!(apply_dropout(&mut g, x, 0.0, &mut rng()).unwrap(), x);
    }
}
