//! Losses, the Adam optimizer and the mini-batch training loop.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;

use crate::autodiff::{bce_value, Graph, Tensor};
use crate::error::{Error, Result};
use crate::labels::Emotion;
use crate::models::{ModelBundle, ModelKind};
use crate::Rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected Adam with one pair of moment tensors per parameter.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &[&Tensor]) -> Self {
        AdamState {
            config,
            step: 0,
            m: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
            v: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
        }
    }

    pub fn step(&mut self, params: &mut [&mut Tensor], grads: &[Tensor]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::contract(format!(
                "adam tracks {} params, got {} params and {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        for ((p, g), m) in params.iter().zip(grads).zip(&self.m) {
            if p.shape() != g.shape() || p.shape() != m.shape() {
                return Err(Error::contract(format!(
                    "adam shape mismatch: param {:?}, grad {:?}",
                    p.shape(),
                    g.shape()
                )));
            }
        }
        self.step += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            let pd = p.data_mut();
            let (md, vd) = (m.data_mut(), v.data_mut());
            for (k, &gk) in g.data().iter().enumerate() {
                md[k] = beta1 * md[k] + (1.0 - beta1) * gk;
                vd[k] = beta2 * vd[k] + (1.0 - beta2) * gk * gk;
                let mhat = md[k] / c1;
                let vhat = vd[k] / c2;
                pd[k] -= lr * mhat / (vhat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

/// Per-label binary cross-entropy averaged over labels, probabilities
/// clamped to `[1e-12, 1 - 1e-12]`.
pub fn multilabel_xent(ve: &[f64], y: &[f64]) -> Result<f64> {
    if ve.len() != y.len() || ve.is_empty() {
        return Err(Error::dimension(format!("{} predictions for {} labels", ve.len(), y.len())));
    }
    Ok(bce_value(ve, y))
}

/// Mean of `(pred - gold)²` over a batch.
pub fn mse(pairs: &[(f64, f64)]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    pairs.iter().map(|(p, g)| (p - g) * (p - g)).sum::<f64>() / pairs.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossKind {
    MultiLabelXent,
    Mse,
}

impl LossKind {
    pub fn for_model(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Eccu => LossKind::MultiLabelXent,
            ModelKind::Eipu => LossKind::Mse,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    /// 0/1 per label.
    Labels(Vec<f64>),
    Intensity(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub ids: Vec<u32>,
    pub target: Target,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainPlan {
    pub epochs: usize,
    pub batch_size: usize,
    pub loss: LossKind,
    pub seed: u64,
    pub shuffle: bool,
    pub adam: AdamConfig,
}

impl TrainPlan {
    /// Classifier schedule: 10 epochs, batch 8.
    pub fn eccu(seed: u64) -> Self {
        TrainPlan {
            epochs: 10,
            batch_size: 8,
            loss: LossKind::MultiLabelXent,
            seed,
            shuffle: true,
            adam: AdamConfig::default(),
        }
    }

    /// Regressor schedule: batch 8; 40 epochs for anger, 15 otherwise.
    pub fn eipu(emotion: Emotion, seed: u64) -> Self {
        TrainPlan {
            epochs: if emotion == Emotion::Anger { 40 } else { 15 },
            batch_size: 8,
            loss: LossKind::Mse,
            seed,
            shuffle: true,
            adam: AdamConfig::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: ModelBundle,
    /// Mean training loss of each epoch.
    pub losses: Vec<f64>,
}

fn check_data(model: &ModelBundle, data: &[Example], plan: &TrainPlan) -> Result<()> {
    if plan.epochs == 0 || plan.batch_size == 0 {
        return Err(Error::contract("epochs and batch_size must be at least 1"));
    }
    if data.is_empty() {
        return Err(Error::contract("no training examples"));
    }
    if plan.loss != LossKind::for_model(model.config.kind) {
        return Err(Error::contract(format!(
            "{:?} loss does not fit a {:?} model",
            plan.loss, model.config.kind
        )));
    }
    let out = model.config.output_dim();
    for (i, ex) in data.iter().enumerate() {
        let ok = match (&ex.target, model.config.kind) {
            (Target::Labels(y), ModelKind::Eccu) => y.len() == out,
            (Target::Intensity(_), ModelKind::Eipu) => true,
            _ => false,
        };
        if !ok {
            return Err(Error::contract(format!(
                "example {i}: target does not match a {:?} model with {out} outputs",
                model.config.kind
            )));
        }
    }
    Ok(())
}

/// Mini-batch Adam over `data` for `plan.epochs` epochs. The last partial
/// batch is kept; batches are reshuffled each epoch from `seed + epoch`.
pub fn train(model: &ModelBundle, data: &[Example], plan: &TrainPlan) -> Result<TrainOutcome> {
    check_data(model, data, plan)?;
    let mut model = model.clone();
    let trainable: Vec<usize> = (0..ModelBundle::param_names().len())
        .filter(|&i| model.is_trainable(i))
        .collect();
    let mut adam = {
        let params = model.params();
        let tracked: Vec<&Tensor> = trainable.iter().map(|&i| params[i]).collect();
        AdamState::new(plan.adam, &tracked)
    };
    let mut dropout_rng = Rng::seed_from_u64(plan.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut losses = Vec::with_capacity(plan.epochs);

    for epoch in 0..plan.epochs {
        if plan.shuffle {
            let mut shuffle_rng = Rng::seed_from_u64(plan.seed.wrapping_add(epoch as u64 + 1));
            order.shuffle(&mut shuffle_rng);
        }
        let mut epoch_loss = 0.0;
        for batch in order.chunks(plan.batch_size) {
            let mut g = Graph::new();
            let bound = model.bind(&mut g, true)?;
            let mut per_example = Vec::with_capacity(batch.len());
            for &i in batch {
                let ex = &data[i];
                let (_, ve) = model.forward_graph(&mut g, &bound, &ex.ids, Some(&mut dropout_rng))?;
                let loss = match &ex.target {
                    Target::Labels(y) => g.bce(ve, y)?,
                    Target::Intensity(y) => g.mse(ve, &[*y])?,
                };
                per_example.push(loss);
            }
            let stacked = g.concat_cols(&per_example)?;
            let batch_loss = g.mean(stacked)?;
            epoch_loss += g.value(batch_loss).item() * batch.len() as f64;
            g.backward(batch_loss)?;
            let grads: Vec<Tensor> = trainable.iter().map(|&i| g.grad_or_zeros(bound.leaves[i])).collect();
            let mut params = model.params_mut();
            let mut tracked: Vec<&mut Tensor> = Vec::with_capacity(trainable.len());
            for (i, p) in params.iter_mut().enumerate() {
                if trainable.contains(&i) {
                    tracked.push(p);
                }
            }
            adam.step(&mut tracked, &grads)?;
            if model.embedding.trainable {
                model.embedding.zero_padding_row();
            }
        }
        let mean = epoch_loss / data.len() as f64;
        log::debug!("epoch {} loss {mean:.6}", epoch + 1);
        losses.push(mean);
    }
    Ok(TrainOutcome { model, losses })
}

/// `epoch,loss` CSV, epochs numbered from 1.
pub fn write_loss_log(path: &Path, losses: &[f64]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    let io = |e| Error::io(path, e);
    writeln!(f, "epoch,loss").map_err(io)?;
    for (i, l) in losses.iter().enumerate() {
        writeln!(f, "{},{}", i + 1, l).map_err(io)?;
    }
    f.flush().map_err(io)
}
