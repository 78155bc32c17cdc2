//! The two networks: a multi-label classifier over the eleven emotion
//! categories and a single-output intensity regressor. Both share the
//! Embedding → LSTM → Conv1D → MaxPool → Sigmoid stack; the max-pool output
//! (`v0`) and the sigmoid output (`ve`) are exposed as transfer features.

mod format;

use crate::autodiff::{Graph, Tensor, Var};
use crate::error::{Error, Result};
use crate::labels::EC_LABELS;
use crate::layers::{
    apply_dropout, conv1d_same_graph, dense_sigmoid_graph, ConvParams, Dense, EmbeddingTable, LstmParams, LstmVars,
    LSTM_PARAM_NAMES,
};
use crate::Rng;

pub use format::{MODEL_MAGIC, MODEL_VERSION};

/// Tweets longer than this are truncated at the end.
pub const MAX_SEQ_LEN: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    /// Multi-label emotion category classifier.
    Eccu,
    /// Single-emotion intensity regressor.
    Eipu,
}

impl ModelKind {
    pub fn output_dim(self) -> usize {
        match self {
            ModelKind::Eccu => EC_LABELS.len(),
            ModelKind::Eipu => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub embedding_dim: usize,
    pub lstm_units: usize,
    /// Drop probability applied to each LSTM output while training.
    pub lstm_dropout: f64,
    pub conv_filters: usize,
    pub kernel_size: usize,
    /// Drop probability applied after max-pooling while training.
    pub post_pool_dropout: f64,
    pub trainable_embeddings: bool,
    pub max_seq_len: usize,
}

impl ModelConfig {
    /// Classifier preset: 128 LSTM units, 128 filters of width 2, dropout 0.5.
    pub fn eccu(embedding_dim: usize) -> Self {
        ModelConfig {
            kind: ModelKind::Eccu,
            embedding_dim,
            lstm_units: 128,
            lstm_dropout: 0.5,
            conv_filters: 128,
            kernel_size: 2,
            post_pool_dropout: 0.5,
            trainable_embeddings: false,
            max_seq_len: MAX_SEQ_LEN,
        }
    }

    /// Regressor preset: 64 LSTM units, 64 filters of width 2, dropout 0.8.
    pub fn eipu(embedding_dim: usize) -> Self {
        ModelConfig {
            kind: ModelKind::Eipu,
            embedding_dim,
            lstm_units: 64,
            lstm_dropout: 0.8,
            conv_filters: 64,
            kernel_size: 2,
            post_pool_dropout: 0.8,
            trainable_embeddings: false,
            max_seq_len: MAX_SEQ_LEN,
        }
    }

    pub fn output_dim(&self) -> usize {
        self.kind.output_dim()
    }

    /// Width of the `[v0 ‖ ve]` feature tap.
    pub fn feature_dim(&self) -> usize {
        self.conv_filters + self.output_dim()
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("embedding_dim", self.embedding_dim),
            ("lstm_units", self.lstm_units),
            ("conv_filters", self.conv_filters),
            ("kernel_size", self.kernel_size),
            ("max_seq_len", self.max_seq_len),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::contract(format!("{name} must be positive")));
            }
        }
        for (name, r) in [("lstm_dropout", self.lstm_dropout), ("post_pool_dropout", self.post_pool_dropout)] {
            if !(0.0..1.0).contains(&r) {
                return Err(Error::contract(format!("{name} {r} outside [0, 1)")));
            }
        }
        Ok(())
    }
}

/// A network plus everything needed to reproduce its inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelBundle {
    pub config: ModelConfig,
    /// One name per output neuron.
    pub labels: Vec<String>,
    /// Content hash of the vocabulary the embedding rows are aligned with.
    pub vocab_hash: String,
    pub embedding: EmbeddingTable,
    pub lstm: LstmParams,
    pub conv: ConvParams,
    pub dense: Dense,
}

/// Output of one forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct Forward {
    pub v0: Vec<f64>,
    pub ve: Vec<f64>,
}

impl Forward {
    /// `[v0 ‖ ve]`.
    pub fn features(&self) -> Vec<f64> {
        self.v0.iter().chain(&self.ve).copied().collect()
    }
}

/// Default label names for a model kind; regressors are named after the
/// emotion they were trained on.
pub fn default_labels(kind: ModelKind, emotion: Option<&str>) -> Vec<String> {
    match kind {
        ModelKind::Eccu => EC_LABELS.iter().map(|s| s.to_string()).collect(),
        ModelKind::Eipu => vec![emotion.unwrap_or("intensity").to_string()],
    }
}

/// Model parameters registered on a graph.
#[derive(Clone, Debug)]
pub struct Bound {
    /// One leaf per entry of [`ModelBundle::param_names`].
    pub leaves: Vec<Var>,
    table: Var,
    lstm: LstmVars,
    conv_w: Var,
    conv_b: Var,
    dense_w: Var,
    dense_b: Var,
}

impl ModelBundle {
    /// Fresh network with initialized weights around a given embedding table.
    pub fn new(
        config: ModelConfig,
        mut embedding: EmbeddingTable,
        labels: Vec<String>,
        vocab_hash: String,
        rng: &mut Rng,
    ) -> Result<Self> {
        config.validate()?;
        embedding.trainable = config.trainable_embeddings;
        let lstm = LstmParams::init(config.embedding_dim, config.lstm_units, rng);
        let conv = ConvParams::init(config.conv_filters, config.kernel_size, config.lstm_units, rng);
        let dense = Dense::init(config.output_dim(), config.conv_filters, rng);
        let m = ModelBundle {
            config,
            labels,
            vocab_hash,
            embedding,
            lstm,
            conv,
            dense,
        };
        m.validate()?;
        Ok(m)
    }

    /// Network with every non-embedding parameter set to zero.
    pub fn zeroed(config: ModelConfig, mut embedding: EmbeddingTable, labels: Vec<String>, vocab_hash: String) -> Result<Self> {
        config.validate()?;
        embedding.trainable = config.trainable_embeddings;
        let m = ModelBundle {
            lstm: LstmParams::zeros(config.embedding_dim, config.lstm_units),
            conv: ConvParams::zeros(config.conv_filters, config.kernel_size, config.lstm_units),
            dense: Dense::zeros(config.output_dim(), config.conv_filters),
            config,
            labels,
            vocab_hash,
            embedding,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.config;
        c.validate()?;
        if self.labels.len() != c.output_dim() {
            return Err(Error::contract(format!(
                "{} labels for {} outputs",
                self.labels.len(),
                c.output_dim()
            )));
        }
        if self.embedding.dim() != c.embedding_dim {
            return Err(Error::dimension(format!(
                "embedding dim {} but config says {}",
                self.embedding.dim(),
                c.embedding_dim
            )));
        }
        self.lstm.validate()?;
        self.conv.validate()?;
        let ok = self.lstm.input_dim() == c.embedding_dim
            && self.lstm.units() == c.lstm_units
            && self.conv.filters() == c.conv_filters
            && self.conv.kernel_size() == c.kernel_size
            && self.conv.input_dim() == c.lstm_units
            && self.dense.weights.shape() == [c.output_dim(), c.conv_filters]
            && self.dense.bias.numel() == c.output_dim();
        if !ok {
            return Err(Error::dimension("layer shapes disagree with config"));
        }
        Ok(())
    }

    pub fn vocab_size(&self) -> usize {
        self.embedding.vocab_size()
    }

    /// Parameter names in serialization and binding order.
    pub fn param_names() -> Vec<&'static str> {
        let mut names = vec!["embedding"];
        names.extend(LSTM_PARAM_NAMES);
        names.extend(["conv.weights", "conv.bias", "dense.weights", "dense.bias"]);
        names
    }

    pub fn params(&self) -> Vec<&Tensor> {
        let mut p = vec![self.embedding.matrix()];
        p.extend(self.lstm.tensors());
        p.extend([&self.conv.weights, &self.conv.bias, &self.dense.weights, &self.dense.bias]);
        p
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut p = vec![self.embedding.matrix_mut()];
        p.extend(self.lstm.tensors_mut());
        p.extend([
            &mut self.conv.weights,
            &mut self.conv.bias,
            &mut self.dense.weights,
            &mut self.dense.bias,
        ]);
        p
    }

    /// Whether parameter `index` (in [`Self::param_names`] order) is updated
    /// during training.
    pub fn is_trainable(&self, index: usize) -> bool {
        index != 0 || self.embedding.trainable
    }

    /// Register parameters on `g`; with `track_grads`, trainable parameters
    /// become gradient-receiving leaves.
    pub fn bind(&self, g: &mut Graph, track_grads: bool) -> Result<Bound> {
        let leaves: Vec<Var> = self
            .params()
            .into_iter()
            .enumerate()
            .map(|(i, t)| {
                if track_grads && self.is_trainable(i) {
                    g.param(t.clone())
                } else {
                    g.constant(t.clone())
                }
            })
            .collect();
        let lstm = LstmVars::stack(g, &leaves[1..13])?;
        Ok(Bound {
            table: leaves[0],
            lstm,
            conv_w: leaves[13],
            conv_b: leaves[14],
            dense_w: leaves[15],
            dense_b: leaves[16],
            leaves,
        })
    }

    fn check_ids<'a>(&self, ids: &'a [u32]) -> Result<&'a [u32]> {
        if ids.is_empty() {
            return Err(Error::EmptySequence);
        }
        let vocab = self.vocab_size();
        if let Some(&bad) = ids.iter().find(|&&id| id as usize >= vocab) {
            return Err(Error::contract(format!("token id {bad} outside vocabulary of {vocab}")));
        }
        Ok(&ids[..ids.len().min(self.config.max_seq_len)])
    }

    /// Record a forward pass on `g`, returning `(v0, ve)` as `[1 × n]` vars.
    /// Dropout is applied iff `dropout_rng` is given.
    pub fn forward_graph(
        &self,
        g: &mut Graph,
        bound: &Bound,
        ids: &[u32],
        mut dropout_rng: Option<&mut Rng>,
    ) -> Result<(Var, Var)> {
        let ids = self.check_ids(ids)?;
        let idx: Vec<usize> = ids.iter().map(|&i| i as usize).collect();
        let emb = g.gather_rows(bound.table, &idx)?;
        let lstm_drop = match dropout_rng.as_deref_mut() {
            Some(rng) if self.config.lstm_dropout > 0.0 => Some((self.config.lstm_dropout, rng)),
            _ => None,
        };
        let hs = bound.lstm.sequence(g, emb, lstm_drop)?;
        let conv = conv1d_same_graph(g, bound.conv_w, bound.conv_b, hs)?;
        let v0 = g.max_over_rows(conv)?;
        let pooled = match dropout_rng {
            Some(rng) => apply_dropout(g, v0, self.config.post_pool_dropout, rng)?,
            None => v0,
        };
        let ve = dense_sigmoid_graph(g, bound.dense_w, bound.dense_b, pooled)?;
        Ok((v0, ve))
    }

    /// One forward pass. With `training`, dropout masks are drawn from `rng`.
    pub fn forward(&self, ids: &[u32], training: bool, rng: &mut Rng) -> Result<Forward> {
        let mut g = Graph::new();
        let bound = self.bind(&mut g, false)?;
        let (v0, ve) = self.forward_graph(&mut g, &bound, ids, training.then_some(rng))?;
        Ok(Forward {
            v0: g.value(v0).data().to_vec(),
            ve: g.value(ve).data().to_vec(),
        })
    }

    /// Reusable inference context.
    pub fn predictor(&self) -> Result<Predictor<'_>> {
        Predictor::new(self)
    }

    /// `[v0 ‖ ve]` for one tweet in inference mode.
    pub fn extract_features(&self, ids: &[u32]) -> Result<Vec<f64>> {
        Ok(self.predictor()?.forward(ids)?.features())
    }
}

/// Inference-mode forward passes over a graph whose parameter leaves are
/// bound once.
pub struct Predictor<'m> {
    model: &'m ModelBundle,
    graph: Graph,
    bound: Bound,
    mark: usize,
}

impl<'m> Predictor<'m> {
    pub fn new(model: &'m ModelBundle) -> Result<Self> {
        let mut graph = Graph::new();
        let bound = model.bind(&mut graph, false)?;
        let mark = graph.len();
        Ok(Predictor {
            model,
            graph,
            bound,
            mark,
        })
    }

    pub fn model(&self) -> &ModelBundle {
        self.model
    }

    pub fn forward(&mut self, ids: &[u32]) -> Result<Forward> {
        self.graph.truncate(self.mark);
        let (v0, ve) = self.model.forward_graph(&mut self.graph, &self.bound, ids, None)?;
        Ok(Forward {
            v0: self.graph.value(v0).data().to_vec(),
            ve: self.graph.value(ve).data().to_vec(),
        })
    }
}
