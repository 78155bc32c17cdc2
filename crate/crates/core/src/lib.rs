//! Emotion analysis for tweets: an LSTM followed by a same-padded
//! convolution and max-pooling, trained as a multi-label emotion classifier
//! or a per-emotion intensity regressor; boosted regression trees over
//! concatenated transferred features; and masked-token Shapley attributions
//! rendered as word heatmaps.

pub mod autodiff;
pub mod config;
pub mod error;
pub mod eval;
pub mod explain;
pub mod fusion;
pub mod labels;
pub mod layers;
pub mod models;
pub mod pipeline;
pub mod preprocess;
pub mod synth;
pub mod training;

pub use error::{Error, Result};

/// Seeded generator used for every stochastic step.
pub type Rng = rand_chacha::ChaCha8Rng;
