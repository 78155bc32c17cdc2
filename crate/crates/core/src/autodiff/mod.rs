//! Dense `f64` tensors and a reverse-mode differentiation tape.

mod graph;
mod tensor;

pub use graph::{bce_value, Graph, Var, PROB_CLAMP};
pub use tensor::{Tensor, TensorError};
