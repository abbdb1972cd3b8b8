//! Dense `f32` tensors, a reverse-mode tape, and Adam.

mod adam;
mod gradcheck;
mod graph;
pub mod ops;
mod param;
mod scalar;
mod tensor;


use thiserror::Error;

pub use adam::Adam;
pub use gradcheck::{grad_check, relative_error, GradCheckOptions, GradCheckReport, ParamCheck};
pub use graph::{Graph, Var};
pub use ops::{lstm_cell, masked_softmax, matmul, nll_loss, sigmoid, softmax, tanh, LstmWeights};
pub use param::{Gradients, ParamId, ParamStore, Parameter};
pub use scalar::Scalar;
pub use tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("every position is masked")]
    AllMasked,
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
}
