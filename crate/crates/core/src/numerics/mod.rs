//! Dense tensors with a recorded computation trace and reverse-mode
//! gradients.
//!
//! A [`Graph`] borrows a [`ParamStore`] and records every operation applied
//! to its nodes. Forward values are computed eagerly; [`Graph::backward`]
//! accumulates gradients for every registered parameter.

mod gradcheck;
mod graph;
mod params;
mod tensor;

pub use gradcheck::grad_check;
pub use graph::{Graph, Var};
pub use params::{GradientMap, ParamId, ParamStore};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("shape mismatch in {op}: operand shapes {shapes:?}")]
    ShapeMismatch { op: &'static str, shapes: Vec<Vec<usize>> },

    #[error("tensor of shape {shape:?} cannot hold {len} values")]
    DataLength { shape: Vec<usize>, len: usize },

    #[error("non-finite value produced by {op}")]
    NonFinite { op: &'static str },

    #[error("loss must have a single element, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },

    #[error("index {index} out of range for {op} over {bound} entries")]
    IndexOutOfRange {
        op: &'static str,
        index: usize,
        bound: usize,
    },

    #[error("finite-difference step {0} outside [1e-7, 1e-3]")]
    InvalidEpsilon(f64),
}

impl NumericsError {
    pub(crate) fn shapes(op: &'static str, shapes: &[&[usize]]) -> Self {
        NumericsError::ShapeMismatch {
            op,
            shapes: shapes.iter().map(|s| s.to_vec()).collect(),
        }
    }
}
