//! Dense matrices and a small reverse-mode autodiff tape.

mod array;
mod gradcheck;
mod tape;

use thiserror::Error;

pub use array::Array;
pub use gradcheck::{grad_check, relative_error, GradCheckReport, GradEntry, GRAD_CHECK_MAX_PARAMS};
pub use tape::{Gradients, Tape, Var};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorError {
    #[error("{op}: shape mismatch ({detail})")]
    Shape { op: &'static str, detail: String },
    #[error("loss must be 1x1, got {rows}x{cols}")]
    NonScalarLoss { rows: usize, cols: usize },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("log_softmax: every entry of row {row} is masked")]
    AllMasked { row: usize },
    #[error("gradient check limited to {limit} parameters, got {count}")]
    TooManyParams { count: usize, limit: usize },
}

impl TensorError {
    pub(crate) fn shape(op: &'static str, detail: String) -> Self {
        TensorError::Shape { op, detail }
    }
}
