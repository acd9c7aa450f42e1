use thiserror::Error;

/// Errors raised by tensor construction, graph operations and the optimizer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("{op}: shape mismatch: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },

    #[error("backward requires a scalar loss, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),

    #[error("higher-order gradient not supported through op `{0}`")]
    UnsupportedHigherOrder(&'static str),

    #[error("tensor does not lie on the graph of the differentiated output")]
    NotOnGraph,

    #[error("parameter {index} has no gradient")]
    MissingGrad { index: usize },

    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

impl TensorError {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        TensorError::ShapeMismatch {
            op,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, TensorError>;
