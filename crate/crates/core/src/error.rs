use std::path::PathBuf;

use pgfwi_tensor::TensorError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid velocity model: {0}")]
    InvalidModel(String),

    #[error("invalid acquisition geometry: {0}")]
    InvalidGeometry(String),

    #[error("CFL violation: dt = {dt:.6e} s exceeds the stable limit {max_dt:.6e} s (dx = {dx_m} m, v_max = {v_max} m/s)")]
    Cfl { dt: f64, max_dt: f64, dx_m: f64, v_max: f64 },

    #[error("wavefield became non-finite in shot {shot} by time step {step}")]
    Unstable { shot: usize, step: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("misfit became NaN at iteration {0}")]
    NanMisfit(usize),

    #[error("loss diverged: {loss:.4e} exceeds 10x the initial {initial:.4e} at epoch {epoch}")]
    Divergence { epoch: usize, loss: f64, initial: f64 },

    #[error("non-finite {what} at epoch {epoch}")]
    NonFiniteLoss { what: &'static str, epoch: usize },

    #[error("reference model is all zeros; SNR undefined")]
    ZeroReference,

    #[error("input has zero energy")]
    ZeroEnergy,

    #[error("prepared model range [{got_min}, {got_max}] drifts more than 1% from expected [{want_min}, {want_max}]")]
    RangeDrift { got_min: f64, got_max: f64, want_min: f64, want_max: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Tensor(#[from] TensorError),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
}

impl Error {
    /// Short machine-readable category, used by the CLI's error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidModel(_) => "invalid_model",
            Error::InvalidGeometry(_) => "invalid_geometry",
            Error::Cfl { .. } => "cfl",
            Error::Unstable { .. } => "unstable",
            Error::Shape(_) => "shape",
            Error::NanMisfit(_) => "nan_misfit",
            Error::Divergence { .. } => "divergence",
            Error::NonFiniteLoss { .. } => "non_finite_loss",
            Error::ZeroReference => "zero_reference",
            Error::ZeroEnergy => "zero_energy",
            Error::RangeDrift { .. } => "range_drift",
            Error::Config(_) => "config",
            Error::Tensor(_) => "tensor",
            Error::Io { .. } => "io",
            Error::Json { .. } => "json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
