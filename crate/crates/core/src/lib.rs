//! Physics-driven GAN full-waveform inversion.
//!
//! [`wavesim`] provides the acoustic forward operator and its adjoint,
//! [`fwi`] the iterative misfit minimization, [`nets`] the U-Net and
//! discriminator, [`gan`] the adversarial loop, [`metrics`] SSIM/SNR and
//! noise injection, and [`data`] benchmark preparation.

pub mod config;
pub mod data;
pub mod error;
pub mod fwi;
pub mod gan;
pub mod metrics;
pub mod nets;
pub mod wavesim;

pub use error::{Error, Result};
