use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wavesim::model::VelocityModel;

/// Default sponge width in cells.
pub const DEFAULT_PML_WIDTH: usize = 20;
/// Default Cerjan decay constant: `d(k) = exp(-(alpha * k)^2)` at `k` cells into the sponge.
pub const DEFAULT_SPONGE_ALPHA: f64 = 0.015;

/// Ricker wavelet `(1 − 2π²f0²τ²)·exp(−π²f0²τ²)` sampled at `t = n·dt`,
/// with `τ = t − 1.5/f0` so the peak (value 1) sits at `1.5/f0`.
pub fn ricker_wavelet(f0: f64, dt: f64, nt: usize) -> Vec<f64> {
    assert!(f0 > 0.0 && dt > 0.0, "ricker: f0 and dt must be positive");
    let delay = 1.5 / f0;
    (0..nt)
        .map(|n| {
            let tau = n as f64 * dt - delay;
            let arg = (PI * f0 * tau).powi(2);
            (1.0 - 2.0 * arg) * (-arg).exp()
        })
        .collect()
}

/// Largest stable time step for the 2nd-order 5-point scheme: `dx / (v_max·√2)`.
pub fn max_stable_dt(dx_m: f64, v_max: f64) -> f64 {
    dx_m / (v_max * std::f64::consts::SQRT_2)
}

/// Accept `dt` iff it satisfies the CFL bound for `model`.
pub fn check_cfl(model: &VelocityModel, dt: f64) -> Result<()> {
    let (dx_m, v_max) = (model.dx_m(), model.vmax());
    let max_dt = max_stable_dt(dx_m, v_max);
    if dt > max_dt {
        return Err(Error::Cfl { dt, max_dt, dx_m, v_max });
    }
    Ok(())
}

/// Sources, receivers and time axis. Receivers are shared by all shots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionGeometry {
    /// `(ix, iz)` grid indices.
    pub sources: Vec<(usize, usize)>,
    pub receivers: Vec<(usize, usize)>,
    pub dt: f64,
    pub nt: usize,
    /// Source time function, `nt` samples.
    pub wavelet: Vec<f64>,
    pub pml_width: usize,
    #[serde(default = "default_alpha")]
    pub sponge_alpha: f64,
}

fn default_alpha() -> f64 {
    DEFAULT_SPONGE_ALPHA
}

impl AcquisitionGeometry {
    /// Surface acquisition: `n_sources` shots spread evenly along row `depth`,
    /// a receiver at every `receiver_step`-th grid point of the same row,
    /// Ricker wavelet of dominant frequency `f0`.
    pub fn surface(nx: usize, n_sources: usize, receiver_step: usize, depth: usize, dt: f64, nt: usize, f0: f64) -> Self {
        let n_sources = n_sources.max(1);
        let sources = (0..n_sources)
            .map(|i| (((2 * i + 1) * nx) / (2 * n_sources), depth))
            .collect();
        let receivers = (0..nx).step_by(receiver_step.max(1)).map(|ix| (ix, depth)).collect();
        AcquisitionGeometry {
            sources,
            receivers,
            dt,
            nt,
            wavelet: ricker_wavelet(f0, dt, nt),
            pml_width: DEFAULT_PML_WIDTH,
            sponge_alpha: DEFAULT_SPONGE_ALPHA,
        }
    }

    pub fn ns(&self) -> usize {
        self.sources.len()
    }

    pub fn nr(&self) -> usize {
        self.receivers.len()
    }

    /// Recording length `dt·nt` in seconds.
    pub fn duration(&self) -> f64 {
        self.dt * self.nt as f64
    }

    pub fn validate(&self, model: &VelocityModel) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidGeometry(msg));
        if self.sources.is_empty() {
            return bad("at least one source is required".into());
        }
        if self.receivers.is_empty() {
            return bad("at least one receiver is required".into());
        }
        if !(self.dt.is_finite() && self.dt > 0.0) || self.nt == 0 {
            return bad(format!("time axis dt={} nt={} is empty", self.dt, self.nt));
        }
        if self.wavelet.len() != self.nt {
            return bad(format!("wavelet has {} samples, expected nt={}", self.wavelet.len(), self.nt));
        }
        if self.wavelet.iter().any(|w| !w.is_finite()) {
            return bad("wavelet contains non-finite samples".into());
        }
        if !(self.sponge_alpha.is_finite() && self.sponge_alpha >= 0.0) {
            return bad(format!("sponge_alpha {} must be finite and non-negative", self.sponge_alpha));
        }
        for (kind, list) in [("source", &self.sources), ("receiver", &self.receivers)] {
            if let Some(&(ix, iz)) = list.iter().find(|&&(ix, iz)| ix >= model.nx || iz >= model.nz) {
                return bad(format!("{kind} at ({ix}, {iz}) lies outside the {}x{} grid", model.nx, model.nz));
            }
        }
        Ok(())
    }
}
