//! Adjoint-state FWI: Adam on the velocity grid, plus initial-model builders.

use std::fmt::Write as _;
use std::path::Path;

use pgfwi_tensor::AdamState;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wavesim::{misfit_gradient, AcquisitionGeometry, ShotGather, VelocityModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FwiConfig {
    pub n_iters: usize,
    /// Adam step size in m/s.
    pub lr: f64,
    pub v_clip: (f64, f64),
    /// Number of top rows held fixed (0 = none).
    pub water_top_freeze: usize,
    /// Write a model snapshot every this many iterations (0 = never).
    pub snapshot_every: usize,
}

impl Default for FwiConfig {
    fn default() -> Self {
        FwiConfig { n_iters: 10, lr: 10.0, v_clip: (1000.0, 6000.0), water_top_freeze: 0, snapshot_every: 0 }
    }
}

impl FwiConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.v_clip;
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(Error::Config(format!("fwi.v_clip ({lo}, {hi}) must satisfy 0 < min < max")));
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(Error::Config(format!("fwi.lr {} must be finite and non-negative", self.lr)));
        }
        Ok(())
    }
}

/// Result of [`fwi_refine`]: the updated model and the misfit evaluated at
/// the start of every iteration.
#[derive(Debug, Clone)]
pub struct FwiRun {
    pub model: VelocityModel,
    pub history: Vec<f64>,
}

/// Run `cfg.n_iters` Adam iterations on the misfit, clamping after each.
pub fn fwi_refine(
    v0: &VelocityModel,
    d_obs: &ShotGather,
    geom: &AcquisitionGeometry,
    cfg: &FwiConfig,
) -> Result<FwiRun> {
    let mut adam = AdamState::new(cfg.lr);
    fwi_refine_with(v0, d_obs, geom, cfg, &mut adam, |_, _, _| Ok(()))
}

/// [`fwi_refine`] with caller-owned Adam state and a per-iteration hook
/// `observe(iteration, model_after_update, misfit_before_update)`.
pub fn fwi_refine_with(
    v0: &VelocityModel,
    d_obs: &ShotGather,
    geom: &AcquisitionGeometry,
    cfg: &FwiConfig,
    adam: &mut AdamState,
    mut observe: impl FnMut(usize, &VelocityModel, f64) -> Result<()>,
) -> Result<FwiRun> {
    cfg.validate()?;
    let mut model = v0.clone();
    let mut history = Vec::with_capacity(cfg.n_iters);
    let frozen = cfg.water_top_freeze.min(model.nz) * model.nx;
    for it in 0..cfg.n_iters {
        let (e, mut g) = misfit_gradient(&model, geom, d_obs)?;
        if e.is_nan() {
            return Err(Error::NanMisfit(it));
        }
        history.push(e);
        g[..frozen].iter_mut().for_each(|x| *x = 0.0);
        adam.step_slices(&mut [model.v.as_mut_slice()], &[g.as_slice()]);
        model.clamp(cfg.v_clip.0, cfg.v_clip.1);
        observe(it, &model, e)?;
    }
    Ok(FwiRun { model, history })
}

/// `iteration,E` rows.
pub fn misfit_csv(history: &[f64]) -> String {
    let mut out = String::from("iteration,E\n");
    for (i, e) in history.iter().enumerate() {
        let _ = writeln!(out, "{i},{e:e}");
    }
    out
}

pub fn write_misfit_csv(path: &Path, history: &[f64]) -> Result<()> {
    std::fs::write(path, misfit_csv(history)).map_err(|e| Error::io(path, e))
}

/// Normalized 1-D Gaussian taps for offsets `-r..=r`, `r = ⌊4σ + 0.5⌋`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let r = (4.0 * sigma + 0.5) as usize;
    let taps: Vec<f64> = (0..=2 * r)
        .map(|k| {
            let x = k as f64 - r as f64;
            (-0.5 * (x / sigma).powi(2)).exp()
        })
        .collect();
    let total: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / total).collect()
}

/// Mirror an out-of-range index back into `0..n`, repeating the edge
/// sample (`… c b a | a b c …`).
pub fn reflect_index(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}

/// Separable Gaussian blur of `model` with standard deviation `sigma` cells.
pub fn make_initial_gaussian(model: &VelocityModel, sigma: f64) -> Result<VelocityModel> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::Config(format!("sigma {sigma} must be finite and non-negative")));
    }
    if sigma == 0.0 {
        return Ok(model.clone());
    }
    let taps = gaussian_kernel(sigma);
    let r = (taps.len() / 2) as isize;
    let (nx, nz) = (model.nx, model.nz);
    let mut tmp = vec![0.0; nx * nz];
    for iz in 0..nz {
        for ix in 0..nx {
            tmp[iz * nx + ix] = taps
                .iter()
                .enumerate()
                .map(|(k, w)| w * model.v[iz * nx + reflect_index(ix as isize + k as isize - r, nx)])
                .sum();
        }
    }
    let mut out = vec![0.0; nx * nz];
    for iz in 0..nz {
        for ix in 0..nx {
            out[iz * nx + ix] = taps
                .iter()
                .enumerate()
                .map(|(k, w)| w * tmp[reflect_index(iz as isize + k as isize - r, nz) * nx + ix])
                .sum();
        }
    }
    model.with_values(out)
}

/// Row values `v_top + (v_bottom − v_top)·iz/(nz−1)` for `iz in 0..nz`.
pub fn linear_profile(v_top: f64, v_bottom: f64, nz: usize) -> Result<Vec<f64>> {
    if nz < 2 {
        return Err(Error::InvalidModel("linear initial model needs nz >= 2".into()));
    }
    Ok((0..nz).map(|iz| v_top + (v_bottom - v_top) * iz as f64 / (nz - 1) as f64).collect())
}

/// Depth-linear model from `v_top` (row 0) to `v_bottom` (row `nz-1`), constant along x.
pub fn make_initial_linear(v_top: f64, v_bottom: f64, nx: usize, nz: usize, dx_km: f64) -> Result<VelocityModel> {
    let rows = linear_profile(v_top, v_bottom, nz)?;
    VelocityModel::from_fn(nx, nz, dx_km, |_, iz| rows[iz])
}
