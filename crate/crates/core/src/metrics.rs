//! Model-quality metrics (SSIM, SNR) and white-noise injection.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fwi::reflect_index;
use crate::wavesim::{ShotGather, VelocityModel};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimParams {
    /// Odd window width in cells.
    pub window: usize,
    pub sigma: f64,
    /// Dynamic range `L`; `None` takes the reference model's range.
    pub dynamic_range: Option<f64>,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams { window: SSIM_WINDOW, sigma: SSIM_SIGMA, dynamic_range: None }
    }
}

/// Dynamic range used when none is given: `max − min` of `v`, falling back
/// to `max|v|` (then 1) for constant models so the constants stay positive.
pub fn default_dynamic_range(v: &VelocityModel) -> f64 {
    let range = v.vmax() - v.vmin();
    if range > 0.0 {
        range
    } else if v.vmax().abs() > 0.0 {
        v.vmax().abs()
    } else {
        1.0
    }
}

fn window_taps(window: usize, sigma: f64) -> Vec<f64> {
    let r = (window / 2) as f64;
    let taps: Vec<f64> = (0..window).map(|k| (-0.5 * ((k as f64 - r) / sigma).powi(2)).exp()).collect();
    let s: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / s).collect()
}

/// Separable weighted local mean with symmetric edge handling.
fn local_mean(x: &[f64], nx: usize, nz: usize, taps: &[f64]) -> Vec<f64> {
    let r = (taps.len() / 2) as isize;
    let mut tmp = vec![0.0; x.len()];
    for iz in 0..nz {
        for ix in 0..nx {
            tmp[iz * nx + ix] = taps
                .iter()
                .enumerate()
                .map(|(k, w)| w * x[iz * nx + reflect_index(ix as isize + k as isize - r, nx)])
                .sum();
        }
    }
    let mut out = vec![0.0; x.len()];
    for iz in 0..nz {
        for ix in 0..nx {
            out[iz * nx + ix] = taps
                .iter()
                .enumerate()
                .map(|(k, w)| w * tmp[reflect_index(iz as isize + k as isize - r, nz) * nx + ix])
                .sum();
        }
    }
    out
}

/// Mean structural similarity with the default 11×11, σ = 1.5 window.
pub fn ssim(v: &VelocityModel, v_hat: &VelocityModel) -> Result<f64> {
    ssim_with(v, v_hat, &SsimParams::default())
}

pub fn ssim_with(v: &VelocityModel, v_hat: &VelocityModel, params: &SsimParams) -> Result<f64> {
    if !v.same_grid(v_hat) {
        return Err(Error::Shape(format!(
            "ssim: {}x{} vs {}x{}",
            v.nx, v.nz, v_hat.nx, v_hat.nz
        )));
    }
    if params.window == 0 || params.window % 2 == 0 || !(params.sigma > 0.0) {
        return Err(Error::Config(format!(
            "ssim window {} must be odd and sigma {} positive",
            params.window, params.sigma
        )));
    }
    let l = params.dynamic_range.unwrap_or_else(|| default_dynamic_range(v));
    let (c1, c2) = ((0.01 * l).powi(2), (0.03 * l).powi(2));
    let taps = window_taps(params.window, params.sigma);
    let (nx, nz) = (v.nx, v.nz);
    let (x, y) = (&v.v, &v_hat.v);
    let prod = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).collect::<Vec<f64>>();
    let mx = local_mean(x, nx, nz, &taps);
    let my = local_mean(y, nx, nz, &taps);
    let mxx = local_mean(&prod(x, x), nx, nz, &taps);
    let myy = local_mean(&prod(y, y), nx, nz, &taps);
    let mxy = local_mean(&prod(x, y), nx, nz, &taps);
    let total: f64 = (0..x.len())
        .map(|i| {
            let (ux, uy) = (mx[i], my[i]);
            let sxx = mxx[i] - ux * ux;
            let syy = myy[i] - uy * uy;
            let sxy = mxy[i] - ux * uy;
            ((2.0 * ux * uy + c1) * (2.0 * sxy + c2)) / ((ux * ux + uy * uy + c1) * (sxx + syy + c2))
        })
        .sum();
    Ok(total / x.len() as f64)
}

/// `10·log10(‖v‖² / ‖v − v̂‖²)` in dB; `+∞` when the models coincide.
pub fn snr(v: &VelocityModel, v_hat: &VelocityModel) -> Result<f64> {
    if !v.same_grid(v_hat) {
        return Err(Error::Shape(format!("snr: {}x{} vs {}x{}", v.nx, v.nz, v_hat.nx, v_hat.nz)));
    }
    snr_values(&v.v, &v_hat.v)
}

pub fn snr_values(v: &[f64], v_hat: &[f64]) -> Result<f64> {
    if v.len() != v_hat.len() {
        return Err(Error::Shape(format!("snr: {} vs {} values", v.len(), v_hat.len())));
    }
    let signal: f64 = v.iter().map(|x| x * x).sum();
    if signal == 0.0 {
        return Err(Error::ZeroReference);
    }
    let err: f64 = v.iter().zip(v_hat).map(|(a, b)| (a - b).powi(2)).sum();
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (signal / err).log10())
}

/// Add white Gaussian noise rescaled so the output has exactly
/// `target_snr_db` relative to the input. `+∞` returns the input unchanged.
pub fn add_awgn(d: &ShotGather, target_snr_db: f64, seed: u64) -> Result<ShotGather> {
    let signal: f64 = d.energy();
    if signal == 0.0 {
        return Err(Error::ZeroEnergy);
    }
    if target_snr_db == f64::INFINITY {
        return Ok(d.clone());
    }
    if !target_snr_db.is_finite() {
        return Err(Error::Config(format!("target SNR {target_snr_db} dB is not a number")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> = (0..d.traces.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let drawn: f64 = noise.iter().map(|n| n * n).sum();
    let wanted = signal / 10f64.powf(target_snr_db / 10.0);
    let scale = (wanted / drawn).sqrt();
    let traces = d.traces.iter().zip(&noise).map(|(s, n)| s + scale * n).collect();
    Ok(ShotGather { ns: d.ns, nr: d.nr, nt: d.nt, traces })
}

fn ser_db<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else if *x > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub ssim: f64,
    #[serde(serialize_with = "ser_db")]
    pub snr_db: f64,
    pub window: usize,
    pub sigma: f64,
    pub dynamic_range: f64,
}

impl MetricReport {
    pub fn compute(v: &VelocityModel, v_hat: &VelocityModel) -> Result<Self> {
        let params = SsimParams::default();
        Ok(MetricReport {
            ssim: ssim_with(v, v_hat, &params)?,
            snr_db: snr(v, v_hat)?,
            window: params.window,
            sigma: params.sigma,
            dynamic_range: default_dynamic_range(v),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("metric report serializes")
    }
}
