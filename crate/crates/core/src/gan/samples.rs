//! Turning shot gathers into fixed-size discriminator samples.
//!
//! A sample is one shot, optionally trace-decimated (every `stride`-th
//! receiver starting at `offset`), bilinearly resampled to the critic's
//! input size and multiplied by a global scale. The map is linear in the
//! gather, and [`scatter_sample_grad`] is its exact adjoint.

use pgfwi_tensor::{bilinear_resample, bilinear_resample_adjoint, Tensor};
use rand::Rng;

use crate::error::Result;
use crate::wavesim::ShotGather;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleDraw {
    pub shot: usize,
    pub stride: usize,
    pub offset: usize,
}

/// Every `(shot, stride, offset)` with `stride in 1..=max_decimation`.
pub fn sample_space(ns: usize, max_decimation: usize) -> Vec<SampleDraw> {
    let mut out = Vec::new();
    for shot in 0..ns {
        for stride in 1..=max_decimation.max(1) {
            for offset in 0..stride {
                out.push(SampleDraw { shot, stride, offset });
            }
        }
    }
    out
}

/// `batch` draws with replacement, uniform over [`sample_space`].
pub fn draw_batch(rng: &mut impl Rng, space: &[SampleDraw], batch: usize) -> Vec<SampleDraw> {
    (0..batch).map(|_| space[rng.random_range(0..space.len())]).collect()
}

fn rows(nr: usize, d: &SampleDraw) -> Vec<usize> {
    let mut r: Vec<usize> = (d.offset..nr).step_by(d.stride).collect();
    if r.is_empty() {
        r.push(nr - 1);
    }
    r
}

/// One `(h, w)` sample plane.
pub fn sample_plane(g: &ShotGather, draw: &SampleDraw, size: (usize, usize), scale: f64) -> Vec<f64> {
    let rs = rows(g.nr, draw);
    let mut sub = Vec::with_capacity(rs.len() * g.nt);
    for &r in &rs {
        sub.extend_from_slice(g.trace(draw.shot, r));
    }
    let mut plane = bilinear_resample(&sub, rs.len(), g.nt, size.0, size.1);
    plane.iter_mut().for_each(|x| *x *= scale);
    plane
}

/// Batch tensor `(B, 1, h, w)`; `trainable` makes it a leaf that collects gradients.
pub fn build_batch(g: &ShotGather, draws: &[SampleDraw], size: (usize, usize), scale: f64, trainable: bool) -> Result<Tensor> {
    let data: Vec<f64> = draws.iter().flat_map(|d| sample_plane(g, d, size, scale)).collect();
    let shape = [draws.len(), 1, size.0, size.1];
    Ok(if trainable { Tensor::param(&shape, data)? } else { Tensor::from_vec(&shape, data)? })
}

/// Accumulate the adjoint of [`build_batch`] applied to `grad` into `out`.
pub fn scatter_sample_grad(grad: &[f64], draws: &[SampleDraw], size: (usize, usize), scale: f64, out: &mut ShotGather) {
    let plane = size.0 * size.1;
    for (i, d) in draws.iter().enumerate() {
        let rs = rows(out.nr, d);
        let back = bilinear_resample_adjoint(&grad[i * plane..(i + 1) * plane], rs.len(), out.nt, size.0, size.1);
        let nt = out.nt;
        for (j, &r) in rs.iter().enumerate() {
            let base = (d.shot * out.nr + r) * nt;
            for t in 0..nt {
                out.traces[base + t] += scale * back[j * nt + t];
            }
        }
    }
}
