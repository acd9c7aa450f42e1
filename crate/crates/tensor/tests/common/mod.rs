#![allow(dead_code)]

use pgfwi_tensor::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform values in [-1, 1] kept at least `gap` away from zero so that
/// kinks (relu, abs) are never straddled by a finite-difference probe.
pub fn random_vec(rng: &mut ChaCha8Rng, n: usize, gap: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let mut v: f64 = rng.random_range(-1.0..1.0);
            while v.abs() < gap {
                v = rng.random_range(-1.0..1.0);
            }
            v
        })
        .collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Central finite difference of `f` with respect to element `i` of `param`.
pub fn central_diff(param: &Tensor, i: usize, h: f64, f: &dyn Fn() -> f64) -> f64 {
    let orig = param.data()[i];
    param.update_data(|d| d[i] = orig + h);
    let fp = f();
    param.update_data(|d| d[i] = orig - h);
    let fm = f();
    param.update_data(|d| d[i] = orig);
    (fp - fm) / (2.0 * h)
}

/// Compare the stored gradient of `param` with finite differences on up to
/// `samples` indices; returns the worst relative error.
pub fn worst_fd_error(param: &Tensor, samples: usize, h: f64, rng: &mut ChaCha8Rng, f: &dyn Fn() -> f64) -> f64 {
    let g = param.grad().unwrap_or_else(|| vec![0.0; param.numel()]);
    let n = param.numel();
    let idx: Vec<usize> = if n <= samples {
        (0..n).collect()
    } else {
        (0..samples).map(|_| rng.random_range(0..n)).collect()
    };
    idx.into_iter()
        .map(|i| rel_err(g[i], central_diff(param, i, h, f)))
        .fold(0.0, f64::max)
}
