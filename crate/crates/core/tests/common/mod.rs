#![allow(dead_code)]

use pgfwi_core::wavesim::{ricker_wavelet, AcquisitionGeometry, VelocityModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Smooth random model: a few low-wavenumber cosines around `v0`.
pub fn smooth_random_model(nx: usize, nz: usize, dx_km: f64, v0: f64, amp: f64, seed: u64) -> VelocityModel {
    let mut r = rng(seed);
    let terms: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| (r.random_range(0.5..2.0), r.random_range(0.5..2.0), r.random_range(0.0..6.28), r.random_range(-1.0..1.0)))
        .collect();
    VelocityModel::from_fn(nx, nz, dx_km, |ix, iz| {
        let (x, z) = (ix as f64 / nx as f64, iz as f64 / nz as f64);
        let s: f64 = terms
            .iter()
            .map(|&(kx, kz, ph, w)| w * (std::f64::consts::PI * (kx * x + kz * z) + ph).cos())
            .sum();
        v0 + amp * s / 4.0
    })
    .unwrap()
}

pub fn two_layer(nx: usize, nz: usize, dx_km: f64, v_top: f64, v_bottom: f64) -> VelocityModel {
    VelocityModel::from_fn(nx, nz, dx_km, |_, iz| if iz < nz / 2 { v_top } else { v_bottom }).unwrap()
}

pub fn point_geometry(src: (usize, usize), recs: Vec<(usize, usize)>, f0: f64, dt: f64, nt: usize) -> AcquisitionGeometry {
    AcquisitionGeometry {
        sources: vec![src],
        receivers: recs,
        dt,
        nt,
        wavelet: ricker_wavelet(f0, dt, nt),
        pml_width: 20,
        sponge_alpha: pgfwi_core::wavesim::DEFAULT_SPONGE_ALPHA,
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d) / norm(b).max(f64::MIN_POSITIVE)
}
