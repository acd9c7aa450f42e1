mod common;

use common::*;
use pgfwi_core::metrics::{add_awgn, snr, snr_values, ssim, ssim_with, MetricReport, SsimParams};
use pgfwi_core::wavesim::{ShotGather, VelocityModel};
use pgfwi_core::Error;
use rand::Rng;

fn mirror(i: isize, n: isize) -> usize {
    let mut i = i;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}

/// Windowed SSIM written directly from the definition: weighted local
/// means, variances and covariance per pixel over an 11x11 Gaussian window.
fn ssim_oracle(x: &[f64], y: &[f64], nx: usize, nz: usize, l: f64) -> f64 {
    let mut w = [[0.0; 11]; 11];
    let mut total = 0.0;
    for (a, row) in w.iter_mut().enumerate() {
        for (b, cell) in row.iter_mut().enumerate() {
            let (da, db) = (a as f64 - 5.0, b as f64 - 5.0);
            *cell = (-(da * da + db * db) / (2.0 * 1.5 * 1.5)).exp();
            total += *cell;
        }
    }
    let (c1, c2) = ((0.01 * l).powi(2), (0.03 * l).powi(2));
    let mut acc = 0.0;
    for iz in 0..nz as isize {
        for ix in 0..nx as isize {
            let mut pts = Vec::new();
            for a in 0..11isize {
                for b in 0..11isize {
                    let j = mirror(iz + a - 5, nz as isize) * nx + mirror(ix + b - 5, nx as isize);
                    pts.push((w[a as usize][b as usize] / total, x[j], y[j]));
                }
            }
            let mx: f64 = pts.iter().map(|p| p.0 * p.1).sum();
            let my: f64 = pts.iter().map(|p| p.0 * p.2).sum();
            let sxx: f64 = pts.iter().map(|p| p.0 * (p.1 - mx).powi(2)).sum();
            let syy: f64 = pts.iter().map(|p| p.0 * (p.2 - my).powi(2)).sum();
            let sxy: f64 = pts.iter().map(|p| p.0 * (p.1 - mx) * (p.2 - my)).sum();
            acc += (2.0 * mx * my + c1) * (2.0 * sxy + c2) / ((mx * mx + my * my + c1) * (sxx + syy + c2));
        }
    }
    acc / (nx * nz) as f64
}

fn random_pair(seed: u64) -> (VelocityModel, VelocityModel) {
    let mut r = rng(seed);
    let a: Vec<f64> = (0..256).map(|_| r.random_range(1500.0..4500.0)).collect();
    let b: Vec<f64> = a.iter().map(|v| v + r.random_range(-400.0..400.0)).collect();
    (VelocityModel::new(16, 16, 0.01, a).unwrap(), VelocityModel::new(16, 16, 0.01, b).unwrap())
}

#[test]
fn ssim_matches_windowed_oracle() {
    for seed in 0..3 {
        let (a, b) = random_pair(seed);
        let l = a.vmax() - a.vmin();
        let got = ssim(&a, &b).unwrap();
        let want = ssim_oracle(&a.v, &b.v, 16, 16, l);
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }
}

#[test]
fn ssim_identity_bound_and_symmetry() {
    let (a, b) = random_pair(9);
    assert_eq!(ssim(&a, &a).unwrap(), 1.0);
    assert!(ssim(&a, &b).unwrap() < 1.0);
    let p = SsimParams { dynamic_range: Some(3000.0), ..SsimParams::default() };
    let ab = ssim_with(&a, &b, &p).unwrap();
    let ba = ssim_with(&b, &a, &p).unwrap();
    assert!((ab - ba).abs() < 1e-14);
    let small = VelocityModel::constant(8, 8, 0.01, 2000.0).unwrap();
    assert!(matches!(ssim(&a, &small), Err(Error::Shape(_))));
}

#[test]
fn snr_examples() {
    // v = (3, 4): |v|^2 = 25; |v - v_hat|^2 = 2.5 -> 10 dB
    let d = (1.25f64).sqrt();
    let got = snr_values(&[3.0, 4.0], &[3.0 + d, 4.0 - d]).unwrap();
    assert!((got - 10.0).abs() < 1e-12, "{got}");
    let (a, b) = random_pair(4);
    assert_eq!(snr(&a, &a).unwrap(), f64::INFINITY);
    let err: f64 = a.v.iter().zip(&b.v).map(|(x, y)| (x - y).powi(2)).sum();
    let sig: f64 = a.v.iter().map(|x| x * x).sum();
    assert!((snr(&a, &b).unwrap() - 10.0 * (sig / err).log10()).abs() < 1e-10);
    assert!(matches!(snr_values(&[0.0, 0.0], &[1.0, 1.0]), Err(Error::ZeroReference)));
}

#[test]
fn snr_decreases_with_error() {
    let (a, _) = random_pair(5);
    let mut last = f64::INFINITY;
    for k in 1..6 {
        let b = a.with_values(a.v.iter().map(|v| v + 10.0 * k as f64).collect()).unwrap();
        let s = snr(&a, &b).unwrap();
        assert!(s < last);
        last = s;
    }
}

#[test]
fn awgn_hits_target_exactly() {
    let mut r = rng(8);
    let d = ShotGather::new(2, 5, 40, (0..400).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap();
    let noisy = add_awgn(&d, 10.0, 42).unwrap();
    let noise: Vec<f64> = noisy.traces.iter().zip(&d.traces).map(|(a, b)| a - b).collect();
    let measured = 10.0 * (d.energy() / noise.iter().map(|n| n * n).sum::<f64>()).log10();
    assert!((measured - 10.0).abs() < 1e-9, "{measured}");
    assert_eq!(add_awgn(&d, 10.0, 42).unwrap(), noisy);
    assert_ne!(add_awgn(&d, 10.0, 43).unwrap(), noisy);
    assert_eq!(add_awgn(&d, f64::INFINITY, 1).unwrap(), d);
    assert!(matches!(add_awgn(&ShotGather::zeros(1, 2, 3), 10.0, 0), Err(Error::ZeroEnergy)));
}

#[test]
fn report_json_uses_inf_sentinel() {
    let (a, _) = random_pair(1);
    let r = MetricReport::compute(&a, &a).unwrap();
    let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(v["ssim"], 1.0);
    assert_eq!(v["snr_db"], "inf");
}
