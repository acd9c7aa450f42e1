//! Figure-ready model exports: binary PGM and a plain CSV grid.

use std::fmt::Write as _;

use pgfwi_core::wavesim::VelocityModel;

/// Gray level of `v` for a fixed `(vmin, vmax)` window, clamped to 0..=255.
pub fn gray(v: f64, vmin: f64, vmax: f64) -> u8 {
    let t = if vmax > vmin { (v - vmin) / (vmax - vmin) } else { 0.0 };
    (255.0 * t).round().clamp(0.0, 255.0) as u8
}

/// Binary (P5) PGM, one row per depth level.
pub fn pgm(model: &VelocityModel, vmin: f64, vmax: f64) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", model.nx, model.nz).into_bytes();
    out.extend(model.v.iter().map(|&v| gray(v, vmin, vmax)));
    out
}

/// `nz` lines of `nx` comma-separated velocities.
pub fn csv(model: &VelocityModel) -> String {
    let mut out = String::new();
    for row in model.v.chunks(model.nx) {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    out
}
