use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Acoustic velocity on a regular 2-D grid, stored row-major with x fastest:
/// the value at `(ix, iz)` lives at `v[iz * nx + ix]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityModel {
    pub nx: usize,
    pub nz: usize,
    /// Grid spacing in kilometres.
    pub dx_km: f64,
    /// Velocities in m/s.
    pub v: Vec<f64>,
}

impl VelocityModel {
    pub const MIN_DIM: usize = 8;

    pub fn new(nx: usize, nz: usize, dx_km: f64, v: Vec<f64>) -> Result<Self> {
        let m = VelocityModel { nx, nz, dx_km, v };
        m.validate()?;
        Ok(m)
    }

    pub fn constant(nx: usize, nz: usize, dx_km: f64, velocity: f64) -> Result<Self> {
        VelocityModel::new(nx, nz, dx_km, vec![velocity; nx * nz])
    }

    /// Build from a closure `f(ix, iz)`.
    pub fn from_fn(nx: usize, nz: usize, dx_km: f64, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let v = (0..nz).flat_map(|iz| (0..nx).map(move |ix| (ix, iz))).map(|(ix, iz)| f(ix, iz)).collect();
        VelocityModel::new(nx, nz, dx_km, v)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < Self::MIN_DIM || self.nz < Self::MIN_DIM {
            return Err(Error::InvalidModel(format!(
                "grid {}x{} is smaller than the {}x{} minimum",
                self.nx,
                self.nz,
                Self::MIN_DIM,
                Self::MIN_DIM
            )));
        }
        if self.v.len() != self.nx * self.nz {
            return Err(Error::InvalidModel(format!(
                "{} values for a {}x{} grid",
                self.v.len(),
                self.nx,
                self.nz
            )));
        }
        if !(self.dx_km.is_finite() && self.dx_km > 0.0) {
            return Err(Error::InvalidModel(format!("grid spacing {} km is not positive", self.dx_km)));
        }
        if let Some((i, v)) = self.v.iter().enumerate().find(|(_, v)| !v.is_finite() || **v <= 0.0) {
            return Err(Error::InvalidModel(format!(
                "velocity {v} at (ix={}, iz={}) is not a positive finite number",
                i % self.nx,
                i / self.nx
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn at(&self, ix: usize, iz: usize) -> f64 {
        self.v[iz * self.nx + ix]
    }

    pub fn dx_m(&self) -> f64 {
        self.dx_km * 1000.0
    }

    pub fn vmin(&self) -> f64 {
        self.v.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn vmax(&self) -> f64 {
        self.v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn same_grid(&self, other: &VelocityModel) -> bool {
        self.nx == other.nx && self.nz == other.nz
    }

    /// Copy with values replaced; grid metadata kept.
    pub fn with_values(&self, v: Vec<f64>) -> Result<Self> {
        VelocityModel::new(self.nx, self.nz, self.dx_km, v)
    }

    /// Element-wise clamp into `[lo, hi]`.
    pub fn clamp(&mut self, lo: f64, hi: f64) {
        self.v.iter_mut().for_each(|x| *x = x.clamp(lo, hi));
    }
}
