//! Benchmark models: presets, raw-grid import, downsampling, and synthetic
//! observed data.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wavesim::{self, forward_all, AcquisitionGeometry, ShotGather, VelocityModel};

/// Allowed relative drift of a prepared model's range from its preset.
pub const RANGE_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSpec {
    pub name: String,
    pub nx: usize,
    pub nz: usize,
    pub dx_km: f64,
    pub v_range: (f64, f64),
    /// Raw full-resolution grid (with a `.json` descriptor alongside).
    #[serde(default)]
    pub source_path: Option<PathBuf>,
}

impl BenchmarkSpec {
    pub fn marmousi() -> Self {
        BenchmarkSpec {
            name: "marmousi".into(),
            nx: 191,
            nz: 51,
            dx_km: 0.03,
            v_range: (1472.0, 5772.0),
            source_path: None,
        }
    }

    pub fn overthrust() -> Self {
        BenchmarkSpec {
            name: "overthrust".into(),
            nx: 251,
            nz: 81,
            dx_km: 0.05,
            v_range: (2360.0, 6000.0),
            source_path: None,
        }
    }

    pub fn toy_two_layer() -> Self {
        BenchmarkSpec {
            name: "toy-two-layer".into(),
            nx: 32,
            nz: 16,
            dx_km: 0.01,
            v_range: (2000.0, 2500.0),
            source_path: None,
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "marmousi" => Ok(Self::marmousi()),
            "overthrust" => Ok(Self::overthrust()),
            "toy-two-layer" | "toy" => Ok(Self::toy_two_layer()),
            other => Err(Error::Config(format!(
                "unknown benchmark '{other}' (expected marmousi, overthrust or toy-two-layer)"
            ))),
        }
    }

    /// Load the model this spec describes: the built-in generator for the
    /// toy, otherwise `source_path` through [`prepare_model`].
    pub fn load(&self) -> Result<VelocityModel> {
        match &self.source_path {
            Some(path) => {
                let raw = RawGrid::read(path)?;
                prepare_model(self, &raw)
            }
            None if self.name == "toy-two-layer" => toy_two_layer(self.nx, self.nz, self.dx_km, self.v_range),
            None => Err(Error::Config(format!(
                "benchmark '{}' needs source_path pointing at the raw model grid",
                self.name
            ))),
        }
    }
}

/// Two flat layers split at mid-depth, `v_range.0` above `v_range.1`.
pub fn toy_two_layer(nx: usize, nz: usize, dx_km: f64, v_range: (f64, f64)) -> Result<VelocityModel> {
    VelocityModel::from_fn(nx, nz, dx_km, |_, iz| if iz < nz / 2 { v_range.0 } else { v_range.1 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RawDtype {
    F32,
    F64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RawOrder {
    /// `x` varies fastest (row = one depth level).
    XFastest,
    /// `z` varies fastest (common for SEG-Y derived dumps, one trace per column).
    ZFastest,
}

/// Descriptor stored next to a raw grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDescriptor {
    pub nx: usize,
    pub nz: usize,
    pub dtype: RawDtype,
    pub order: RawOrder,
}

/// A full-resolution grid, re-ordered to `x` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct RawGrid {
    pub nx: usize,
    pub nz: usize,
    pub values: Vec<f64>,
}

impl RawGrid {
    /// Read `path` using the descriptor at `path.with_extension("json")`.
    pub fn read(path: &Path) -> Result<Self> {
        let desc: RawDescriptor = wavesim::io::read_json(&wavesim::io::sidecar_path(path))?;
        Self::read_with(path, &desc)
    }

    pub fn read_with(path: &Path, desc: &RawDescriptor) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let n = desc.nx * desc.nz;
        let width = match desc.dtype {
            RawDtype::F32 => 4,
            RawDtype::F64 => 8,
        };
        if bytes.len() != n * width {
            return Err(Error::Shape(format!(
                "{}: descriptor says {}x{} {:?} ({} bytes), file has {} bytes",
                path.display(),
                desc.nx,
                desc.nz,
                desc.dtype,
                n * width,
                bytes.len()
            )));
        }
        let flat: Vec<f64> = match desc.dtype {
            RawDtype::F32 => bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect(),
            RawDtype::F64 => bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect(),
        };
        let values = match desc.order {
            RawOrder::XFastest => flat,
            RawOrder::ZFastest => {
                let mut out = vec![0.0; n];
                for ix in 0..desc.nx {
                    for iz in 0..desc.nz {
                        out[iz * desc.nx + ix] = flat[ix * desc.nz + iz];
                    }
                }
                out
            }
        };
        Ok(RawGrid { nx: desc.nx, nz: desc.nz, values })
    }
}

/// Overlap weights of target cells on source cells along one axis:
/// target cell `t` covers `[t·n/m, (t+1)·n/m)` in source index space.
fn overlap_weights(n: usize, m: usize) -> Vec<Vec<(usize, f64)>> {
    let ratio = n as f64 / m as f64;
    (0..m)
        .map(|t| {
            let (a, b) = (t as f64 * ratio, (t + 1) as f64 * ratio);
            let first = a.floor() as usize;
            let last = (b.ceil() as usize).min(n);
            (first..last)
                .filter_map(|s| {
                    let w = (b.min(s as f64 + 1.0) - a.max(s as f64)) / ratio;
                    (w > 0.0).then_some((s, w))
                })
                .collect()
        })
        .collect()
}

/// Area-weighted average of an `nx×nz` grid (x fastest) onto `tnx×tnz`.
/// Integer ratios reduce to plain block means.
pub fn area_downsample(values: &[f64], nx: usize, nz: usize, tnx: usize, tnz: usize) -> Result<Vec<f64>> {
    if values.len() != nx * nz {
        return Err(Error::Shape(format!("{} values for a {nx}x{nz} grid", values.len())));
    }
    if tnx == 0 || tnz == 0 || tnx > nx || tnz > nz {
        return Err(Error::Shape(format!("cannot downsample {nx}x{nz} to {tnx}x{tnz}")));
    }
    let wx = overlap_weights(nx, tnx);
    let wz = overlap_weights(nz, tnz);
    let mut out = vec![0.0; tnx * tnz];
    for (tz, rows) in wz.iter().enumerate() {
        for (tx, cols) in wx.iter().enumerate() {
            let mut acc = 0.0;
            for &(sz, a) in rows {
                for &(sx, b) in cols {
                    acc += a * b * values[sz * nx + sx];
                }
            }
            out[tz * tnx + tx] = acc;
        }
    }
    Ok(out)
}

/// Downsample `raw` to the spec's grid and check its velocity range.
pub fn prepare_model(spec: &BenchmarkSpec, raw: &RawGrid) -> Result<VelocityModel> {
    let values = if (raw.nx, raw.nz) == (spec.nx, spec.nz) {
        raw.values.clone()
    } else {
        area_downsample(&raw.values, raw.nx, raw.nz, spec.nx, spec.nz)?
    };
    let model = VelocityModel::new(spec.nx, spec.nz, spec.dx_km, values)?;
    check_range(&model, spec.v_range)?;
    Ok(model)
}

/// Fail when either end of the model's range is more than 1% off `want`.
pub fn check_range(model: &VelocityModel, want: (f64, f64)) -> Result<()> {
    let (lo, hi) = (model.vmin(), model.vmax());
    let off = |got: f64, want: f64| (got - want).abs() > RANGE_TOLERANCE * want.abs();
    if off(lo, want.0) || off(hi, want.1) {
        return Err(Error::RangeDrift { got_min: lo, got_max: hi, want_min: want.0, want_max: want.1 });
    }
    Ok(())
}

/// Noise-free data for every shot on the true model.
pub fn synthesize_observed(model: &VelocityModel, geom: &AcquisitionGeometry) -> Result<ShotGather> {
    forward_all(model, geom)
}

/// Default acquisition for a benchmark: `n_sources` surface shots, a
/// receiver at every surface cell, Ricker source.
pub fn default_geometry(spec: &BenchmarkSpec, n_sources: usize, f0: f64, dt: f64, duration_s: f64) -> AcquisitionGeometry {
    let nt = (duration_s / dt).round() as usize;
    AcquisitionGeometry::surface(spec.nx, n_sources, 1, 0, dt, nt, f0)
}
