//! On-disk formats. Both payloads are raw little-endian `f64` with a JSON
//! sidecar next to them (same stem, `.json` extension).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{AcquisitionGeometry, ShotGather, VelocityModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelHeader {
    pub nx: usize,
    pub nz: usize,
    pub dx_km: f64,
    pub vmin: f64,
    pub vmax: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatherHeader {
    pub ns: usize,
    pub nr: usize,
    pub nt: usize,
    pub geometry: AcquisitionGeometry,
    /// True for observed (reference) data, false for simulated.
    #[serde(default)]
    pub observed: bool,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn write_f64_le(path: &Path, values: &[f64]) -> Result<()> {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_f64_le(path: &Path, expected: usize) -> Result<Vec<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != expected * 8 {
        return Err(Error::Shape(format!(
            "{}: expected {} f64 values ({} bytes), found {} bytes",
            path.display(),
            expected,
            expected * 8,
            bytes.len()
        )));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

pub fn save_model(path: &Path, model: &VelocityModel) -> Result<()> {
    write_f64_le(path, &model.v)?;
    let header = ModelHeader {
        nx: model.nx,
        nz: model.nz,
        dx_km: model.dx_km,
        vmin: model.vmin(),
        vmax: model.vmax(),
    };
    write_json(&sidecar_path(path), &header)
}

pub fn load_model(path: &Path) -> Result<VelocityModel> {
    let header: ModelHeader = read_json(&sidecar_path(path))?;
    let v = read_f64_le(path, header.nx * header.nz)?;
    VelocityModel::new(header.nx, header.nz, header.dx_km, v)
}

pub fn save_gather(path: &Path, gather: &ShotGather, geometry: &AcquisitionGeometry, observed: bool) -> Result<()> {
    write_f64_le(path, &gather.traces)?;
    let header = GatherHeader {
        ns: gather.ns,
        nr: gather.nr,
        nt: gather.nt,
        geometry: geometry.clone(),
        observed,
    };
    write_json(&sidecar_path(path), &header)
}

pub fn load_gather(path: &Path) -> Result<(ShotGather, GatherHeader)> {
    let header: GatherHeader = read_json(&sidecar_path(path))?;
    let traces = read_f64_le(path, header.ns * header.nr * header.nt)?;
    let gather = ShotGather::new(header.ns, header.nr, header.nt, traces)?;
    Ok((gather, header))
}
