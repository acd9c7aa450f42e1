//! `WGT1` weight files: the 4-byte magic `WGT1` followed by one record per
//! parameter until end of file. A record is
//! `u32 name_len | name (UTF-8) | u32 ndim | u64 dims[ndim] | f64 data[prod(dims)]`,
//! all little-endian.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Result, TensorError};
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 4] = b"WGT1";

#[derive(Debug, Clone, PartialEq)]
pub struct WeightRecord {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

fn io_err(e: std::io::Error) -> TensorError {
    TensorError::Checkpoint(e.to_string())
}

pub fn encode(params: &[(String, Tensor)]) -> Vec<u8> {
    let mut out = MAGIC.to_vec();
    for (name, t) in params {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(t.ndim() as u32).to_le_bytes());
        for &d in t.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in t.data().iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.buf.len() {
            return Err(TensorError::Checkpoint(format!("truncated record at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Vec<WeightRecord>> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(TensorError::Checkpoint("missing WGT1 magic".into()));
    }
    let mut cur = Cursor { buf: bytes, pos: 4 };
    let mut records = Vec::new();
    while cur.pos < bytes.len() {
        let name_len = cur.u32()? as usize;
        let name = String::from_utf8(cur.take(name_len)?.to_vec())
            .map_err(|_| TensorError::Checkpoint("parameter name is not UTF-8".into()))?;
        let ndim = cur.u32()? as usize;
        let shape = (0..ndim).map(|_| cur.u64().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let n: usize = shape.iter().product();
        let data = cur
            .take(n * 8)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        records.push(WeightRecord { name, shape, data });
    }
    Ok(records)
}

pub fn save(path: &Path, params: &[(String, Tensor)]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(io_err)?;
    f.write_all(&encode(params)).map_err(io_err)
}

pub fn load(path: &Path) -> Result<Vec<WeightRecord>> {
    let mut buf = Vec::new();
    fs::File::open(path).map_err(io_err)?.read_to_end(&mut buf).map_err(io_err)?;
    decode(&buf)
}

/// Copy records into same-named parameters, checking shapes.
pub fn restore(params: &[(String, Tensor)], records: &[WeightRecord]) -> Result<()> {
    if params.len() != records.len() {
        return Err(TensorError::Checkpoint(format!(
            "expected {} parameters, file holds {}",
            params.len(),
            records.len()
        )));
    }
    for ((name, t), rec) in params.iter().zip(records) {
        if *name != rec.name || t.shape() != rec.shape.as_slice() {
            return Err(TensorError::Checkpoint(format!(
                "record `{}` {:?} does not match parameter `{name}` {:?}",
                rec.name,
                rec.shape,
                t.shape()
            )));
        }
        t.set_data(&rec.data);
    }
    Ok(())
}
