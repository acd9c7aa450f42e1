use crate::error::{Error, Result};

/// Pressure traces laid out `[shot][receiver][time]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotGather {
    pub ns: usize,
    pub nr: usize,
    pub nt: usize,
    pub traces: Vec<f64>,
}

impl ShotGather {
    pub fn zeros(ns: usize, nr: usize, nt: usize) -> Self {
        ShotGather { ns, nr, nt, traces: vec![0.0; ns * nr * nt] }
    }

    pub fn new(ns: usize, nr: usize, nt: usize, traces: Vec<f64>) -> Result<Self> {
        if traces.len() != ns * nr * nt {
            return Err(Error::Shape(format!(
                "gather ({ns}, {nr}, {nt}) needs {} samples, got {}",
                ns * nr * nt,
                traces.len()
            )));
        }
        if traces.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("gather contains non-finite samples".into()));
        }
        Ok(ShotGather { ns, nr, nt, traces })
    }

    /// Stack single-shot slices (each `nr·nt`) in shot order.
    pub fn from_shots(nr: usize, nt: usize, shots: Vec<Vec<f64>>) -> Self {
        let ns = shots.len();
        let traces = shots.into_iter().flatten().collect();
        ShotGather { ns, nr, nt, traces }
    }

    pub fn shot(&self, s: usize) -> &[f64] {
        let n = self.nr * self.nt;
        &self.traces[s * n..(s + 1) * n]
    }

    pub fn shot_mut(&mut self, s: usize) -> &mut [f64] {
        let n = self.nr * self.nt;
        &mut self.traces[s * n..(s + 1) * n]
    }

    pub fn trace(&self, s: usize, r: usize) -> &[f64] {
        let off = (s * self.nr + r) * self.nt;
        &self.traces[off..off + self.nt]
    }

    pub fn same_dims(&self, other: &ShotGather) -> bool {
        (self.ns, self.nr, self.nt) == (other.ns, other.nr, other.nt)
    }

    pub fn energy(&self) -> f64 {
        self.traces.iter().map(|v| v * v).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.traces.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
