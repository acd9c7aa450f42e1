use crate::error::{Result, TensorError};
use crate::tensor::{Saved, Tensor};

impl Tensor {
    pub fn reshape(&self, shape: &[usize]) -> Result<Tensor> {
        let n: usize = shape.iter().product();
        if n != self.numel() {
            return Err(TensorError::shape(
                "reshape",
                format!("cannot view {:?} as {:?}", self.shape(), shape),
            ));
        }
        Ok(Tensor::from_op(shape.to_vec(), self.to_vec(), Saved::Reshape, vec![self.clone()]))
    }

    /// Keep the leading (batch) axis and collapse the rest.
    pub fn flatten(&self) -> Result<Tensor> {
        if self.ndim() < 1 {
            return Err(TensorError::shape("flatten", "cannot flatten a 0-d tensor"));
        }
        let b = self.shape()[0];
        let rest = self.numel() / b.max(1);
        self.reshape(&[b, rest])
    }

    /// Concatenate along `axis`; all other dimensions must agree.
    pub fn concat(parts: &[Tensor], axis: usize) -> Result<Tensor> {
        let first = parts
            .first()
            .ok_or_else(|| TensorError::shape("concat", "no inputs"))?;
        let nd = first.ndim();
        if axis >= nd {
            return Err(TensorError::shape("concat", format!("axis {axis} out of range for {:?}", first.shape())));
        }
        for p in parts {
            let ok = p.ndim() == nd
                && p.shape().iter().zip(first.shape()).enumerate().all(|(i, (a, b))| i == axis || a == b);
            if !ok {
                return Err(TensorError::shape(
                    "concat",
                    format!("{:?} incompatible with {:?} along axis {axis}", p.shape(), first.shape()),
                ));
            }
        }
        let outer: usize = first.shape()[..axis].iter().product();
        let inner: usize = first.shape()[axis + 1..].iter().product();
        let total_axis: usize = parts.iter().map(|p| p.shape()[axis]).sum();
        let mut shape = first.shape().to_vec();
        shape[axis] = total_axis;
        let mut out = Vec::with_capacity(outer * total_axis * inner);
        let datas: Vec<_> = parts.iter().map(|p| p.data()).collect();
        for o in 0..outer {
            for (p, d) in parts.iter().zip(&datas) {
                let chunk = p.shape()[axis] * inner;
                out.extend_from_slice(&d[o * chunk..(o + 1) * chunk]);
            }
        }
        drop(datas);
        Ok(Tensor::from_op(shape, out, Saved::Concat { axis }, parts.to_vec()))
    }
}

/// Split a concat gradient back into per-parent pieces.
pub(crate) fn split_concat(g: &[f64], parents: &[Tensor], axis: usize) -> Vec<Vec<f64>> {
    let shape = parents[0].shape();
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let total: usize = parents.iter().map(|p| p.shape()[axis]).sum::<usize>() * inner;
    let mut pieces: Vec<Vec<f64>> = parents.iter().map(|p| Vec::with_capacity(p.numel())).collect();
    for o in 0..outer {
        let mut off = o * total;
        for (p, piece) in parents.iter().zip(pieces.iter_mut()) {
            let chunk = p.shape()[axis] * inner;
            piece.extend_from_slice(&g[off..off + chunk]);
            off += chunk;
        }
    }
    pieces
}
