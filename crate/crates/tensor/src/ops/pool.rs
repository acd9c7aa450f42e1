use std::rc::Rc;

use crate::error::{Result, TensorError};
use crate::tensor::{Saved, Tensor};

impl Tensor {
    /// 2×2 max pooling with stride 2 over the last two axes of a 3-D or 4-D
    /// tensor. Odd trailing rows/columns are dropped. Ties go to the first
    /// element in row-major order.
    pub fn maxpool2d(&self) -> Result<Tensor> {
        let nd = self.ndim();
        if nd != 3 && nd != 4 {
            return Err(TensorError::shape("maxpool2d", format!("expected (C,H,W) or (B,C,H,W), got {:?}", self.shape())));
        }
        let (h, w) = (self.shape()[nd - 2], self.shape()[nd - 1]);
        if h < 2 || w < 2 {
            return Err(TensorError::shape("maxpool2d", format!("spatial size {h}x{w} is smaller than the 2x2 window")));
        }
        let (ho, wo) = (h / 2, w / 2);
        let planes = self.numel() / (h * w);
        let x = self.data();
        let mut out = Vec::with_capacity(planes * ho * wo);
        let mut argmax = Vec::with_capacity(planes * ho * wo);
        for p in 0..planes {
            let base = p * h * w;
            for oy in 0..ho {
                for ox in 0..wo {
                    let mut best = base + 2 * oy * w + 2 * ox;
                    for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                        let idx = base + (2 * oy + dy) * w + 2 * ox + dx;
                        if x[idx] > x[best] {
                            best = idx;
                        }
                    }
                    out.push(x[best]);
                    argmax.push(best);
                }
            }
        }
        drop(x);
        let mut shape = self.shape().to_vec();
        shape[nd - 2] = ho;
        shape[nd - 1] = wo;
        Ok(Tensor::from_op(shape, out, Saved::MaxPool2d { argmax: Rc::new(argmax) }, vec![self.clone()]))
    }

    /// Scatter values to fixed input positions (the adjoint of a max-pool with
    /// frozen argmax). Used only when building gradient graphs.
    pub(crate) fn max_unpool(&self, argmax: Rc<Vec<usize>>, input_shape: &[usize]) -> Tensor {
        let n = input_shape.iter().product();
        let out = scatter(&self.data(), &argmax, n);
        Tensor::from_op(input_shape.to_vec(), out, Saved::MaxUnpool { argmax }, vec![self.clone()])
    }
}

pub(crate) fn scatter(g: &[f64], argmax: &[usize], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (&i, &v) in argmax.iter().zip(g) {
        out[i] += v;
    }
    out
}

pub(crate) fn gather(g: &[f64], argmax: &[usize]) -> Vec<f64> {
    argmax.iter().map(|&i| g[i]).collect()
}
