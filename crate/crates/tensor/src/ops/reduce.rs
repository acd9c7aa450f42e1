use crate::error::{Result, TensorError};
use crate::tensor::{Saved, Tensor};

impl Tensor {
    /// Sum of all elements, as a 0-dimensional tensor.
    pub fn sum(&self) -> Tensor {
        let s = self.data().iter().sum();
        Tensor::from_op(Vec::new(), vec![s], Saved::Sum, vec![self.clone()])
    }

    /// Mean of all elements, as a 0-dimensional tensor.
    pub fn mean(&self) -> Tensor {
        let n = self.numel().max(1) as f64;
        let s: f64 = self.data().iter().sum();
        Tensor::from_op(Vec::new(), vec![s / n], Saved::Mean, vec![self.clone()])
    }

    /// Reduce a `(rows, cols)` tensor to `(rows,)` by summing each row.
    pub fn row_sum(&self) -> Result<Tensor> {
        if self.ndim() != 2 {
            return Err(TensorError::shape("row-sum", format!("expected 2-D input, got {:?}", self.shape())));
        }
        let (rows, cols) = (self.shape()[0], self.shape()[1]);
        let d = self.data();
        let out = (0..rows).map(|r| d[r * cols..(r + 1) * cols].iter().sum()).collect();
        drop(d);
        Ok(Tensor::from_op(vec![rows], out, Saved::RowSum, vec![self.clone()]))
    }

    /// Broadcast a single-element tensor to `shape`.
    pub(crate) fn expand(&self, shape: &[usize]) -> Result<Tensor> {
        if self.numel() != 1 {
            return Err(TensorError::shape("expand", format!("source must hold one element, got {:?}", self.shape())));
        }
        let n = shape.iter().product();
        let v = self.data()[0];
        Ok(Tensor::from_op(shape.to_vec(), vec![v; n], Saved::Expand, vec![self.clone()]))
    }
}
