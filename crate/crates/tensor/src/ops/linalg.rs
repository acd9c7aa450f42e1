use crate::error::{Result, TensorError};
use crate::tensor::{Saved, Tensor};

/// `c (m×n) = alpha · op(a) · op(b) + beta · c` over row-major buffers.
/// `ta` / `tb` select the transpose of the stored matrix.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    ta: bool,
    b: &[f64],
    tb: bool,
    beta: f64,
    c: &mut [f64],
) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.iter_mut().for_each(|v| *v *= beta);
        return;
    }
    // stored a is (m,k) or, when transposed, (k,m)
    let (rsa, csa) = if ta { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if tb { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: the strides above describe exactly the buffers whose lengths
    // are asserted, and `c` does not alias `a` or `b`.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

impl Tensor {
    /// 2-D matrix product `(m,k) × (k,n)`.
    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        if self.ndim() != 2 || other.ndim() != 2 || self.shape()[1] != other.shape()[0] {
            return Err(TensorError::shape(
                "matmul",
                format!("cannot multiply {:?} by {:?}", self.shape(), other.shape()),
            ));
        }
        let (m, k, n) = (self.shape()[0], self.shape()[1], other.shape()[1]);
        let mut out = vec![0.0; m * n];
        gemm(m, k, n, &self.data(), false, &other.data(), false, 0.0, &mut out);
        Ok(Tensor::from_op(vec![m, n], out, Saved::MatMul, vec![self.clone(), other.clone()]))
    }

    /// Transpose of a 2-D tensor.
    pub fn transpose(&self) -> Result<Tensor> {
        if self.ndim() != 2 {
            return Err(TensorError::shape("transpose", format!("expected 2-D input, got {:?}", self.shape())));
        }
        let (r, c) = (self.shape()[0], self.shape()[1]);
        let out = transpose_buf(&self.data(), r, c);
        Ok(Tensor::from_op(vec![c, r], out, Saved::Transpose, vec![self.clone()]))
    }

    /// Fully connected layer: `x (B,in) · Wᵀ + b`, with `W (out,in)` and `b (out)`.
    pub fn linear(&self, weight: &Tensor, bias: Option<&Tensor>) -> Result<Tensor> {
        if self.ndim() != 2 || weight.ndim() != 2 || self.shape()[1] != weight.shape()[1] {
            return Err(TensorError::shape(
                "linear",
                format!("input {:?} incompatible with weight {:?}", self.shape(), weight.shape()),
            ));
        }
        let (batch, fan_in, fan_out) = (self.shape()[0], self.shape()[1], weight.shape()[0]);
        let mut out = vec![0.0; batch * fan_out];
        if let Some(b) = bias {
            if b.shape() != [fan_out] {
                return Err(TensorError::shape(
                    "linear",
                    format!("bias {:?} does not match {fan_out} outputs", b.shape()),
                ));
            }
            let bd = b.data();
            for row in out.chunks_mut(fan_out) {
                row.copy_from_slice(&bd);
            }
        }
        gemm(batch, fan_in, fan_out, &self.data(), false, &weight.data(), true, 1.0, &mut out);
        let mut parents = vec![self.clone(), weight.clone()];
        if let Some(b) = bias {
            parents.push(b.clone());
        }
        Ok(Tensor::from_op(vec![batch, fan_out], out, Saved::Linear, parents))
    }
}

pub(crate) fn transpose_buf(d: &[f64], r: usize, c: usize) -> Vec<f64> {
    let mut out = vec![0.0; r * c];
    for i in 0..r {
        for j in 0..c {
            out[j * r + i] = d[i * c + j];
        }
    }
    out
}
