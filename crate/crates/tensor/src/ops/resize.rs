use crate::error::{Result, TensorError};
use crate::tensor::{Saved, Tensor};

/// 1-D linear interpolation taps with corner alignment: output sample `i`
/// sits at source coordinate `i·(n_in−1)/(n_out−1)`.
pub fn linear_taps(n_in: usize, n_out: usize) -> Vec<(usize, usize, f64)> {
    (0..n_out)
        .map(|i| {
            if n_in == 1 || n_out == 1 {
                return (0, 0, 0.0);
            }
            let pos = i as f64 * (n_in - 1) as f64 / (n_out - 1) as f64;
            let lo = (pos.floor() as usize).min(n_in - 2);
            (lo, lo + 1, pos - lo as f64)
        })
        .collect()
}

/// Bilinear resampling of every trailing `(h,w)` plane of `src` to `(ho,wo)`.
pub fn bilinear_resample(src: &[f64], h: usize, w: usize, ho: usize, wo: usize) -> Vec<f64> {
    let planes = src.len() / (h * w);
    let (ty, tx) = (linear_taps(h, ho), linear_taps(w, wo));
    let mut out = Vec::with_capacity(planes * ho * wo);
    for p in 0..planes {
        let s = &src[p * h * w..(p + 1) * h * w];
        for &(y0, y1, fy) in &ty {
            for &(x0, x1, fx) in &tx {
                let top = s[y0 * w + x0] * (1.0 - fx) + s[y0 * w + x1] * fx;
                let bot = s[y1 * w + x0] * (1.0 - fx) + s[y1 * w + x1] * fx;
                out.push(top * (1.0 - fy) + bot * fy);
            }
        }
    }
    out
}

/// Adjoint of [`bilinear_resample`].
pub fn bilinear_resample_adjoint(g: &[f64], h: usize, w: usize, ho: usize, wo: usize) -> Vec<f64> {
    let planes = g.len() / (ho * wo);
    let (ty, tx) = (linear_taps(h, ho), linear_taps(w, wo));
    let mut out = vec![0.0; planes * h * w];
    for p in 0..planes {
        let d = &mut out[p * h * w..(p + 1) * h * w];
        let gp = &g[p * ho * wo..(p + 1) * ho * wo];
        for (oy, &(y0, y1, fy)) in ty.iter().enumerate() {
            for (ox, &(x0, x1, fx)) in tx.iter().enumerate() {
                let v = gp[oy * wo + ox];
                d[y0 * w + x0] += v * (1.0 - fy) * (1.0 - fx);
                d[y0 * w + x1] += v * (1.0 - fy) * fx;
                d[y1 * w + x0] += v * fy * (1.0 - fx);
                d[y1 * w + x1] += v * fy * fx;
            }
        }
    }
    out
}

impl Tensor {
    /// Resize the last two axes to `(height, width)` with corner-aligned bilinear interpolation.
    pub fn bilinear_resize(&self, height: usize, width: usize) -> Result<Tensor> {
        let nd = self.ndim();
        if nd < 2 || height == 0 || width == 0 {
            return Err(TensorError::shape(
                "bilinear-resize",
                format!("cannot resize {:?} to {height}x{width}", self.shape()),
            ));
        }
        let (h, w) = (self.shape()[nd - 2], self.shape()[nd - 1]);
        if h == 0 || w == 0 {
            return Err(TensorError::shape("bilinear-resize", "empty input plane"));
        }
        let out = bilinear_resample(&self.data(), h, w, height, width);
        let mut shape = self.shape().to_vec();
        shape[nd - 2] = height;
        shape[nd - 1] = width;
        Ok(Tensor::from_op(shape, out, Saved::BilinearResize, vec![self.clone()]))
    }
}
