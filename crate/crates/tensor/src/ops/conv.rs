//! 2-D convolution and transposed convolution via im2col + GEMM.
//!
//! Layouts follow the usual NCHW convention. A 3-D input `(C,H,W)` is
//! treated as a batch of one and the output keeps the 3-D shape.
//! Kernels: conv2d `(C_out, C_in, kh, kw)`; conv-transpose2d
//! `(C_in, C_out, kh, kw)`, so a conv2d kernel reused as a transposed-conv
//! kernel computes the adjoint of the original convolution.

use crate::error::{Result, TensorError};
use crate::ops::linalg::gemm;
use crate::tensor::{Saved, Tensor};

#[derive(Debug, Clone, Copy)]
pub(crate) struct Geom {
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub kh: usize,
    pub kw: usize,
    pub stride: usize,
    pub pad: usize,
    pub ho: usize,
    pub wo: usize,
}

impl Geom {
    fn col_rows(&self) -> usize {
        self.c * self.kh * self.kw
    }
    fn col_cols(&self) -> usize {
        self.ho * self.wo
    }
}

pub(crate) fn im2col(img: &[f64], g: &Geom, col: &mut [f64]) {
    let (hw_out, pad) = (g.col_cols(), g.pad as isize);
    for c in 0..g.c {
        let plane = &img[c * g.h * g.w..(c + 1) * g.h * g.w];
        for ki in 0..g.kh {
            for kj in 0..g.kw {
                let row = (c * g.kh + ki) * g.kw + kj;
                let dst = &mut col[row * hw_out..(row + 1) * hw_out];
                for oy in 0..g.ho {
                    let iy = (oy * g.stride + ki) as isize - pad;
                    let line = &mut dst[oy * g.wo..(oy + 1) * g.wo];
                    if iy < 0 || iy >= g.h as isize {
                        line.iter_mut().for_each(|v| *v = 0.0);
                        continue;
                    }
                    let src = &plane[iy as usize * g.w..(iy as usize + 1) * g.w];
                    for (ox, v) in line.iter_mut().enumerate() {
                        let ix = (ox * g.stride + kj) as isize - pad;
                        *v = if ix < 0 || ix >= g.w as isize { 0.0 } else { src[ix as usize] };
                    }
                }
            }
        }
    }
}

/// Adjoint of `im2col`: scatter-add columns back into an image.
pub(crate) fn col2im(col: &[f64], g: &Geom, img: &mut [f64]) {
    let (hw_out, pad) = (g.col_cols(), g.pad as isize);
    for c in 0..g.c {
        let plane = &mut img[c * g.h * g.w..(c + 1) * g.h * g.w];
        for ki in 0..g.kh {
            for kj in 0..g.kw {
                let row = (c * g.kh + ki) * g.kw + kj;
                let src = &col[row * hw_out..(row + 1) * hw_out];
                for oy in 0..g.ho {
                    let iy = (oy * g.stride + ki) as isize - pad;
                    if iy < 0 || iy >= g.h as isize {
                        continue;
                    }
                    let dst = &mut plane[iy as usize * g.w..(iy as usize + 1) * g.w];
                    for ox in 0..g.wo {
                        let ix = (ox * g.stride + kj) as isize - pad;
                        if ix >= 0 && ix < g.w as isize {
                            dst[ix as usize] += src[oy * g.wo + ox];
                        }
                    }
                }
            }
        }
    }
}

/// Split a 3-D or 4-D image tensor shape into `(batch, c, h, w, was_3d)`.
fn nchw(op: &'static str, shape: &[usize]) -> Result<(usize, usize, usize, usize, bool)> {
    match *shape {
        [c, h, w] => Ok((1, c, h, w, true)),
        [b, c, h, w] => Ok((b, c, h, w, false)),
        _ => Err(TensorError::shape(op, format!("expected (C,H,W) or (B,C,H,W), got {shape:?}"))),
    }
}

fn out_shape(b: usize, c: usize, h: usize, w: usize, three_d: bool) -> Vec<usize> {
    if three_d {
        vec![c, h, w]
    } else {
        vec![b, c, h, w]
    }
}

fn check_bias(op: &'static str, bias: Option<&Tensor>, c_out: usize) -> Result<()> {
    if let Some(b) = bias {
        if b.shape() != [c_out] {
            return Err(TensorError::shape(op, format!("bias {:?} does not match {c_out} output channels", b.shape())));
        }
    }
    Ok(())
}

fn add_bias(out: &mut [f64], bias: Option<&Tensor>, c_out: usize, plane: usize) {
    if let Some(b) = bias {
        let bd = b.data();
        for (i, chunk) in out.chunks_mut(plane).enumerate() {
            let v = bd[i % c_out];
            chunk.iter_mut().for_each(|x| *x += v);
        }
    }
}

/// Geometry of a conv2d call: input `(B,C,H,W)`, kernel `(Co,Ci,kh,kw)`.
pub(crate) fn conv2d_geom(x_shape: &[usize], k_shape: &[usize], stride: usize, pad: usize) -> Result<(usize, usize, Geom, bool)> {
    let (b, c, h, w, three_d) = nchw("conv2d", x_shape)?;
    let [co, ci, kh, kw] = *k_shape else {
        return Err(TensorError::shape("conv2d", format!("kernel must be (C_out,C_in,kh,kw), got {k_shape:?}")));
    };
    if ci != c {
        return Err(TensorError::shape(
            "conv2d",
            format!("input has {c} channels but kernel expects C_in={ci}"),
        ));
    }
    if stride == 0 || h + 2 * pad < kh || w + 2 * pad < kw {
        return Err(TensorError::shape(
            "conv2d",
            format!("kernel {kh}x{kw} (stride {stride}, pad {pad}) does not fit input {h}x{w}"),
        ));
    }
    let ho = (h + 2 * pad - kh) / stride + 1;
    let wo = (w + 2 * pad - kw) / stride + 1;
    Ok((b, co, Geom { c, h, w, kh, kw, stride, pad, ho, wo }, three_d))
}

/// Geometry of a conv-transpose2d call, expressed as the conv2d it is the adjoint of:
/// the returned `Geom` describes the *output* image and the input plays the role of columns.
pub(crate) fn convt_geom(x_shape: &[usize], k_shape: &[usize], stride: usize, pad: usize) -> Result<(usize, usize, Geom, bool)> {
    let (b, c, h, w, three_d) = nchw("conv-transpose2d", x_shape)?;
    let [ci, co, kh, kw] = *k_shape else {
        return Err(TensorError::shape(
            "conv-transpose2d",
            format!("kernel must be (C_in,C_out,kh,kw), got {k_shape:?}"),
        ));
    };
    if ci != c {
        return Err(TensorError::shape(
            "conv-transpose2d",
            format!("input has {c} channels but kernel expects C_in={ci}"),
        ));
    }
    let full_h = stride * (h.max(1) - 1) + kh;
    let full_w = stride * (w.max(1) - 1) + kw;
    if stride == 0 || h == 0 || w == 0 || full_h <= 2 * pad || full_w <= 2 * pad {
        return Err(TensorError::shape(
            "conv-transpose2d",
            format!("kernel {kh}x{kw} (stride {stride}, pad {pad}) gives empty output for input {h}x{w}"),
        ));
    }
    let ho = full_h - 2 * pad;
    let wo = full_w - 2 * pad;
    Ok((b, co, Geom { c: co, h: ho, w: wo, kh, kw, stride, pad, ho: h, wo: w }, three_d))
}

impl Tensor {
    /// Zero-padded 2-D cross-correlation.
    pub fn conv2d(&self, kernel: &Tensor, bias: Option<&Tensor>, stride: usize, pad: usize) -> Result<Tensor> {
        let (batch, co, g, three_d) = conv2d_geom(self.shape(), kernel.shape(), stride, pad)?;
        check_bias("conv2d", bias, co)?;
        let (k_rows, k_cols) = (g.col_rows(), g.col_cols());
        let mut out = vec![0.0; batch * co * k_cols];
        let mut col = vec![0.0; k_rows * k_cols];
        {
            let x = self.data();
            let w = kernel.data();
            let in_sz = g.c * g.h * g.w;
            for b in 0..batch {
                im2col(&x[b * in_sz..(b + 1) * in_sz], &g, &mut col);
                gemm(co, k_rows, k_cols, &w, false, &col, false, 0.0, &mut out[b * co * k_cols..(b + 1) * co * k_cols]);
            }
        }
        add_bias(&mut out, bias, co, k_cols);
        let mut parents = vec![self.clone(), kernel.clone()];
        parents.extend(bias.cloned());
        Ok(Tensor::from_op(
            out_shape(batch, co, g.ho, g.wo, three_d),
            out,
            Saved::Conv2d { stride, pad },
            parents,
        ))
    }

    /// Transposed convolution; output size `stride·(in−1) + k − 2·pad`.
    pub fn conv_transpose2d(&self, kernel: &Tensor, bias: Option<&Tensor>, stride: usize, pad: usize) -> Result<Tensor> {
        let (batch, co, g, three_d) = convt_geom(self.shape(), kernel.shape(), stride, pad)?;
        check_bias("conv-transpose2d", bias, co)?;
        let ci = kernel.shape()[0];
        let (k_rows, k_cols) = (g.col_rows(), g.col_cols());
        let out_sz = co * g.h * g.w;
        let mut out = vec![0.0; batch * out_sz];
        let mut col = vec![0.0; k_rows * k_cols];
        {
            let x = self.data();
            let w = kernel.data();
            for b in 0..batch {
                gemm(k_rows, ci, k_cols, &w, true, &x[b * ci * k_cols..(b + 1) * ci * k_cols], false, 0.0, &mut col);
                col2im(&col, &g, &mut out[b * out_sz..(b + 1) * out_sz]);
            }
        }
        add_bias(&mut out, bias, co, g.h * g.w);
        let mut parents = vec![self.clone(), kernel.clone()];
        parents.extend(bias.cloned());
        Ok(Tensor::from_op(
            out_shape(batch, co, g.h, g.w, three_d),
            out,
            Saved::ConvTranspose2d { stride, pad },
            parents,
        ))
    }
}

fn bias_grad(g: &[f64], c_out: usize, plane: usize) -> Vec<f64> {
    let mut db = vec![0.0; c_out];
    for (i, chunk) in g.chunks(plane).enumerate() {
        db[i % c_out] += chunk.iter().sum::<f64>();
    }
    db
}

/// Gradients of conv2d with respect to (input, kernel, bias).
pub(crate) fn conv2d_backward(
    x: &Tensor,
    kernel: &Tensor,
    has_bias: bool,
    stride: usize,
    pad: usize,
    g: &[f64],
) -> (Vec<f64>, Vec<f64>, Option<Vec<f64>>) {
    let (batch, co, geo, _) = conv2d_geom(x.shape(), kernel.shape(), stride, pad).expect("validated in forward");
    let (k_rows, k_cols) = (geo.col_rows(), geo.col_cols());
    let in_sz = geo.c * geo.h * geo.w;
    let xd = x.data();
    let wd = kernel.data();
    let mut dx = vec![0.0; xd.len()];
    let mut dw = vec![0.0; wd.len()];
    let mut col = vec![0.0; k_rows * k_cols];
    for b in 0..batch {
        let gb = &g[b * co * k_cols..(b + 1) * co * k_cols];
        if kernel.requires_grad() {
            im2col(&xd[b * in_sz..(b + 1) * in_sz], &geo, &mut col);
            gemm(co, k_cols, k_rows, gb, false, &col, true, 1.0, &mut dw);
        }
        if x.requires_grad() {
            gemm(k_rows, co, k_cols, &wd, true, gb, false, 0.0, &mut col);
            col2im(&col, &geo, &mut dx[b * in_sz..(b + 1) * in_sz]);
        }
    }
    let db = has_bias.then(|| bias_grad(g, co, k_cols));
    (dx, dw, db)
}

/// Gradients of conv-transpose2d with respect to (input, kernel, bias).
pub(crate) fn conv_transpose2d_backward(
    x: &Tensor,
    kernel: &Tensor,
    has_bias: bool,
    stride: usize,
    pad: usize,
    g: &[f64],
) -> (Vec<f64>, Vec<f64>, Option<Vec<f64>>) {
    let (batch, co, geo, _) = convt_geom(x.shape(), kernel.shape(), stride, pad).expect("validated in forward");
    let ci = kernel.shape()[0];
    let (k_rows, k_cols) = (geo.col_rows(), geo.col_cols());
    let out_sz = co * geo.h * geo.w;
    let xd = x.data();
    let wd = kernel.data();
    let mut dx = vec![0.0; xd.len()];
    let mut dw = vec![0.0; wd.len()];
    let mut col = vec![0.0; k_rows * k_cols];
    for b in 0..batch {
        im2col(&g[b * out_sz..(b + 1) * out_sz], &geo, &mut col);
        let xb = &xd[b * ci * k_cols..(b + 1) * ci * k_cols];
        if x.requires_grad() {
            gemm(ci, k_rows, k_cols, &wd, false, &col, false, 0.0, &mut dx[b * ci * k_cols..(b + 1) * ci * k_cols]);
        }
        if kernel.requires_grad() {
            gemm(ci, k_cols, k_rows, xb, false, &col, true, 1.0, &mut dw);
        }
    }
    let db = has_bias.then(|| bias_grad(g, co, geo.h * geo.w));
    (dx, dw, db)
}
