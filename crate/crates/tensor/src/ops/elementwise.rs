use std::rc::Rc;

use crate::error::{Result, TensorError};
use crate::tensor::{Saved, Tensor};

fn same_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(TensorError::shape(
            op,
            format!("lhs {:?} vs rhs {:?}", a.shape(), b.shape()),
        ));
    }
    Ok(())
}

fn zip_map(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let (x, y) = (a.data(), b.data());
    x.iter().zip(y.iter()).map(|(&p, &q)| f(p, q)).collect()
}

fn unary(x: &Tensor, saved: Saved, f: impl Fn(f64) -> f64) -> Tensor {
    let data = x.data().iter().map(|&v| f(v)).collect();
    Tensor::from_op(x.shape().to_vec(), data, saved, vec![x.clone()])
}

impl Tensor {
    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        same_shape("add", self, other)?;
        let data = zip_map(self, other, |p, q| p + q);
        Ok(Tensor::from_op(self.shape().to_vec(), data, Saved::Add, vec![self.clone(), other.clone()]))
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        same_shape("sub", self, other)?;
        let data = zip_map(self, other, |p, q| p - q);
        Ok(Tensor::from_op(self.shape().to_vec(), data, Saved::Sub, vec![self.clone(), other.clone()]))
    }

    /// Elementwise product.
    pub fn mul(&self, other: &Tensor) -> Result<Tensor> {
        same_shape("mul", self, other)?;
        let data = zip_map(self, other, |p, q| p * q);
        Ok(Tensor::from_op(self.shape().to_vec(), data, Saved::Mul, vec![self.clone(), other.clone()]))
    }

    pub fn scalar_mul(&self, c: f64) -> Tensor {
        unary(self, Saved::ScalarMul(c), |v| c * v)
    }

    pub fn add_scalar(&self, c: f64) -> Tensor {
        unary(self, Saved::AddScalar, |v| v + c)
    }

    pub fn relu(&self) -> Tensor {
        unary(self, Saved::Relu, |v| if v > 0.0 { v } else { 0.0 })
    }

    pub fn leaky_relu(&self, slope: f64) -> Tensor {
        unary(self, Saved::LeakyRelu(slope), |v| if v > 0.0 { v } else { slope * v })
    }

    pub fn sigmoid(&self) -> Tensor {
        unary(self, Saved::Sigmoid, sigmoid)
    }

    pub fn square(&self) -> Tensor {
        unary(self, Saved::Square, |v| v * v)
    }

    /// Natural log. No domain guard: callers clamp first.
    pub fn log(&self) -> Tensor {
        unary(self, Saved::Log, f64::ln)
    }

    pub fn abs(&self) -> Tensor {
        unary(self, Saved::Abs, f64::abs)
    }

    pub fn sqrt(&self) -> Tensor {
        unary(self, Saved::Sqrt, f64::sqrt)
    }

    /// Clamp to `[lo, hi]`; gradient passes only where the input was inside.
    pub fn clamp(&self, lo: f64, hi: f64) -> Tensor {
        unary(self, Saved::Clamp { lo, hi }, |v| v.clamp(lo, hi))
    }

    /// Multiply by a fixed (non-differentiable) array of the same size.
    pub(crate) fn mul_const(&self, mask: Rc<Vec<f64>>) -> Tensor {
        let data = self.data().iter().zip(mask.iter()).map(|(a, m)| a * m).collect();
        Tensor::from_op(self.shape().to_vec(), data, Saved::MulConst(mask), vec![self.clone()])
    }
}

pub(crate) fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Local derivative of a unary elementwise op at input `x` with output `y`.
pub(crate) fn unary_derivative(saved: &Saved, x: f64, y: f64) -> f64 {
    match saved {
        Saved::ScalarMul(c) => *c,
        Saved::AddScalar => 1.0,
        Saved::Relu => {
            if x > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        Saved::LeakyRelu(slope) => {
            if x > 0.0 {
                1.0
            } else {
                *slope
            }
        }
        Saved::Sigmoid => y * (1.0 - y),
        Saved::Square => 2.0 * x,
        Saved::Log => 1.0 / x,
        Saved::Abs => {
            if x > 0.0 {
                1.0
            } else if x < 0.0 {
                -1.0
            } else {
                0.0
            }
        }
        Saved::Sqrt => 0.5 / y,
        Saved::Clamp { lo, hi } => {
            if x >= *lo && x <= *hi {
                1.0
            } else {
                0.0
            }
        }
        other => unreachable!("{} is not a unary elementwise op", other.name()),
    }
}
