//! Differentiable operations. Each op is a method on [`Tensor`]; [`apply`]
//! dispatches by [`OpKind`] for callers that build graphs from data.

pub(crate) mod conv;
pub(crate) mod elementwise;
pub(crate) mod linalg;
pub(crate) mod pool;
pub mod resize;
pub(crate) mod reduce;
pub(crate) mod shape;

use crate::error::{Result, TensorError};
use crate::tensor::Tensor;

/// Operation kinds with their attributes.
#[derive(Debug, Clone, PartialEq)]
pub enum OpKind {
    Add,
    Sub,
    Mul,
    ScalarMul(f64),
    AddScalar(f64),
    MatMul,
    Transpose,
    /// Inputs: x, weight, optional bias.
    Linear,
    /// Inputs: x, kernel, optional bias.
    Conv2d { stride: usize, pad: usize },
    /// Inputs: x, kernel, optional bias.
    ConvTranspose2d { stride: usize, pad: usize },
    MaxPool2d,
    Relu,
    LeakyRelu(f64),
    Sigmoid,
    Square,
    Log,
    Abs,
    Sqrt,
    Clamp { lo: f64, hi: f64 },
    Sum,
    Mean,
    RowSum,
    Flatten,
    Reshape(Vec<usize>),
    /// Concatenation along an axis (axis 1 is the channel axis for NCHW).
    Concat { axis: usize },
    BilinearResize { height: usize, width: usize },
}

fn arity(kind: &OpKind, inputs: &[Tensor], min: usize, max: usize) -> Result<()> {
    if inputs.len() < min || inputs.len() > max {
        return Err(TensorError::shape(
            "apply",
            format!("{kind:?} takes {min}..={max} inputs, got {}", inputs.len()),
        ));
    }
    Ok(())
}

/// Run `kind` on `inputs`, recording a graph node when any input requires grad.
pub fn apply(kind: &OpKind, inputs: &[Tensor]) -> Result<Tensor> {
    use OpKind::*;
    let binary = matches!(kind, Add | Sub | Mul | MatMul);
    let with_bias = matches!(kind, Linear | Conv2d { .. } | ConvTranspose2d { .. });
    match kind {
        Concat { .. } => arity(kind, inputs, 1, usize::MAX)?,
        _ if binary => arity(kind, inputs, 2, 2)?,
        _ if with_bias => arity(kind, inputs, 2, 3)?,
        _ => arity(kind, inputs, 1, 1)?,
    }
    let x = &inputs[0];
    match kind {
        Add => x.add(&inputs[1]),
        Sub => x.sub(&inputs[1]),
        Mul => x.mul(&inputs[1]),
        ScalarMul(c) => Ok(x.scalar_mul(*c)),
        AddScalar(c) => Ok(x.add_scalar(*c)),
        MatMul => x.matmul(&inputs[1]),
        Transpose => x.transpose(),
        Linear => x.linear(&inputs[1], inputs.get(2)),
        Conv2d { stride, pad } => x.conv2d(&inputs[1], inputs.get(2), *stride, *pad),
        ConvTranspose2d { stride, pad } => x.conv_transpose2d(&inputs[1], inputs.get(2), *stride, *pad),
        MaxPool2d => x.maxpool2d(),
        Relu => Ok(x.relu()),
        LeakyRelu(s) => Ok(x.leaky_relu(*s)),
        Sigmoid => Ok(x.sigmoid()),
        Square => Ok(x.square()),
        Log => Ok(x.log()),
        Abs => Ok(x.abs()),
        Sqrt => Ok(x.sqrt()),
        Clamp { lo, hi } => Ok(x.clamp(*lo, *hi)),
        Sum => Ok(x.sum()),
        Mean => Ok(x.mean()),
        RowSum => x.row_sum(),
        Flatten => x.flatten(),
        Reshape(shape) => x.reshape(shape),
        Concat { axis } => Tensor::concat(inputs, *axis),
        BilinearResize { height, width } => x.bilinear_resize(*height, *width),
    }
}
