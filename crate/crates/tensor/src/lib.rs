//! Reverse-mode automatic differentiation over dense f64 tensors.
//!
//! Graphs are built eagerly: every op on a tensor that requires grad records
//! its parents, and [`backward`] walks the recorded graph once in reverse
//! topological order. [`grad_of_grad`] rebuilds the backward pass of the
//! piecewise-linear network layers out of graph ops so that a gradient norm
//! can itself be differentiated (the gradient-penalty use case).
//!
//! ```
//! use pgfwi_tensor::{backward, Tensor};
//!
//! let x = Tensor::param(&[3], vec![1.0, 2.0, 3.0]).unwrap();
//! let loss = x.square().sum();
//! backward(&loss).unwrap();
//! assert_eq!(x.grad().unwrap(), vec![2.0, 4.0, 6.0]);
//! ```

mod adam;
mod backward;
pub mod checkpoint;
mod error;
pub mod ops;
mod tensor;

pub use adam::{zero_grads, AdamState};
pub use backward::{backward, grad_of_grad};
pub use error::{Result, TensorError};
pub use ops::resize::{bilinear_resample, bilinear_resample_adjoint};
pub use ops::{apply, OpKind};
pub use tensor::Tensor;
