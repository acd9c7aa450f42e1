use std::cell::{Cell, Ref, RefCell};
use std::fmt;
use std::rc::Rc;

use crate::error::{Result, TensorError};

/// Operation record kept on a graph node: what produced it plus whatever the
/// backward rule needs that is not recoverable from the parents' values.
#[derive(Debug, Clone)]
pub(crate) enum Saved {
    Add,
    Sub,
    Mul,
    ScalarMul(f64),
    AddScalar,
    MatMul,
    Transpose,
    Linear,
    Conv2d { stride: usize, pad: usize },
    ConvTranspose2d { stride: usize, pad: usize },
    MaxPool2d { argmax: Rc<Vec<usize>> },
    MaxUnpool { argmax: Rc<Vec<usize>> },
    Relu,
    LeakyRelu(f64),
    Sigmoid,
    Square,
    Log,
    Abs,
    Sqrt,
    Clamp { lo: f64, hi: f64 },
    MulConst(Rc<Vec<f64>>),
    Sum,
    Mean,
    RowSum,
    Expand,
    Reshape,
    Concat { axis: usize },
    BilinearResize,
}

impl Saved {
    pub(crate) fn name(&self) -> &'static str {
        match self {
            Saved::Add => "add",
            Saved::Sub => "sub",
            Saved::Mul => "mul",
            Saved::ScalarMul(_) => "scalar-mul",
            Saved::AddScalar => "add-scalar",
            Saved::MatMul => "matmul",
            Saved::Transpose => "transpose",
            Saved::Linear => "linear",
            Saved::Conv2d { .. } => "conv2d",
            Saved::ConvTranspose2d { .. } => "conv-transpose2d",
            Saved::MaxPool2d { .. } => "maxpool2d",
            Saved::MaxUnpool { .. } => "max-unpool",
            Saved::Relu => "relu",
            Saved::LeakyRelu(_) => "leaky-relu",
            Saved::Sigmoid => "sigmoid",
            Saved::Square => "square",
            Saved::Log => "log",
            Saved::Abs => "abs",
            Saved::Sqrt => "sqrt",
            Saved::Clamp { .. } => "clamp",
            Saved::MulConst(_) => "mul-const",
            Saved::Sum => "sum",
            Saved::Mean => "mean",
            Saved::RowSum => "row-sum",
            Saved::Expand => "expand",
            Saved::Reshape => "reshape",
            Saved::Concat { .. } => "concat",
            Saved::BilinearResize => "bilinear-resize",
        }
    }
}

pub(crate) struct Op {
    pub(crate) saved: Saved,
    pub(crate) parents: Vec<Tensor>,
}

pub(crate) struct Node {
    pub(crate) shape: Vec<usize>,
    pub(crate) data: RefCell<Vec<f64>>,
    pub(crate) requires_grad: bool,
    pub(crate) grad: RefCell<Option<Vec<f64>>>,
    pub(crate) retain: Cell<bool>,
    pub(crate) op: Option<Op>,
}

/// An n-dimensional f64 array, optionally tracked in a reverse-mode graph.
///
/// Cloning a `Tensor` is cheap and yields a handle to the same node.
#[derive(Clone)]
pub struct Tensor(pub(crate) Rc<Node>);

impl Tensor {
    fn leaf(shape: Vec<usize>, data: Vec<f64>, requires_grad: bool) -> Tensor {
        Tensor(Rc::new(Node {
            shape,
            data: RefCell::new(data),
            requires_grad,
            grad: RefCell::new(None),
            retain: Cell::new(false),
            op: None,
        }))
    }

    /// Constant tensor. Fails if `data.len()` differs from the shape's element count.
    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Tensor> {
        check_len("from_vec", shape, data.len())?;
        Ok(Tensor::leaf(shape.to_vec(), data, false))
    }

    /// Trainable leaf.
    pub fn param(shape: &[usize], data: Vec<f64>) -> Result<Tensor> {
        check_len("param", shape, data.len())?;
        Ok(Tensor::leaf(shape.to_vec(), data, true))
    }

    pub fn zeros(shape: &[usize]) -> Tensor {
        let n = shape.iter().product();
        Tensor::leaf(shape.to_vec(), vec![0.0; n], false)
    }

    /// 0-dimensional constant.
    pub fn scalar(value: f64) -> Tensor {
        Tensor::leaf(Vec::new(), vec![value], false)
    }

    pub(crate) fn from_op(shape: Vec<usize>, data: Vec<f64>, saved: Saved, parents: Vec<Tensor>) -> Tensor {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        let requires_grad = parents.iter().any(|p| p.requires_grad());
        Tensor(Rc::new(Node {
            shape,
            data: RefCell::new(data),
            requires_grad,
            grad: RefCell::new(None),
            retain: Cell::new(false),
            op: if requires_grad {
                Some(Op { saved, parents })
            } else {
                None
            },
        }))
    }

    pub fn shape(&self) -> &[usize] {
        &self.0.shape
    }

    pub fn numel(&self) -> usize {
        self.0.shape.iter().product()
    }

    pub fn ndim(&self) -> usize {
        self.0.shape.len()
    }

    pub fn requires_grad(&self) -> bool {
        self.0.requires_grad
    }

    pub fn is_leaf(&self) -> bool {
        self.0.op.is_none()
    }

    /// Borrow the values.
    pub fn data(&self) -> Ref<'_, Vec<f64>> {
        self.0.data.borrow()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.data.borrow().clone()
    }

    /// Value of a single-element tensor.
    pub fn item(&self) -> f64 {
        let d = self.0.data.borrow();
        assert_eq!(d.len(), 1, "item() on tensor of shape {:?}", self.0.shape);
        d[0]
    }

    /// Overwrite values in place (parameter updates). Only legal on leaves.
    pub fn set_data(&self, values: &[f64]) {
        assert!(self.is_leaf(), "set_data on a non-leaf tensor");
        let mut d = self.0.data.borrow_mut();
        assert_eq!(d.len(), values.len());
        d.copy_from_slice(values);
    }

    /// Mutate values in place through a closure. Only legal on leaves.
    pub fn update_data(&self, f: impl FnOnce(&mut [f64])) {
        assert!(self.is_leaf(), "update_data on a non-leaf tensor");
        f(&mut self.0.data.borrow_mut());
    }

    pub fn grad(&self) -> Option<Vec<f64>> {
        self.0.grad.borrow().clone()
    }

    pub fn zero_grad(&self) {
        *self.0.grad.borrow_mut() = None;
    }

    /// Ask `backward` to also store the gradient of this non-leaf tensor.
    pub fn retain_grad(&self) {
        self.0.retain.set(true);
    }

    /// New constant leaf with the same values and no graph history.
    pub fn detach(&self) -> Tensor {
        Tensor::leaf(self.0.shape.clone(), self.to_vec(), false)
    }

    pub(crate) fn accumulate_grad(&self, g: &[f64]) {
        let mut slot = self.0.grad.borrow_mut();
        match slot.as_mut() {
            Some(acc) => {
                for (a, b) in acc.iter_mut().zip(g) {
                    *a += *b;
                }
            }
            None => *slot = Some(g.to_vec()),
        }
    }

    pub(crate) fn key(&self) -> *const Node {
        Rc::as_ptr(&self.0)
    }

    pub fn same_node(&self, other: &Tensor) -> bool {
        Rc::ptr_eq(&self.0, &other.0)
    }
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = self.0.data.borrow();
        let op = self.0.op.as_ref().map(|o| o.saved.name()).unwrap_or("leaf");
        write!(f, "Tensor(shape={:?}, op={op}", self.0.shape)?;
        if d.len() <= 8 {
            write!(f, ", data={:?}", &d[..])?;
        }
        write!(f, ")")
    }
}

pub(crate) fn check_len(op: &'static str, shape: &[usize], len: usize) -> Result<()> {
    let n: usize = shape.iter().product();
    if n != len {
        return Err(TensorError::shape(
            op,
            format!("shape {shape:?} holds {n} elements but {len} values were given"),
        ));
    }
    Ok(())
}
