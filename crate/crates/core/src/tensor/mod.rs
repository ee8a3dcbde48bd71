//! Dense row-major `f64` tensors that record the operations applied to them,
//! so that a scalar result can be differentiated with [`Tensor::backward`].
//!
//! A tensor is either a *leaf* (created by [`Tensor::new`] for constants or
//! [`Tensor::param`] for tracked parameters) or the output of an operation.
//! Operation outputs keep their inputs alive through an [`Op`] node; the
//! resulting graph is acyclic by construction because a node can only refer
//! to tensors that existed before it.
//!
//! Graphs are built on `Rc`, so one graph lives on one thread. Independent
//! graphs on independent threads share nothing.

mod backward;
mod fault;
mod gradcheck;
mod kernels;
mod ops;

use std::cell::RefCell;
use std::fmt;
use std::rc::Rc;

pub use fault::{inject_fault, FaultGuard};
pub use gradcheck::{grad_check, grad_check_report, GradCheckReport};
pub use ops::OpKind;

pub(crate) use ops::Op;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TensorError {
    #[error("{op}: shape mismatch between {lhs:?} and {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("shape {shape:?} does not describe {len} values")]
    InvalidShape { shape: Vec<usize>, len: usize },
    #[error("{op}: {msg}")]
    InvalidArgument { op: &'static str, msg: String },
    #[error("softmax over an empty mask (row {row})")]
    EmptySoftmax { row: usize },
    #[error("backward needs a scalar loss, got shape {0:?}")]
    NotScalar(Vec<usize>),
    #[error("non-finite value produced by {0}")]
    NonFinite(String),
}

pub type Result<T> = std::result::Result<T, TensorError>;

struct Inner {
    shape: Vec<usize>,
    values: Vec<f64>,
    /// Accumulated gradient; only tracked leaves carry one.
    grad: Option<RefCell<Vec<f64>>>,
    op: Option<Op>,
    requires_grad: bool,
}

/// Reference-counted handle to an immutable tensor node.
#[derive(Clone)]
pub struct Tensor(Rc<Inner>);

fn check_shape(shape: &[usize], len: usize) -> Result<()> {
    if shape.contains(&0) || shape.iter().product::<usize>() != len {
        return Err(TensorError::InvalidShape {
            shape: shape.to_vec(),
            len,
        });
    }
    Ok(())
}

impl Tensor {
    /// Untracked constant.
    pub fn new(values: Vec<f64>, shape: &[usize]) -> Result<Self> {
        check_shape(shape, values.len())?;
        Ok(Tensor(Rc::new(Inner {
            shape: shape.to_vec(),
            values,
            grad: None,
            op: None,
            requires_grad: false,
        })))
    }

    /// Tracked leaf whose gradient starts at zero and accumulates across
    /// calls to [`Tensor::backward`] until [`Tensor::zero_grad`].
    pub fn param(values: Vec<f64>, shape: &[usize]) -> Result<Self> {
        check_shape(shape, values.len())?;
        let n = values.len();
        Ok(Tensor(Rc::new(Inner {
            shape: shape.to_vec(),
            values,
            grad: Some(RefCell::new(vec![0.0; n])),
            op: None,
            requires_grad: true,
        })))
    }

    pub fn scalar(value: f64) -> Self {
        Self::new(vec![value], &[]).expect("scalar shape is valid")
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        Self::new(vec![0.0; shape.iter().product()], shape)
    }

    pub fn full(value: f64, shape: &[usize]) -> Result<Self> {
        Self::new(vec![value; shape.iter().product()], shape)
    }

    pub(crate) fn from_op(values: Vec<f64>, shape: Vec<usize>, op: Op) -> Self {
        debug_assert_eq!(values.len(), shape.iter().product::<usize>());
        let requires_grad = op.inputs().iter().any(|t| t.requires_grad());
        Tensor(Rc::new(Inner {
            shape,
            values,
            grad: None,
            op: requires_grad.then_some(op),
            requires_grad,
        }))
    }

    pub fn shape(&self) -> &[usize] {
        &self.0.shape
    }

    pub fn rank(&self) -> usize {
        self.0.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.0.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0.values
    }

    /// Value of a one-element tensor.
    pub fn item(&self) -> Result<f64> {
        if self.numel() != 1 {
            return Err(TensorError::NotScalar(self.shape().to_vec()));
        }
        Ok(self.0.values[0])
    }

    pub fn requires_grad(&self) -> bool {
        self.0.requires_grad
    }

    pub fn is_leaf(&self) -> bool {
        self.0.op.is_none()
    }

    /// Kind of operation that produced this tensor, if it is tracked.
    pub fn op_kind(&self) -> Option<OpKind> {
        self.0.op.as_ref().map(Op::kind)
    }

    /// Copy of the accumulated gradient of a tracked leaf.
    pub fn grad(&self) -> Option<Vec<f64>> {
        self.0.grad.as_ref().map(|g| g.borrow().clone())
    }

    pub fn zero_grad(&self) {
        if let Some(g) = &self.0.grad {
            g.borrow_mut().iter_mut().for_each(|v| *v = 0.0);
        }
    }

    /// Same values, detached from any graph and untracked.
    pub fn detach(&self) -> Tensor {
        Tensor::new(self.0.values.clone(), &self.0.shape).expect("shape already validated")
    }

    pub(crate) fn ptr(&self) -> *const () {
        Rc::as_ptr(&self.0) as *const ()
    }

    pub(crate) fn op(&self) -> Option<&Op> {
        self.0.op.as_ref()
    }

    pub(crate) fn accumulate_grad(&self, delta: &[f64]) {
        if let Some(g) = &self.0.grad {
            for (a, d) in g.borrow_mut().iter_mut().zip(delta) {
                *a += d;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.0.values.iter().all(|v| v.is_finite())
    }
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = f.debug_struct("Tensor");
        s.field("shape", &self.0.shape);
        if self.numel() <= 16 {
            s.field("values", &self.0.values);
        }
        if let Some(kind) = self.op_kind() {
            s.field("op", &kind);
        }
        s.finish()
    }
}
