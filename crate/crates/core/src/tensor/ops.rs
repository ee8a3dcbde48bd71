use std::fmt;
use std::str::FromStr;

use super::kernels::{gemm, sigmoid, softplus, split_at_axis};
use super::{Result, Tensor, TensorError};

/// Operation recorded on a tensor, together with what its backward rule needs.
pub(crate) enum Op {
    MatMul { lhs: Tensor, rhs: Tensor },
    BatchMatMul { lhs: Tensor, rhs: Tensor },
    Add { lhs: Tensor, rhs: Tensor },
    Sub { lhs: Tensor, rhs: Tensor },
    Mul { lhs: Tensor, rhs: Tensor },
    AddBias { input: Tensor, bias: Tensor },
    Scale { input: Tensor, factor: f64 },
    AddScalar { input: Tensor },
    Concat { inputs: Vec<Tensor> },
    Slice { input: Tensor, start: usize },
    SumAxis { input: Tensor, axis: usize },
    Sum { input: Tensor },
    Tanh { input: Tensor },
    Sigmoid { input: Tensor },
    Relu { input: Tensor },
    SoftmaxMasked { input: Tensor },
    Reshape { input: Tensor },
    Transpose { input: Tensor },
    Broadcast { input: Tensor, axis: usize },
    BceWithLogits {
        logits: Tensor,
        targets: Vec<f64>,
        mask: Vec<bool>,
        count: usize,
    },
}

/// Names of the differentiable operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    MatMul,
    BatchMatMul,
    Add,
    Sub,
    Mul,
    AddBias,
    Scale,
    AddScalar,
    Concat,
    Slice,
    SumAxis,
    Sum,
    Tanh,
    Sigmoid,
    Relu,
    SoftmaxMasked,
    Reshape,
    Transpose,
    Broadcast,
    BceWithLogits,
}

impl OpKind {
    pub const ALL: [OpKind; 20] = [
        OpKind::MatMul,
        OpKind::BatchMatMul,
        OpKind::Add,
        OpKind::Sub,
        OpKind::Mul,
        OpKind::AddBias,
        OpKind::Scale,
        OpKind::AddScalar,
        OpKind::Concat,
        OpKind::Slice,
        OpKind::SumAxis,
        OpKind::Sum,
        OpKind::Tanh,
        OpKind::Sigmoid,
        OpKind::Relu,
        OpKind::SoftmaxMasked,
        OpKind::Reshape,
        OpKind::Transpose,
        OpKind::Broadcast,
        OpKind::BceWithLogits,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpKind::MatMul => "matmul",
            OpKind::BatchMatMul => "bmm",
            OpKind::Add => "add",
            OpKind::Sub => "sub",
            OpKind::Mul => "mul",
            OpKind::AddBias => "add_bias",
            OpKind::Scale => "scale",
            OpKind::AddScalar => "add_scalar",
            OpKind::Concat => "concat",
            OpKind::Slice => "slice",
            OpKind::SumAxis => "sum_axis",
            OpKind::Sum => "sum",
            OpKind::Tanh => "tanh",
            OpKind::Sigmoid => "sigmoid",
            OpKind::Relu => "relu",
            OpKind::SoftmaxMasked => "softmax_masked",
            OpKind::Reshape => "reshape",
            OpKind::Transpose => "transpose",
            OpKind::Broadcast => "broadcast",
            OpKind::BceWithLogits => "bce_with_logits",
        }
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OpKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        OpKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown op `{s}`"))
    }
}

impl Op {
    pub(crate) fn kind(&self) -> OpKind {
        match self {
            Op::MatMul { .. } => OpKind::MatMul,
            Op::BatchMatMul { .. } => OpKind::BatchMatMul,
            Op::Add { .. } => OpKind::Add,
            Op::Sub { .. } => OpKind::Sub,
            Op::Mul { .. } => OpKind::Mul,
            Op::AddBias { .. } => OpKind::AddBias,
            Op::Scale { .. } => OpKind::Scale,
            Op::AddScalar { .. } => OpKind::AddScalar,
            Op::Concat { .. } => OpKind::Concat,
            Op::Slice { .. } => OpKind::Slice,
            Op::SumAxis { .. } => OpKind::SumAxis,
            Op::Sum { .. } => OpKind::Sum,
            Op::Tanh { .. } => OpKind::Tanh,
            Op::Sigmoid { .. } => OpKind::Sigmoid,
            Op::Relu { .. } => OpKind::Relu,
            Op::SoftmaxMasked { .. } => OpKind::SoftmaxMasked,
            Op::Reshape { .. } => OpKind::Reshape,
            Op::Transpose { .. } => OpKind::Transpose,
            Op::Broadcast { .. } => OpKind::Broadcast,
            Op::BceWithLogits { .. } => OpKind::BceWithLogits,
        }
    }

    pub(crate) fn inputs(&self) -> Vec<&Tensor> {
        match self {
            Op::MatMul { lhs, rhs }
            | Op::BatchMatMul { lhs, rhs }
            | Op::Add { lhs, rhs }
            | Op::Sub { lhs, rhs }
            | Op::Mul { lhs, rhs } => vec![lhs, rhs],
            Op::AddBias { input, bias } => vec![input, bias],
            Op::Concat { inputs } => inputs.iter().collect(),
            Op::BceWithLogits { logits, .. } => vec![logits],
            Op::Scale { input, .. }
            | Op::AddScalar { input }
            | Op::Slice { input, .. }
            | Op::SumAxis { input, .. }
            | Op::Sum { input }
            | Op::Tanh { input }
            | Op::Sigmoid { input }
            | Op::Relu { input }
            | Op::SoftmaxMasked { input }
            | Op::Reshape { input }
            | Op::Transpose { input }
            | Op::Broadcast { input, .. } => vec![input],
        }
    }
}

fn mismatch(op: &'static str, a: &Tensor, b: &Tensor) -> TensorError {
    TensorError::ShapeMismatch {
        op,
        lhs: a.shape().to_vec(),
        rhs: b.shape().to_vec(),
    }
}

fn invalid(op: &'static str, msg: impl Into<String>) -> TensorError {
    TensorError::InvalidArgument {
        op,
        msg: msg.into(),
    }
}

fn unary(input: &Tensor, f: impl Fn(f64) -> f64) -> Vec<f64> {
    input.values().iter().map(|&x| f(x)).collect()
}

fn binary(lhs: &Tensor, rhs: &Tensor, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    lhs.values()
        .iter()
        .zip(rhs.values())
        .map(|(&a, &b)| f(a, b))
        .collect()
}

/// How a masked softmax treats rows whose mask is entirely false.
#[derive(Clone, Copy, PartialEq, Eq)]
enum EmptyRows {
    Reject,
    Zero,
}

impl Tensor {
    /// Linear map over the last axis: `[.., k] · [k, n] -> [.., n]`.
    pub fn matmul(&self, rhs: &Tensor) -> Result<Tensor> {
        if self.rank() == 0 || rhs.rank() != 2 || self.shape()[self.rank() - 1] != rhs.shape()[0] {
            return Err(mismatch("matmul", self, rhs));
        }
        let k = rhs.shape()[0];
        let n = rhs.shape()[1];
        let m = self.numel() / k;
        let mut out = vec![0.0; m * n];
        gemm(m, k, n, self.values(), false, rhs.values(), false, &mut out, false);
        let mut shape = self.shape().to_vec();
        *shape.last_mut().unwrap() = n;
        Ok(Tensor::from_op(
            out,
            shape,
            Op::MatMul {
                lhs: self.clone(),
                rhs: rhs.clone(),
            },
        ))
    }

    /// Batched product `[b, m, k] · [b, k, n] -> [b, m, n]`.
    pub fn bmm(&self, rhs: &Tensor) -> Result<Tensor> {
        let (a, b) = (self.shape(), rhs.shape());
        if a.len() != 3 || b.len() != 3 || a[0] != b[0] || a[2] != b[1] {
            return Err(mismatch("bmm", self, rhs));
        }
        let (batch, m, k, n) = (a[0], a[1], a[2], b[2]);
        let mut out = vec![0.0; batch * m * n];
        for i in 0..batch {
            gemm(
                m,
                k,
                n,
                &self.values()[i * m * k..(i + 1) * m * k],
                false,
                &rhs.values()[i * k * n..(i + 1) * k * n],
                false,
                &mut out[i * m * n..(i + 1) * m * n],
                false,
            );
        }
        Ok(Tensor::from_op(
            out,
            vec![batch, m, n],
            Op::BatchMatMul {
                lhs: self.clone(),
                rhs: rhs.clone(),
            },
        ))
    }

    pub fn add(&self, rhs: &Tensor) -> Result<Tensor> {
        if self.shape() != rhs.shape() {
            return Err(mismatch("add", self, rhs));
        }
        let out = binary(self, rhs, |a, b| a + b);
        Ok(Tensor::from_op(
            out,
            self.shape().to_vec(),
            Op::Add {
                lhs: self.clone(),
                rhs: rhs.clone(),
            },
        ))
    }

    pub fn sub(&self, rhs: &Tensor) -> Result<Tensor> {
        if self.shape() != rhs.shape() {
            return Err(mismatch("sub", self, rhs));
        }
        let out = binary(self, rhs, |a, b| a - b);
        Ok(Tensor::from_op(
            out,
            self.shape().to_vec(),
            Op::Sub {
                lhs: self.clone(),
                rhs: rhs.clone(),
            },
        ))
    }

    /// Elementwise product.
    pub fn mul(&self, rhs: &Tensor) -> Result<Tensor> {
        if self.shape() != rhs.shape() {
            return Err(mismatch("mul", self, rhs));
        }
        let out = binary(self, rhs, |a, b| a * b);
        Ok(Tensor::from_op(
            out,
            self.shape().to_vec(),
            Op::Mul {
                lhs: self.clone(),
                rhs: rhs.clone(),
            },
        ))
    }

    /// Adds a vector along the last axis.
    pub fn add_bias(&self, bias: &Tensor) -> Result<Tensor> {
        if self.rank() == 0 || bias.rank() != 1 || bias.shape()[0] != self.shape()[self.rank() - 1] {
            return Err(mismatch("add_bias", self, bias));
        }
        let n = bias.numel();
        let out = self
            .values()
            .iter()
            .enumerate()
            .map(|(i, &x)| x + bias.values()[i % n])
            .collect();
        Ok(Tensor::from_op(
            out,
            self.shape().to_vec(),
            Op::AddBias {
                input: self.clone(),
                bias: bias.clone(),
            },
        ))
    }

    pub fn scale(&self, factor: f64) -> Tensor {
        Tensor::from_op(
            unary(self, |x| x * factor),
            self.shape().to_vec(),
            Op::Scale {
                input: self.clone(),
                factor,
            },
        )
    }

    pub fn add_scalar(&self, c: f64) -> Tensor {
        Tensor::from_op(
            unary(self, |x| x + c),
            self.shape().to_vec(),
            Op::AddScalar {
                input: self.clone(),
            },
        )
    }

    /// `1 - x`, the complement used by gated interpolations.
    pub fn one_minus(&self) -> Tensor {
        self.scale(-1.0).add_scalar(1.0)
    }

    /// Concatenates along the last axis; all leading extents must agree.
    pub fn concat(parts: &[Tensor]) -> Result<Tensor> {
        let first = parts.first().ok_or_else(|| invalid("concat", "no inputs"))?;
        if first.rank() == 0 {
            return Err(invalid("concat", "scalars cannot be concatenated"));
        }
        let lead = &first.shape()[..first.rank() - 1];
        for p in parts {
            if p.rank() != first.rank() || &p.shape()[..p.rank() - 1] != lead {
                return Err(mismatch("concat", first, p));
            }
        }
        let rows: usize = lead.iter().product();
        let widths: Vec<usize> = parts.iter().map(|p| p.shape()[p.rank() - 1]).collect();
        let total: usize = widths.iter().sum();
        let mut out = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for (p, &w) in parts.iter().zip(&widths) {
                out.extend_from_slice(&p.values()[r * w..(r + 1) * w]);
            }
        }
        let mut shape = lead.to_vec();
        shape.push(total);
        Ok(Tensor::from_op(
            out,
            shape,
            Op::Concat {
                inputs: parts.to_vec(),
            },
        ))
    }

    /// Columns `start..start + len` of the last axis.
    pub fn slice(&self, start: usize, len: usize) -> Result<Tensor> {
        if self.rank() == 0 || len == 0 || start + len > self.shape()[self.rank() - 1] {
            return Err(invalid(
                "slice",
                format!("range {start}..{} out of bounds for {:?}", start + len, self.shape()),
            ));
        }
        let w = self.shape()[self.rank() - 1];
        let rows = self.numel() / w;
        let mut out = Vec::with_capacity(rows * len);
        for r in 0..rows {
            out.extend_from_slice(&self.values()[r * w + start..r * w + start + len]);
        }
        let mut shape = self.shape().to_vec();
        *shape.last_mut().unwrap() = len;
        Ok(Tensor::from_op(
            out,
            shape,
            Op::Slice {
                input: self.clone(),
                start,
            },
        ))
    }

    /// Sums out one axis.
    pub fn sum_axis(&self, axis: usize) -> Result<Tensor> {
        if axis >= self.rank() {
            return Err(invalid("sum_axis", format!("axis {axis} for shape {:?}", self.shape())));
        }
        let (outer, extent, inner) = split_at_axis(self.shape(), axis);
        let mut out = vec![0.0; outer * inner];
        for o in 0..outer {
            for e in 0..extent {
                let src = &self.values()[(o * extent + e) * inner..(o * extent + e + 1) * inner];
                for (d, s) in out[o * inner..(o + 1) * inner].iter_mut().zip(src) {
                    *d += s;
                }
            }
        }
        let mut shape = self.shape().to_vec();
        shape.remove(axis);
        Ok(Tensor::from_op(
            out,
            shape,
            Op::SumAxis {
                input: self.clone(),
                axis,
            },
        ))
    }

    /// Sum of all entries as a scalar.
    pub fn sum(&self) -> Tensor {
        Tensor::from_op(
            vec![self.values().iter().sum()],
            vec![],
            Op::Sum {
                input: self.clone(),
            },
        )
    }

    pub fn mean(&self) -> Tensor {
        self.sum().scale(1.0 / self.numel() as f64)
    }

    pub fn tanh(&self) -> Tensor {
        Tensor::from_op(
            unary(self, f64::tanh),
            self.shape().to_vec(),
            Op::Tanh {
                input: self.clone(),
            },
        )
    }

    /// Logistic sigmoid.
    pub fn sigmoid(&self) -> Tensor {
        Tensor::from_op(
            unary(self, sigmoid),
            self.shape().to_vec(),
            Op::Sigmoid {
                input: self.clone(),
            },
        )
    }

    pub fn relu(&self) -> Tensor {
        Tensor::from_op(
            unary(self, |x| x.max(0.0)),
            self.shape().to_vec(),
            Op::Relu {
                input: self.clone(),
            },
        )
    }

    /// Softmax over the last axis restricted to entries where `mask` is true;
    /// masked-out entries come back as exactly zero. Every row needs at least
    /// one unmasked entry.
    pub fn softmax_masked(&self, mask: &[bool]) -> Result<Tensor> {
        self.masked_softmax_impl(mask, EmptyRows::Reject)
    }

    /// Like [`Tensor::softmax_masked`], but rows with no unmasked entry
    /// produce all zeros instead of an error.
    pub fn softmax_masked_or_zero(&self, mask: &[bool]) -> Result<Tensor> {
        self.masked_softmax_impl(mask, EmptyRows::Zero)
    }

    fn masked_softmax_impl(&self, mask: &[bool], empty: EmptyRows) -> Result<Tensor> {
        if self.rank() == 0 || mask.len() != self.numel() {
            return Err(invalid(
                "softmax_masked",
                format!("mask of length {} for shape {:?}", mask.len(), self.shape()),
            ));
        }
        let w = self.shape()[self.rank() - 1];
        let mut out = vec![0.0; self.numel()];
        for (row, (xs, ms)) in self.values().chunks(w).zip(mask.chunks(w)).enumerate() {
            let max = xs
                .iter()
                .zip(ms)
                .filter(|(_, &m)| m)
                .map(|(&x, _)| x)
                .fold(f64::NEG_INFINITY, f64::max);
            if max == f64::NEG_INFINITY {
                match empty {
                    EmptyRows::Reject => return Err(TensorError::EmptySoftmax { row }),
                    EmptyRows::Zero => continue,
                }
            }
            let dst = &mut out[row * w..(row + 1) * w];
            let mut total = 0.0;
            for ((d, &x), &m) in dst.iter_mut().zip(xs).zip(ms) {
                if m {
                    *d = (x - max).exp();
                    total += *d;
                }
            }
            dst.iter_mut().for_each(|d| *d /= total);
        }
        Ok(Tensor::from_op(
            out,
            self.shape().to_vec(),
            Op::SoftmaxMasked {
                input: self.clone(),
            },
        ))
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Tensor> {
        if shape.iter().product::<usize>() != self.numel() || shape.contains(&0) {
            return Err(TensorError::ShapeMismatch {
                op: "reshape",
                lhs: self.shape().to_vec(),
                rhs: shape.to_vec(),
            });
        }
        Ok(Tensor::from_op(
            self.values().to_vec(),
            shape.to_vec(),
            Op::Reshape {
                input: self.clone(),
            },
        ))
    }

    /// Swaps the last two axes.
    pub fn transpose(&self) -> Result<Tensor> {
        if self.rank() < 2 {
            return Err(invalid("transpose", format!("rank {} < 2", self.rank())));
        }
        let r = self.rank();
        let (rows, cols) = (self.shape()[r - 2], self.shape()[r - 1]);
        let out = transpose_blocks(self.values(), rows, cols);
        let mut shape = self.shape().to_vec();
        shape.swap(r - 2, r - 1);
        Ok(Tensor::from_op(
            out,
            shape,
            Op::Transpose {
                input: self.clone(),
            },
        ))
    }

    /// Repeats the tensor `count` times along a new axis inserted at `axis`.
    pub fn broadcast(&self, axis: usize, count: usize) -> Result<Tensor> {
        if axis > self.rank() || count == 0 {
            return Err(invalid(
                "broadcast",
                format!("axis {axis} x{count} for shape {:?}", self.shape()),
            ));
        }
        let outer: usize = self.shape()[..axis].iter().product();
        let inner: usize = self.shape()[axis..].iter().product();
        let mut out = Vec::with_capacity(self.numel() * count);
        for o in 0..outer {
            let block = &self.values()[o * inner..(o + 1) * inner];
            for _ in 0..count {
                out.extend_from_slice(block);
            }
        }
        let mut shape = self.shape().to_vec();
        shape.insert(axis, count);
        Ok(Tensor::from_op(
            out,
            shape,
            Op::Broadcast {
                input: self.clone(),
                axis,
            },
        ))
    }

    /// Mean binary cross-entropy of `sigmoid(self)` against `targets`, over
    /// entries where `mask` is true, computed in the overflow-free
    /// `max(x, 0) - x·y + ln(1 + e^{-|x|})` form.
    pub fn bce_with_logits(&self, targets: &[f64], mask: &[bool]) -> Result<Tensor> {
        if targets.len() != self.numel() || mask.len() != self.numel() {
            return Err(invalid(
                "bce_with_logits",
                format!(
                    "{} targets / {} mask entries for shape {:?}",
                    targets.len(),
                    mask.len(),
                    self.shape()
                ),
            ));
        }
        let count = mask.iter().filter(|&&m| m).count();
        if count == 0 {
            return Err(invalid("bce_with_logits", "no unmasked entries"));
        }
        let total: f64 = self
            .values()
            .iter()
            .zip(targets)
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|((&x, &y), _)| softplus(x) - x * y)
            .sum();
        Ok(Tensor::from_op(
            vec![total / count as f64],
            vec![],
            Op::BceWithLogits {
                logits: self.clone(),
                targets: targets.to_vec(),
                mask: mask.to_vec(),
                count,
            },
        ))
    }
}

/// Transposes each trailing `rows×cols` block of `values`.
pub(crate) fn transpose_blocks(values: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let block = rows * cols;
    let mut out = vec![0.0; values.len()];
    for (src, dst) in values.chunks(block).zip(out.chunks_mut(block)) {
        for r in 0..rows {
            for c in 0..cols {
                dst[c * rows + r] = src[r * cols + c];
            }
        }
    }
    out
}
