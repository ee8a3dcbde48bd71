use std::collections::{HashMap, HashSet};

use super::fault::corrupt_if_faulty;
use super::kernels::{gemm, sigmoid, split_at_axis};
use super::ops::transpose_blocks;
use super::{Op, Result, Tensor, TensorError};

impl Tensor {
    /// Reverse-mode differentiation from a scalar.
    ///
    /// Every tracked leaf reachable from `self` has `∂self/∂leaf` added to
    /// its gradient. Gradients accumulate across calls until
    /// [`Tensor::zero_grad`].
    pub fn backward(&self) -> Result<()> {
        if self.numel() != 1 {
            return Err(TensorError::NotScalar(self.shape().to_vec()));
        }
        if !self.requires_grad() {
            return Ok(());
        }
        let order = topological_order(self);
        let mut grads: HashMap<*const (), Vec<f64>> = HashMap::new();
        grads.insert(self.ptr(), vec![1.0]);

        for node in order.iter().rev() {
            let Some(grad) = grads.remove(&node.ptr()) else {
                continue;
            };
            let Some(op) = node.op() else {
                node.accumulate_grad(&grad);
                continue;
            };
            let kind = op.kind();
            for (input, mut input_grad) in input_grads(op, node, &grad) {
                if !input.requires_grad() {
                    continue;
                }
                corrupt_if_faulty(kind, &mut input_grad);
                match grads.get_mut(&input.ptr()) {
                    Some(acc) => acc.iter_mut().zip(&input_grad).for_each(|(a, g)| *a += g),
                    None => {
                        grads.insert(input.ptr(), input_grad);
                    }
                }
            }
        }
        Ok(())
    }
}

/// Tracked nodes reachable from `root`, inputs before the nodes that use them.
fn topological_order(root: &Tensor) -> Vec<Tensor> {
    let mut order = Vec::new();
    let mut visited = HashSet::new();
    let mut stack = vec![(root.clone(), false)];
    while let Some((node, expanded)) = stack.pop() {
        if expanded {
            order.push(node);
            continue;
        }
        if !visited.insert(node.ptr()) {
            continue;
        }
        stack.push((node.clone(), true));
        if let Some(op) = node.op() {
            for input in op.inputs() {
                if input.requires_grad() && !visited.contains(&input.ptr()) {
                    stack.push((input.clone(), false));
                }
            }
        }
    }
    order
}

/// Gradient with respect to each input of `op`, given the gradient `g` of its
/// output `out`. Inputs that do not require a gradient may be skipped.
fn input_grads(op: &Op, out: &Tensor, g: &[f64]) -> Vec<(Tensor, Vec<f64>)> {
    match op {
        Op::MatMul { lhs, rhs } => {
            let k = rhs.shape()[0];
            let n = rhs.shape()[1];
            let m = lhs.numel() / k;
            let mut res = Vec::with_capacity(2);
            if lhs.requires_grad() {
                let mut da = vec![0.0; m * k];
                gemm(m, n, k, g, false, rhs.values(), true, &mut da, false);
                res.push((lhs.clone(), da));
            }
            if rhs.requires_grad() {
                let mut db = vec![0.0; k * n];
                gemm(k, m, n, lhs.values(), true, g, false, &mut db, false);
                res.push((rhs.clone(), db));
            }
            res
        }
        Op::BatchMatMul { lhs, rhs } => {
            let (batch, m, k) = (lhs.shape()[0], lhs.shape()[1], lhs.shape()[2]);
            let n = rhs.shape()[2];
            let mut res = Vec::with_capacity(2);
            if lhs.requires_grad() {
                let mut da = vec![0.0; batch * m * k];
                for i in 0..batch {
                    gemm(
                        m,
                        n,
                        k,
                        &g[i * m * n..(i + 1) * m * n],
                        false,
                        &rhs.values()[i * k * n..(i + 1) * k * n],
                        true,
                        &mut da[i * m * k..(i + 1) * m * k],
                        false,
                    );
                }
                res.push((lhs.clone(), da));
            }
            if rhs.requires_grad() {
                let mut db = vec![0.0; batch * k * n];
                for i in 0..batch {
                    gemm(
                        k,
                        m,
                        n,
                        &lhs.values()[i * m * k..(i + 1) * m * k],
                        true,
                        &g[i * m * n..(i + 1) * m * n],
                        false,
                        &mut db[i * k * n..(i + 1) * k * n],
                        false,
                    );
                }
                res.push((rhs.clone(), db));
            }
            res
        }
        Op::Add { lhs, rhs } => vec![(lhs.clone(), g.to_vec()), (rhs.clone(), g.to_vec())],
        Op::Sub { lhs, rhs } => vec![
            (lhs.clone(), g.to_vec()),
            (rhs.clone(), g.iter().map(|v| -v).collect()),
        ],
        Op::Mul { lhs, rhs } => vec![
            (lhs.clone(), mul(g, rhs.values())),
            (rhs.clone(), mul(g, lhs.values())),
        ],
        Op::AddBias { input, bias } => {
            let n = bias.numel();
            let mut db = vec![0.0; n];
            for row in g.chunks(n) {
                db.iter_mut().zip(row).for_each(|(d, v)| *d += v);
            }
            vec![(input.clone(), g.to_vec()), (bias.clone(), db)]
        }
        Op::Scale { input, factor } => vec![(input.clone(), g.iter().map(|v| v * factor).collect())],
        Op::AddScalar { input } | Op::Reshape { input } => vec![(input.clone(), g.to_vec())],
        Op::Concat { inputs } => {
            let widths: Vec<usize> = inputs.iter().map(|t| t.shape()[t.rank() - 1]).collect();
            let total: usize = widths.iter().sum();
            let rows = g.len() / total;
            let mut parts: Vec<Vec<f64>> = inputs.iter().map(|t| Vec::with_capacity(t.numel())).collect();
            for r in 0..rows {
                let mut offset = r * total;
                for (part, &w) in parts.iter_mut().zip(&widths) {
                    part.extend_from_slice(&g[offset..offset + w]);
                    offset += w;
                }
            }
            inputs.iter().cloned().zip(parts).collect()
        }
        Op::Slice { input, start } => {
            let w = input.shape()[input.rank() - 1];
            let len = out.shape()[out.rank() - 1];
            let mut dx = vec![0.0; input.numel()];
            for (r, row) in g.chunks(len).enumerate() {
                dx[r * w + start..r * w + start + len].copy_from_slice(row);
            }
            vec![(input.clone(), dx)]
        }
        Op::SumAxis { input, axis } => {
            let (outer, extent, inner) = split_at_axis(input.shape(), *axis);
            let mut dx = Vec::with_capacity(input.numel());
            for o in 0..outer {
                for _ in 0..extent {
                    dx.extend_from_slice(&g[o * inner..(o + 1) * inner]);
                }
            }
            vec![(input.clone(), dx)]
        }
        Op::Sum { input } => vec![(input.clone(), vec![g[0]; input.numel()])],
        Op::Tanh { input } => {
            let dx = g
                .iter()
                .zip(out.values())
                .map(|(g, y)| g * (1.0 - y * y))
                .collect();
            vec![(input.clone(), dx)]
        }
        Op::Sigmoid { input } => {
            let dx = g
                .iter()
                .zip(out.values())
                .map(|(g, y)| g * y * (1.0 - y))
                .collect();
            vec![(input.clone(), dx)]
        }
        Op::Relu { input } => {
            let dx = g
                .iter()
                .zip(input.values())
                .map(|(g, &x)| if x > 0.0 { *g } else { 0.0 })
                .collect();
            vec![(input.clone(), dx)]
        }
        Op::SoftmaxMasked { input } => {
            let w = out.shape()[out.rank() - 1];
            let mut dx = vec![0.0; g.len()];
            for ((d, y), gy) in dx.chunks_mut(w).zip(out.values().chunks(w)).zip(g.chunks(w)) {
                let dot: f64 = y.iter().zip(gy).map(|(a, b)| a * b).sum();
                for ((d, &y), &gy) in d.iter_mut().zip(y).zip(gy) {
                    *d = y * (gy - dot);
                }
            }
            vec![(input.clone(), dx)]
        }
        Op::Transpose { input } => {
            let r = out.rank();
            let (rows, cols) = (out.shape()[r - 2], out.shape()[r - 1]);
            vec![(input.clone(), transpose_blocks(g, rows, cols))]
        }
        Op::Broadcast { input, axis } => {
            let count = out.shape()[*axis];
            let outer: usize = input.shape()[..*axis].iter().product();
            let inner: usize = input.shape()[*axis..].iter().product();
            let mut dx = vec![0.0; input.numel()];
            for o in 0..outer {
                let dst = &mut dx[o * inner..(o + 1) * inner];
                for c in 0..count {
                    let src = &g[(o * count + c) * inner..(o * count + c + 1) * inner];
                    dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
                }
            }
            vec![(input.clone(), dx)]
        }
        Op::BceWithLogits {
            logits,
            targets,
            mask,
            count,
        } => {
            let scale = g[0] / *count as f64;
            let dx = logits
                .values()
                .iter()
                .zip(targets)
                .zip(mask)
                .map(|((&x, &y), &m)| if m { scale * (sigmoid(x) - y) } else { 0.0 })
                .collect();
            vec![(logits.clone(), dx)]
        }
    }
}

fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}
