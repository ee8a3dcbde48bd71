//! Host message-passing layers and the pieces they share: a named parameter
//! store, per-batch graph constants and the GRU cell.

mod gru;
mod layers;
mod params;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chem::GraphBatch;
use crate::tensor::{Result, Tensor};

pub use gru::{gru_cell, GruParams};
pub use layers::HostLayer;
pub use params::{ParamEntry, ParamId, ParamStore};

/// Host layer family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HostKind {
    Rsgcn,
    Ggnn,
    Rgat,
    Gin,
}

impl HostKind {
    pub const ALL: [HostKind; 4] = [HostKind::Rsgcn, HostKind::Ggnn, HostKind::Rgat, HostKind::Gin];

    pub fn name(self) -> &'static str {
        match self {
            HostKind::Rsgcn => "rsgcn",
            HostKind::Ggnn => "ggnn",
            HostKind::Rgat => "rgat",
            HostKind::Gin => "gin",
        }
    }
}

impl fmt::Display for HostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HostKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        HostKind::ALL
            .into_iter()
            .find(|h| h.name() == s)
            .ok_or_else(|| format!("unknown host `{s}` (expected rsgcn, ggnn, rgat or gin)"))
    }
}

/// Whether a forward pass is for training (dropout active) or evaluation.
pub enum Phase<'a> {
    Eval,
    Train(&'a mut ChaCha8Rng),
}

impl Phase<'_> {
    pub fn is_training(&self) -> bool {
        matches!(self, Phase::Train(_))
    }
}

/// Inverted dropout: in training, zeroes entries with probability `rate` and
/// scales survivors by `1 / (1 - rate)`; identity otherwise.
pub fn dropout(x: &Tensor, rate: f64, phase: &mut Phase<'_>) -> Result<Tensor> {
    match phase {
        Phase::Train(rng) if rate > 0.0 => {
            let keep = 1.0 - rate;
            let mask: Vec<f64> = (0..x.numel())
                .map(|_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
                .collect();
            x.mul(&Tensor::new(mask, x.shape())?)
        }
        _ => Ok(x.clone()),
    }
}

/// Per-batch graph constants shared by every layer of one forward pass.
#[derive(Debug, Clone)]
pub struct GraphInput {
    pub graphs: usize,
    pub nodes: usize,
    pub node_mask: Vec<bool>,
    /// One `[B, N, N]` tensor per relation.
    pub adjacency: Vec<Tensor>,
    /// Relation-summed adjacency, `[B, N, N]`.
    pub total: Tensor,
    /// Nonzero pattern of `total`, row-major `B × N × N`.
    pub neighbor_mask: Vec<bool>,
    /// `D^-1/2 (A + I) D^-1/2` with self-loops on real nodes only.
    pub renormalized: Tensor,
}

impl GraphInput {
    pub fn new(batch: &GraphBatch) -> Result<GraphInput> {
        let (b, n) = (batch.graphs, batch.max_nodes);
        let shape = [b, n, n];
        let adjacency = (0..batch.relations)
            .map(|r| Tensor::new(batch.relation(r).to_vec(), &shape))
            .collect::<Result<Vec<_>>>()?;
        let mut total = vec![0.0; b * n * n];
        for r in 0..batch.relations {
            for (t, a) in total.iter_mut().zip(batch.relation(r)) {
                *t += a;
            }
        }
        let neighbor_mask = total.iter().map(|&a| a != 0.0).collect();

        let mut renorm = total.clone();
        for g in 0..b {
            let block = &mut renorm[g * n * n..(g + 1) * n * n];
            for i in 0..n {
                if batch.node_mask[g * n + i] {
                    block[i * n + i] += 1.0;
                }
            }
            let inv_sqrt: Vec<f64> = block
                .chunks(n)
                .map(|row| {
                    let d: f64 = row.iter().sum();
                    if d > 0.0 {
                        1.0 / d.sqrt()
                    } else {
                        0.0
                    }
                })
                .collect();
            for i in 0..n {
                for j in 0..n {
                    block[i * n + j] *= inv_sqrt[i] * inv_sqrt[j];
                }
            }
        }
        Ok(GraphInput {
            graphs: b,
            nodes: n,
            node_mask: batch.node_mask.clone(),
            adjacency,
            total: Tensor::new(total, &shape)?,
            neighbor_mask,
            renormalized: Tensor::new(renorm, &shape)?,
        })
    }

    pub fn relations(&self) -> usize {
        self.adjacency.len()
    }

    /// Constant `[B, N, width]` tensor, 1 on real nodes and 0 on padding.
    pub fn row_mask(&self, width: usize) -> Result<Tensor> {
        let mut values = Vec::with_capacity(self.node_mask.len() * width);
        for &m in &self.node_mask {
            let v = if m { 1.0 } else { 0.0 };
            values.extend(std::iter::repeat_n(v, width));
        }
        Tensor::new(values, &[self.graphs, self.nodes, width])
    }

    /// Zeroes the padded rows of a `[B, N, D]` tensor.
    pub fn mask_rows(&self, h: &Tensor) -> Result<Tensor> {
        h.mul(&self.row_mask(h.shape()[2])?)
    }
}
