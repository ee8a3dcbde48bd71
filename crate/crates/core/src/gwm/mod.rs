//! Supernode state and the module that exchanges messages between it and the
//! host network at every layer.
//!
//! Per layer the module computes
//!
//! * main to super: per-head attention over nodes, `α_k = softmax_i(h_iᵀ A_k g)`,
//!   head messages `m_k = Σ_i α_ik U_k h_i`, mixed as `tanh(W concat_k m_k)`;
//! * super to main: `tanh(F g)`;
//! * supernode self-message: `ĝ = tanh(V g)`;
//!
//! and merges them with the host message `ĥ` by one of three schemes (see
//! [`GwmVariant`]).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::gnn::{gru_cell, GraphInput, GruParams, ParamId, ParamStore};
use crate::tensor::{Result, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GwmVariant {
    /// Attention transmitter, sigmoid warp gates, GRU updates on both sides.
    Full,
    /// Attention transmitter, trainable linear mixes instead of gates, GRU
    /// only on the supernode side.
    NoGate,
    /// Plain node sum instead of attention, linear mixes, no GRUs.
    Simple,
}

impl GwmVariant {
    pub const ALL: [GwmVariant; 3] = [GwmVariant::Full, GwmVariant::NoGate, GwmVariant::Simple];

    pub fn name(self) -> &'static str {
        match self {
            GwmVariant::Full => "full",
            GwmVariant::NoGate => "nogate",
            GwmVariant::Simple => "simple",
        }
    }
}

impl fmt::Display for GwmVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GwmVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        GwmVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown module variant `{s}`"))
    }
}

/// Trainable linear map from raw graph-level features to `g₀`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SupernodeEmbed {
    pub w: ParamId,
    pub b: ParamId,
}

impl SupernodeEmbed {
    pub fn new(store: &mut ParamStore, prefix: &str, raw: usize, dim: usize) -> Self {
        SupernodeEmbed {
            w: store.glorot(&format!("{prefix}.w"), [raw, dim]),
            b: store.zeros(&format!("{prefix}.b"), &[dim]),
        }
    }
}

/// `g₀ = raw · W + b`, `[B, S] -> [B, D']`.
pub fn init_supernode(raw: &Tensor, embed: &SupernodeEmbed, params: &[Tensor]) -> Result<Tensor> {
    raw.matmul(&params[embed.w])?.add_bias(&params[embed.b])
}

/// Attention transmitter from the nodes to the supernode.
#[derive(Debug, Clone, PartialEq)]
pub struct Transmitter {
    /// Per head `[D', D]`; the score `h_iᵀ A g` is computed as `h_i · (g A')`
    /// with this matrix as `A'`.
    pub attn: Vec<ParamId>,
    /// Per head `[D, D']`.
    pub value: Vec<ParamId>,
    /// `[K·D', D']`
    pub mix: ParamId,
}

impl Transmitter {
    pub fn new(store: &mut ParamStore, prefix: &str, dim: usize, heads: usize) -> Self {
        Transmitter {
            attn: (0..heads)
                .map(|k| store.glorot(&format!("{prefix}.attn{k}"), [dim, dim]))
                .collect(),
            value: (0..heads)
                .map(|k| store.glorot(&format!("{prefix}.value{k}"), [dim, dim]))
                .collect(),
            mix: store.glorot(&format!("{prefix}.mix"), [heads * dim, dim]),
        }
    }
}

/// Main-to-super message `[B, D']` and the per-head node attention `[B, N]`.
pub fn transmit_main_to_super(
    h_prev: &Tensor,
    g_prev: &Tensor,
    graph: &GraphInput,
    tx: &Transmitter,
    params: &[Tensor],
) -> Result<(Tensor, Vec<Tensor>)> {
    let (b, n, d) = (graph.graphs, graph.nodes, h_prev.shape()[2]);
    let mut alphas = Vec::with_capacity(tx.attn.len());
    let mut messages = Vec::with_capacity(tx.attn.len());
    for (&a, &u) in tx.attn.iter().zip(&tx.value) {
        let query = g_prev.matmul(&params[a])?.reshape(&[b, d, 1])?;
        let alpha = h_prev
            .bmm(&query)?
            .reshape(&[b, n])?
            .softmax_masked(&graph.node_mask)?;
        let pooled = alpha.reshape(&[b, 1, n])?.bmm(h_prev)?.reshape(&[b, d])?;
        messages.push(pooled.matmul(&params[u])?);
        alphas.push(alpha);
    }
    let m2s = Tensor::concat(&messages)?.matmul(&params[tx.mix])?.tanh();
    Ok((m2s, alphas))
}

/// Super-to-main message `tanh(g F)`, `[B, D'] -> [B, D]`.
pub fn transmit_super_to_main(g_prev: &Tensor, f: ParamId, params: &[Tensor]) -> Result<Tensor> {
    Ok(g_prev.matmul(&params[f])?.tanh())
}

/// Sigmoid gates of the warp merge. The biases let a gate saturate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WarpGate {
    pub h: ParamId,
    pub g: ParamId,
    pub b: ParamId,
    pub h_super: ParamId,
    pub g_super: ParamId,
    pub b_super: ParamId,
}

impl WarpGate {
    pub fn new(store: &mut ParamStore, prefix: &str, dim: usize) -> Self {
        WarpGate {
            h: store.glorot(&format!("{prefix}.h"), [dim, dim]),
            g: store.glorot(&format!("{prefix}.g"), [dim, dim]),
            b: store.zeros(&format!("{prefix}.b"), &[dim]),
            h_super: store.glorot(&format!("{prefix}.h_super"), [dim, dim]),
            g_super: store.glorot(&format!("{prefix}.g_super"), [dim, dim]),
            b_super: store.zeros(&format!("{prefix}.b_super"), &[dim]),
        }
    }
}

#[derive(Debug, Clone)]
pub struct WarpOutput {
    /// `[B, N, D]`
    pub h0: Tensor,
    /// `[B, D']`
    pub g0: Tensor,
    /// Node-side gate `[B, N, D]`.
    pub z: Tensor,
    /// Supernode-side gate `[B, D']`.
    pub z_super: Tensor,
}

/// `z = σ(ĥ H + g2m G + b)`, `h⁰ = (1 - z) ⊙ ĥ + z ⊙ g2m` with `g2m`
/// broadcast over nodes; `z' = σ(m2s H' + ĝ G' + b')`,
/// `g⁰ = z' ⊙ m2s + (1 - z') ⊙ ĝ`.
pub fn warp_gate_merge(
    h_hat: &Tensor,
    g_hat: &Tensor,
    g2m: &Tensor,
    m2s: &Tensor,
    gate: &WarpGate,
    params: &[Tensor],
) -> Result<WarpOutput> {
    let n = h_hat.shape()[1];
    let z = h_hat
        .matmul(&params[gate.h])?
        .add(&g2m.matmul(&params[gate.g])?.broadcast(1, n)?)?
        .add_bias(&params[gate.b])?
        .sigmoid();
    let h0 = z.one_minus().mul(h_hat)?.add(&z.mul(&g2m.broadcast(1, n)?)?)?;
    let z_super = m2s
        .matmul(&params[gate.h_super])?
        .add(&g_hat.matmul(&params[gate.g_super])?)?
        .add_bias(&params[gate.b_super])?
        .sigmoid();
    let g0 = z_super.mul(m2s)?.add(&z_super.one_minus().mul(g_hat)?)?;
    Ok(WarpOutput { h0, g0, z, z_super })
}

/// Ungated linear merges `ĥ Z₁ + g2m Z₂` and `m2s Z₁' + ĝ Z₂'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinearMerge {
    pub z1: ParamId,
    pub z2: ParamId,
    pub z1_super: ParamId,
    pub z2_super: ParamId,
}

impl LinearMerge {
    pub fn new(store: &mut ParamStore, prefix: &str, dim: usize) -> Self {
        LinearMerge {
            z1: store.glorot(&format!("{prefix}.z1"), [dim, dim]),
            z2: store.glorot(&format!("{prefix}.z2"), [dim, dim]),
            z1_super: store.glorot(&format!("{prefix}.z1_super"), [dim, dim]),
            z2_super: store.glorot(&format!("{prefix}.z2_super"), [dim, dim]),
        }
    }

    fn nodes(&self, h_hat: &Tensor, g2m: &Tensor, params: &[Tensor]) -> Result<Tensor> {
        let n = h_hat.shape()[1];
        h_hat
            .matmul(&params[self.z1])?
            .add(&g2m.matmul(&params[self.z2])?.broadcast(1, n)?)
    }

    fn supernode(&self, m2s: &Tensor, g_hat: &Tensor, params: &[Tensor]) -> Result<Tensor> {
        m2s.matmul(&params[self.z1_super])?
            .add(&g_hat.matmul(&params[self.z2_super])?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GwmParts {
    Full {
        tx: Transmitter,
        gate: WarpGate,
        gru_main: GruParams,
        gru_super: GruParams,
    },
    NoGate {
        tx: Transmitter,
        merge: LinearMerge,
        gru_super: GruParams,
    },
    Simple {
        /// `[D, D']`
        sum_w: ParamId,
        merge: LinearMerge,
    },
}

/// Parameters of the module at one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct GwmLayer {
    /// `F`, `[D', D]`
    pub super_to_main: ParamId,
    /// `V` of the supernode self-message, `[D', D']`
    pub self_message: ParamId,
    pub parts: GwmParts,
}

impl GwmLayer {
    pub fn new(variant: GwmVariant, store: &mut ParamStore, prefix: &str, dim: usize, heads: usize) -> Self {
        let p = |s: &str| format!("{prefix}.{s}");
        let super_to_main = store.glorot(&p("f"), [dim, dim]);
        let self_message = store.glorot(&p("v"), [dim, dim]);
        let parts = match variant {
            GwmVariant::Full => GwmParts::Full {
                tx: Transmitter::new(store, &p("tx"), dim, heads),
                gate: WarpGate::new(store, &p("gate"), dim),
                gru_main: GruParams::new(store, &p("gru_main"), dim, dim),
                gru_super: GruParams::new(store, &p("gru_super"), dim, dim),
            },
            GwmVariant::NoGate => GwmParts::NoGate {
                tx: Transmitter::new(store, &p("tx"), dim, heads),
                merge: LinearMerge::new(store, &p("merge"), dim),
                gru_super: GruParams::new(store, &p("gru_super"), dim, dim),
            },
            GwmVariant::Simple => GwmParts::Simple {
                sum_w: store.glorot(&p("sum_w"), [dim, dim]),
                merge: LinearMerge::new(store, &p("merge"), dim),
            },
        };
        GwmLayer {
            super_to_main,
            self_message,
            parts,
        }
    }

    pub fn variant(&self) -> GwmVariant {
        match self.parts {
            GwmParts::Full { .. } => GwmVariant::Full,
            GwmParts::NoGate { .. } => GwmVariant::NoGate,
            GwmParts::Simple { .. } => GwmVariant::Simple,
        }
    }
}

/// Result of one module step with intermediate values kept for inspection.
#[derive(Debug, Clone)]
pub struct GwmOutput {
    /// `[B, N, D]`, padded rows zero.
    pub h: Tensor,
    /// `[B, D']`
    pub g: Tensor,
    /// Per-head node attention `[B, N]`; empty for the simple variant.
    pub attention: Vec<Tensor>,
    pub g2m: Tensor,
    pub m2s: Tensor,
    /// Gates of the full variant.
    pub gates: Option<(Tensor, Tensor)>,
}

/// One layer of message exchange. `h_hat` is the host layer's output
/// computed from `h_prev`.
pub fn gwm_step(
    h_prev: &Tensor,
    g_prev: &Tensor,
    h_hat: &Tensor,
    graph: &GraphInput,
    layer: &GwmLayer,
    params: &[Tensor],
) -> Result<GwmOutput> {
    let g2m = transmit_super_to_main(g_prev, layer.super_to_main, params)?;
    let g_hat = g_prev.matmul(&params[layer.self_message])?.tanh();
    match &layer.parts {
        GwmParts::Full {
            tx,
            gate,
            gru_main,
            gru_super,
        } => {
            let (m2s, attention) = transmit_main_to_super(h_prev, g_prev, graph, tx, params)?;
            let warp = warp_gate_merge(h_hat, &g_hat, &g2m, &m2s, gate, params)?;
            let h = graph.mask_rows(&gru_cell(h_prev, &warp.h0, gru_main, params)?)?;
            let g = gru_cell(g_prev, &warp.g0, gru_super, params)?;
            Ok(GwmOutput {
                h,
                g,
                attention,
                g2m,
                m2s,
                gates: Some((warp.z, warp.z_super)),
            })
        }
        GwmParts::NoGate { tx, merge, gru_super } => {
            let (m2s, attention) = transmit_main_to_super(h_prev, g_prev, graph, tx, params)?;
            let h = graph.mask_rows(&merge.nodes(h_hat, &g2m, params)?)?;
            let g0 = merge.supernode(&m2s, &g_hat, params)?;
            let g = gru_cell(g_prev, &g0, gru_super, params)?;
            Ok(GwmOutput {
                h,
                g,
                attention,
                g2m,
                m2s,
                gates: None,
            })
        }
        GwmParts::Simple { sum_w, merge } => {
            let m2s = h_prev.sum_axis(1)?.matmul(&params[*sum_w])?.tanh();
            let h = graph.mask_rows(&merge.nodes(h_hat, &g2m, params)?)?;
            let g = merge.supernode(&m2s, &g_hat, params)?;
            Ok(GwmOutput {
                h,
                g,
                attention: Vec::new(),
                g2m,
                m2s,
                gates: None,
            })
        }
    }
}
