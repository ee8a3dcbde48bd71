//! Full model: node embedding, `L` host layers with the optional module
//! interleaved, and the graph-level readout.

mod checkpoint;
mod config;

use crate::chem::GraphBatch;
use crate::gnn::{GraphInput, HostLayer, ParamId, ParamStore, Phase};
use crate::gwm::{gwm_step, init_supernode, GwmLayer, GwmOutput, SupernodeEmbed};
use crate::tensor::{Tensor, TensorError};

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint, CheckpointError};
pub use config::{ModelConfig, Variant};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("batch {what} width is {got}, model expects {expected}")]
    Width {
        what: &'static str,
        expected: usize,
        got: usize,
    },
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// `DNN_r2` is a masked node sum followed by a linear map; `DNN_r1` is one
/// affine layer on `[aggregate | g_L]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Readout {
    /// `[D, D]`
    pub aggregate: ParamId,
    /// `[2D, T]`
    pub mix: ParamId,
    /// `[T]`
    pub bias: ParamId,
}

/// `[B, N, D]` node states with zero padding and `[B, D]` supernode state to
/// `[B, T]` predictions.
pub fn readout(h: &Tensor, g: &Tensor, r: &Readout, params: &[Tensor]) -> std::result::Result<Tensor, TensorError> {
    let pooled = h.sum_axis(1)?.matmul(&params[r.aggregate])?;
    Tensor::concat(&[pooled, g.clone()])?
        .matmul(&params[r.mix])?
        .add_bias(&params[r.bias])
}

/// Everything one forward pass produced.
#[derive(Debug, Clone)]
pub struct ForwardOutput {
    /// `[B, T]` logits or regression outputs.
    pub predictions: Tensor,
    /// Final node states `[B, N, D]`.
    pub h: Tensor,
    /// Final supernode state, absent without the module.
    pub g: Option<Tensor>,
    /// Per-layer module outputs.
    pub steps: Vec<GwmOutput>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    config: ModelConfig,
    store: ParamStore,
    embed: ParamId,
    super_embed: Option<SupernodeEmbed>,
    hosts: Vec<HostLayer>,
    modules: Vec<GwmLayer>,
    readout: Readout,
}

impl Model {
    pub fn new(config: ModelConfig) -> Result<Model> {
        config.validate().map_err(ModelError::Config)?;
        let d = config.dim;
        let mut store = ParamStore::new(config.seed);
        let embed = store.glorot("embed.node", [config.node_features, d]);
        let super_embed = config
            .variant
            .module()
            .map(|_| SupernodeEmbed::new(&mut store, "embed.super", config.super_features, d));
        let mut hosts = Vec::with_capacity(config.layers);
        let mut modules = Vec::new();
        for l in 0..config.layers {
            hosts.push(HostLayer::new(
                config.host,
                &mut store,
                &format!("layer{l}.host"),
                d,
                config.heads,
                config.relations,
                config.dropout,
            ));
            if let Some(v) = config.variant.module() {
                modules.push(GwmLayer::new(v, &mut store, &format!("layer{l}.gwm"), d, config.heads));
            }
        }
        let readout = Readout {
            aggregate: store.glorot("readout.aggregate", [d, d]),
            mix: store.glorot("readout.mix", [2 * d, config.tasks]),
            bias: store.zeros("readout.bias", &[config.tasks]),
        };
        Ok(Model {
            config,
            store,
            embed,
            super_embed,
            hosts,
            modules,
            readout,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn store(&self) -> &ParamStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    pub fn hosts(&self) -> &[HostLayer] {
        &self.hosts
    }

    pub fn modules(&self) -> &[GwmLayer] {
        &self.modules
    }

    pub fn readout_params(&self) -> &Readout {
        &self.readout
    }

    pub fn super_embed(&self) -> Option<&SupernodeEmbed> {
        self.super_embed.as_ref()
    }

    /// Names and shapes of the host-layer tensors, in allocation order.
    pub fn host_shapes(&self) -> Vec<(String, Vec<usize>)> {
        self.store
            .entries()
            .iter()
            .filter(|e| e.name.contains(".host."))
            .map(|e| (e.name.clone(), e.shape.clone()))
            .collect()
    }

    fn check_widths(&self, batch: &GraphBatch) -> Result<()> {
        let checks = [
            ("node feature", self.config.node_features, batch.node_width),
            ("relation", self.config.relations, batch.relations),
            ("label", self.config.tasks, batch.tasks),
        ];
        for (what, expected, got) in checks {
            if expected != got {
                return Err(ModelError::Width { what, expected, got });
            }
        }
        if self.super_embed.is_some() && batch.super_width != self.config.super_features {
            return Err(ModelError::Width {
                what: "supernode feature",
                expected: self.config.super_features,
                got: batch.super_width,
            });
        }
        Ok(())
    }

    /// Runs the model with `params` standing in for the store's tensors,
    /// either [`ParamStore::bind`] for training or [`ParamStore::constants`].
    pub fn forward(&self, params: &[Tensor], batch: &GraphBatch, phase: &mut Phase<'_>) -> Result<ForwardOutput> {
        self.check_widths(batch)?;
        let graph = GraphInput::new(batch)?;
        let (b, n, d) = (batch.graphs, batch.max_nodes, self.config.dim);
        let x = Tensor::new(batch.node_features.clone(), &[b, n, batch.node_width])?;
        let mut h = graph.mask_rows(&x.matmul(&params[self.embed])?)?;
        let mut g = match &self.super_embed {
            Some(embed) => {
                let raw = Tensor::new(batch.super_features.clone(), &[b, batch.super_width])?;
                Some(init_supernode(&raw, embed, params)?)
            }
            None => None,
        };
        let mut steps = Vec::with_capacity(self.modules.len());
        for (l, host) in self.hosts.iter().enumerate() {
            let h_hat = host.forward(params, &h, &graph, phase)?;
            match (&g, self.modules.get(l)) {
                (Some(g_prev), Some(module)) => {
                    let out = gwm_step(&h, g_prev, &h_hat, &graph, module, params)?;
                    h = out.h.clone();
                    g = Some(out.g.clone());
                    steps.push(out);
                }
                _ => h = h_hat,
            }
        }
        let g_last = match &g {
            Some(g) => g.clone(),
            None => Tensor::zeros(&[b, d])?,
        };
        let predictions = readout(&h, &g_last, &self.readout, params)?;
        Ok(ForwardOutput {
            predictions,
            h,
            g,
            steps,
        })
    }

    /// Evaluation-mode predictions, `B × T` row-major.
    pub fn predict(&self, batch: &GraphBatch) -> Result<Vec<f64>> {
        let params = self.store.constants();
        let out = self.forward(&params, batch, &mut Phase::Eval)?;
        Ok(out.predictions.values().to_vec())
    }
}

#[cfg(test)]
mod tests;
