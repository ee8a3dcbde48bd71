//! Finite-difference gradient checks over every layer family, every module
//! variant, the readout and both losses.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chem::synthetic::random_parts;
use crate::chem::{GraphBatch, GraphParts, TaskKind};
use crate::gnn::{GraphInput, HostKind, HostLayer, ParamStore, Phase};
use crate::gwm::{gwm_step, GwmLayer, GwmVariant};
use crate::model::{readout, Readout};
use crate::tensor::{grad_check_report, Tensor, TensorError};
use crate::train::{task_loss, LossError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    pub graphs: usize,
    pub min_nodes: usize,
    pub max_nodes: usize,
    pub dim: usize,
    pub heads: usize,
    pub relations: usize,
    pub step: f64,
    pub tolerance: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 0,
            graphs: 10,
            min_nodes: 4,
            max_nodes: 10,
            dim: 4,
            heads: 2,
            relations: 2,
            step: 1e-5,
            tolerance: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentResult {
    pub name: String,
    /// Worst relative error over all graphs.
    pub max_rel_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub components: Vec<ComponentResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.components.iter().all(|c| c.passed)
    }

    pub fn offenders(&self) -> Vec<&ComponentResult> {
        self.components.iter().filter(|c| !c.passed).collect()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SuiteError {
    #[error("component {component}: {source}")]
    Tensor { component: String, source: TensorError },
    #[error("component {component}: {source}")]
    Loss { component: String, source: LossError },
}

fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Result<Tensor, TensorError> {
    let n = shape.iter().product();
    Tensor::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(), shape)
}

/// Each check runs on a two-graph batch, graph `i` padded against graph
/// `i + 1`, so masking is exercised as well.
fn batches(cfg: &SuiteConfig, rng: &mut ChaCha8Rng) -> Vec<GraphBatch> {
    let parts: Vec<GraphParts> = (0..cfg.graphs)
        .map(|_| {
            let n = rng.gen_range(cfg.min_nodes..=cfg.max_nodes);
            random_parts(rng, n, cfg.dim, cfg.relations)
        })
        .collect();
    (0..parts.len())
        .map(|i| {
            let pair = [parts[i].clone(), parts[(i + 1) % parts.len()].clone()];
            GraphBatch::from_parts(&pair, cfg.relations)
        })
        .collect()
}

/// Store parameters followed by `inputs`, so input gradients are checked
/// too.
fn check(
    component: &str,
    store: &ParamStore,
    inputs: Vec<Tensor>,
    step: f64,
    f: impl Fn(&[Tensor], &[Tensor]) -> Result<Tensor, TensorError>,
) -> Result<f64, SuiteError> {
    let mut all = store.constants();
    let split = all.len();
    all.extend(inputs);
    grad_check_report(|t: &[Tensor]| f(&t[..split], &t[split..]), &all, step)
        .map(|r| r.max_rel_error)
        .map_err(|source| SuiteError::Tensor {
            component: component.into(),
            source,
        })
}

/// Weighted sum with fixed random weights, so every output entry carries a
/// distinct gradient.
fn project(x: &Tensor, w: &Tensor) -> Result<Tensor, TensorError> {
    Ok(x.mul(w)?.sum())
}

pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport, SuiteError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let batches = batches(cfg, &mut rng);
    let d = cfg.dim;
    let mut components = Vec::new();
    let mut record = |name: String, errors: Vec<f64>| {
        let max = errors.into_iter().fold(0.0, f64::max);
        components.push(ComponentResult {
            passed: max < cfg.tolerance,
            name,
            max_rel_error: max,
        });
    };
    let tensor_err = |component: &str| {
        let component = component.to_string();
        move |source| SuiteError::Tensor { component, source }
    };

    for kind in HostKind::ALL {
        let name = format!("host/{kind}");
        let mut errors = Vec::new();
        for (i, batch) in batches.iter().enumerate() {
            let seed = cfg.seed.wrapping_mul(1000).wrapping_add(i as u64);
            let mut store = ParamStore::new(seed);
            let layer = HostLayer::new(kind, &mut store, "host", d, cfg.heads, cfg.relations, 0.0);
            store.perturb(seed ^ 0x5eed, 0.2);
            let graph = GraphInput::new(batch).map_err(tensor_err(&name))?;
            let shape = [batch.graphs, batch.max_nodes, d];
            let h = graph.mask_rows(&random_tensor(&mut rng, &shape).map_err(tensor_err(&name))?)
                .map_err(tensor_err(&name))?;
            let w = random_tensor(&mut rng, &shape).map_err(tensor_err(&name))?;
            errors.push(check(&name, &store, vec![h], cfg.step, |p, x| {
                project(&layer.forward(p, &x[0], &graph, &mut Phase::Eval)?, &w)
            })?);
        }
        record(name, errors);
    }

    for variant in GwmVariant::ALL {
        let name = format!("gwm/{variant}");
        let mut errors = Vec::new();
        for (i, batch) in batches.iter().enumerate() {
            let seed = cfg.seed.wrapping_mul(1000).wrapping_add(100 + i as u64);
            let mut store = ParamStore::new(seed);
            let layer = GwmLayer::new(variant, &mut store, "gwm", d, cfg.heads);
            store.perturb(seed ^ 0x5eed, 0.2);
            let graph = GraphInput::new(batch).map_err(tensor_err(&name))?;
            let shape = [batch.graphs, batch.max_nodes, d];
            let mut inputs = Vec::new();
            for s in [&shape[..], &shape[..], &[batch.graphs, d][..]] {
                let t = random_tensor(&mut rng, s).map_err(tensor_err(&name))?;
                inputs.push(if s.len() == 3 { graph.mask_rows(&t).map_err(tensor_err(&name))? } else { t });
            }
            let wh = random_tensor(&mut rng, &shape).map_err(tensor_err(&name))?;
            let wg = random_tensor(&mut rng, &[batch.graphs, d]).map_err(tensor_err(&name))?;
            errors.push(check(&name, &store, inputs, cfg.step, |p, x| {
                let out = gwm_step(&x[0], &x[2], &x[1], &graph, &layer, p)?;
                project(&out.h, &wh)?.add(&project(&out.g, &wg)?)
            })?);
        }
        record(name, errors);
    }

    let tasks = 3;
    let mut errors = Vec::new();
    for (i, batch) in batches.iter().enumerate() {
        let seed = cfg.seed.wrapping_mul(1000).wrapping_add(200 + i as u64);
        let mut store = ParamStore::new(seed);
        let r = Readout {
            aggregate: store.glorot("readout.aggregate", [d, d]),
            mix: store.glorot("readout.mix", [2 * d, tasks]),
            bias: store.zeros("readout.bias", &[tasks]),
        };
        store.perturb(seed ^ 0x5eed, 0.2);
        let graph = GraphInput::new(batch).map_err(tensor_err("readout"))?;
        let h = graph
            .mask_rows(&random_tensor(&mut rng, &[batch.graphs, batch.max_nodes, d]).map_err(tensor_err("readout"))?)
            .map_err(tensor_err("readout"))?;
        let g = random_tensor(&mut rng, &[batch.graphs, d]).map_err(tensor_err("readout"))?;
        let w = random_tensor(&mut rng, &[batch.graphs, tasks]).map_err(tensor_err("readout"))?;
        errors.push(check("readout", &store, vec![h, g], cfg.step, |p, x| {
            project(&readout(&x[0], &x[1], &r, p)?, &w)
        })?);
    }
    record("readout".into(), errors);

    for (task, name) in [(TaskKind::Classify, "loss/bce"), (TaskKind::Regress, "loss/mse")] {
        let mut errors = Vec::new();
        for batch in &batches {
            let n = batch.graphs * tasks;
            let pred = random_tensor(&mut rng, &[batch.graphs, tasks])
                .map_err(tensor_err(name))?
                .scale(3.0);
            let labels: Vec<f64> = (0..n)
                .map(|_| match task {
                    TaskKind::Classify => f64::from(u8::from(rng.gen_bool(0.5))),
                    TaskKind::Regress => rng.gen_range(-2.0..2.0),
                })
                .collect();
            let mut mask: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.7)).collect();
            mask[0] = true;
            let report = grad_check_report(
                |t: &[Tensor]| task_loss(task, &t[0], &labels, &mask),
                &[pred],
                cfg.step,
            )
            .map_err(|source| SuiteError::Loss {
                component: name.into(),
                source,
            })?;
            errors.push(report.max_rel_error);
        }
        record(name.into(), errors);
    }

    Ok(SuiteReport { components })
}
