use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{AdamError, AdamState};
use super::loss::{task_loss, task_loss_value, LossError};
use super::metrics::{masked_mae, mean_task_auc};
use crate::chem::{Dataset, GraphBatch, GraphParts, Split, TaskKind, Vocab};
use crate::gnn::Phase;
use crate::model::{Model, ModelConfig, ModelError};
use crate::tensor::TensorError;

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("{0} split is empty")]
    EmptySplit(&'static str),
    #[error("non-finite loss at epoch {epoch}, minibatch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("batch size must be positive")]
    BatchSize,
    #[error("split index {0} is out of range")]
    Index(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Adam(#[from] AdamError),
    #[error("record line {line}: {source}")]
    Record { line: usize, source: serde_json::Error },
    #[error("record has no summary line")]
    NoSummary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 32,
        }
    }
}

/// Featurized graphs ready for batching.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub parts: Vec<GraphParts>,
    pub relations: usize,
    pub task: TaskKind,
    pub tasks: usize,
}

impl Prepared {
    pub fn new(data: &Dataset, vocab: &Vocab) -> Self {
        Prepared {
            parts: data
                .graphs
                .iter()
                .zip(&data.labels)
                .map(|(g, l)| GraphParts::from_mol(g, vocab, l.clone()))
                .collect(),
            relations: crate::chem::BOND_TYPES,
            task: data.task,
            tasks: data.tasks(),
        }
    }

    pub fn batch(&self, indices: &[usize]) -> GraphBatch {
        let parts: Vec<GraphParts> = indices.iter().map(|&i| self.parts[i].clone()).collect();
        GraphBatch::from_parts(&parts, self.relations)
    }
}

/// One epoch's numbers. Metrics are ROC-AUC for classification and MAE for
/// regression, `None` where undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean of the minibatch losses seen during the epoch.
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_metric: Option<f64>,
    pub test_loss: f64,
    pub test_metric: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub config: ModelConfig,
    pub epochs: usize,
    pub batch_size: usize,
    pub metric: String,
    pub best_epoch: usize,
    pub best_val_metric: Option<f64>,
    pub test_metric_at_best: Option<f64>,
    pub test_loss_at_best: f64,
    pub final_train_loss: f64,
    pub final_test_loss: f64,
}

/// Per-epoch records plus a summary. Wall time is kept out so that equal
/// inputs give byte-identical records.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub epochs: Vec<EpochRecord>,
    pub summary: RunSummary,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Line {
    Epoch(EpochRecord),
    Summary(Box<RunSummary>),
}

impl RunRecord {
    /// One JSON object per epoch followed by the summary object.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.epochs {
            out.push_str(&serde_json::to_string(&Line::Epoch(e.clone())).expect("record serializes"));
            out.push('\n');
        }
        let summary = Line::Summary(Box::new(self.summary.clone()));
        out.push_str(&serde_json::to_string(&summary).expect("record serializes"));
        out.push('\n');
        out
    }

    pub fn from_jsonl(text: &str) -> Result<RunRecord, TrainError> {
        let mut epochs = Vec::new();
        let mut summary = None;
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            match serde_json::from_str(line).map_err(|source| TrainError::Record { line: i + 1, source })? {
                Line::Epoch(e) => epochs.push(e),
                Line::Summary(s) => summary = Some(*s),
            }
        }
        Ok(RunRecord {
            epochs,
            summary: summary.ok_or(TrainError::NoSummary)?,
        })
    }
}

pub struct TrainOutcome {
    pub record: RunRecord,
    /// Parameters from the best validation epoch.
    pub model: Model,
    pub wall_time: Duration,
}

struct Evaluation {
    loss: f64,
    metric: Option<f64>,
}

fn evaluate(model: &Model, data: &Prepared, indices: &[usize], batch_size: usize) -> Result<Evaluation, TrainError> {
    let mut pred = Vec::new();
    let mut labels = Vec::new();
    let mut mask = Vec::new();
    for chunk in indices.chunks(batch_size) {
        let batch = data.batch(chunk);
        pred.extend(model.predict(&batch)?);
        labels.extend_from_slice(&batch.labels);
        mask.extend_from_slice(&batch.label_mask);
    }
    let loss = task_loss_value(data.task, &pred, &labels, &mask)?;
    let metric = match data.task {
        TaskKind::Classify => mean_task_auc(&pred, &labels, &mask, data.tasks),
        TaskKind::Regress => masked_mae(&pred, &labels, &mask),
    };
    Ok(Evaluation { loss, metric })
}

/// Whether `candidate` beats `best` on validation. Higher AUC or lower MAE
/// wins; without a metric the lower validation loss wins.
fn improves(task: TaskKind, candidate: &EpochRecord, best: &EpochRecord) -> bool {
    match (candidate.val_metric, best.val_metric) {
        (Some(c), Some(b)) => match task {
            TaskKind::Classify => c > b,
            TaskKind::Regress => c < b,
        },
        (Some(_), None) => true,
        (None, Some(_)) => false,
        (None, None) => candidate.val_loss < best.val_loss,
    }
}

/// Trains a fresh model built from `config` with Adam on shuffled
/// minibatches. Initialization, shuffling and dropout all derive from
/// `config.seed`, so equal inputs give identical records.
pub fn train_loop(config: &ModelConfig, data: &Prepared, split: &Split, train: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    let start = Instant::now();
    for (name, s) in [("train", &split.train), ("validation", &split.val), ("test", &split.test)] {
        if s.is_empty() {
            return Err(TrainError::EmptySplit(name));
        }
        if let Some(&i) = s.iter().find(|&&i| i >= data.parts.len()) {
            return Err(TrainError::Index(i));
        }
    }
    if train.batch_size == 0 {
        return Err(TrainError::BatchSize);
    }
    let mut model = Model::new(config.clone())?;
    let mut adam = AdamState::new(model.store());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut order = split.train.clone();
    let mut epochs: Vec<EpochRecord> = Vec::with_capacity(train.epochs);
    let mut best: Option<(usize, crate::gnn::ParamStore)> = None;

    for epoch in 1..=train.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut counted = 0usize;
        for (b, chunk) in order.chunks(train.batch_size).enumerate() {
            let batch = data.batch(chunk);
            if !batch.label_mask.iter().any(|&m| m) {
                continue;
            }
            let params = model.store().bind();
            let out = model.forward(&params, &batch, &mut Phase::Train(&mut rng))?;
            let loss = task_loss(data.task, &out.predictions, &batch.labels, &batch.label_mask)?;
            let value = loss.item()?;
            if !value.is_finite() {
                return Err(TrainError::NonFiniteLoss { epoch, batch: b + 1 });
            }
            loss.backward()?;
            let grads: Vec<Vec<f64>> = params
                .iter()
                .map(|p| p.grad().unwrap_or_else(|| vec![0.0; p.numel()]))
                .collect();
            adam.step(model.store_mut(), &grads)?;
            total += value;
            counted += 1;
        }
        let val = evaluate(&model, data, &split.val, train.batch_size)?;
        let test = evaluate(&model, data, &split.test, train.batch_size)?;
        let record = EpochRecord {
            epoch,
            train_loss: if counted > 0 { total / counted as f64 } else { 0.0 },
            val_loss: val.loss,
            val_metric: val.metric,
            test_loss: test.loss,
            test_metric: test.metric,
        };
        log::debug!(
            "epoch {epoch}: train {:.6} val {:.6} test {:.6}",
            record.train_loss,
            record.val_loss,
            record.test_loss
        );
        let better = match &best {
            None => true,
            Some((i, _)) => improves(data.task, &record, &epochs[*i]),
        };
        if better {
            best = Some((epochs.len(), model.store().clone()));
        }
        epochs.push(record);
    }

    let (best_index, best_store) = match best {
        Some(b) => b,
        None => (usize::MAX, model.store().clone()),
    };
    *model.store_mut() = best_store;
    let at_best = epochs.get(best_index);
    let last = epochs.last();
    let summary = RunSummary {
        seed: config.seed,
        config: config.clone(),
        epochs: train.epochs,
        batch_size: train.batch_size,
        metric: match data.task {
            TaskKind::Classify => "roc_auc".into(),
            TaskKind::Regress => "mae".into(),
        },
        best_epoch: at_best.map_or(0, |e| e.epoch),
        best_val_metric: at_best.and_then(|e| e.val_metric),
        test_metric_at_best: at_best.and_then(|e| e.test_metric),
        test_loss_at_best: at_best.map_or(f64::NAN, |e| e.test_loss),
        final_train_loss: last.map_or(f64::NAN, |e| e.train_loss),
        final_test_loss: last.map_or(f64::NAN, |e| e.test_loss),
    };
    Ok(TrainOutcome {
        record: RunRecord { epochs, summary },
        model,
        wall_time: start.elapsed(),
    })
}
