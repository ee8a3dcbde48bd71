use crate::chem::TaskKind;
use crate::tensor::{Tensor, TensorError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LossError {
    #[error("no labelled entries to average over")]
    NoLabels,
    #[error("classification label {0} at entry {1} is not 0 or 1")]
    NotBinary(f64, usize),
    #[error("{0} predictions for {1} labels")]
    Length(usize, usize),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

fn check(pred: usize, labels: &[f64], mask: &[bool]) -> Result<usize, LossError> {
    if labels.len() != pred || mask.len() != pred {
        return Err(LossError::Length(pred, labels.len()));
    }
    let count = mask.iter().filter(|&&m| m).count();
    if count == 0 {
        return Err(LossError::NoLabels);
    }
    Ok(count)
}

/// Mean binary cross-entropy with logits over entries where `mask` is true.
pub fn masked_bce_loss(logits: &Tensor, labels: &[f64], mask: &[bool]) -> Result<Tensor, LossError> {
    check(logits.numel(), labels, mask)?;
    if let Some((i, &y)) = labels
        .iter()
        .enumerate()
        .find(|&(i, &y)| mask[i] && y != 0.0 && y != 1.0)
    {
        return Err(LossError::NotBinary(y, i));
    }
    Ok(logits.bce_with_logits(labels, mask)?)
}

/// Mean squared error over entries where `mask` is true.
pub fn masked_mse_loss(pred: &Tensor, target: &[f64], mask: &[bool]) -> Result<Tensor, LossError> {
    let count = check(pred.numel(), target, mask)?;
    let target = Tensor::new(target.to_vec(), pred.shape())?;
    let weights: Vec<f64> = mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
    let diff = pred.sub(&target)?;
    Ok(diff
        .mul(&diff)?
        .mul(&Tensor::new(weights, pred.shape())?)?
        .sum()
        .scale(1.0 / count as f64))
}

/// The training objective for `task`.
pub fn task_loss(task: TaskKind, pred: &Tensor, labels: &[f64], mask: &[bool]) -> Result<Tensor, LossError> {
    match task {
        TaskKind::Classify => masked_bce_loss(pred, labels, mask),
        TaskKind::Regress => masked_mse_loss(pred, labels, mask),
    }
}

/// Value of [`task_loss`] on plain numbers, for evaluation passes.
pub fn task_loss_value(task: TaskKind, pred: &[f64], labels: &[f64], mask: &[bool]) -> Result<f64, LossError> {
    let count = check(pred.len(), labels, mask)?;
    let total: f64 = pred
        .iter()
        .zip(labels)
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|((&x, &y), _)| match task {
            TaskKind::Classify => x.max(0.0) - x * y + (-x.abs()).exp().ln_1p(),
            TaskKind::Regress => (x - y) * (x - y),
        })
        .sum();
    Ok(total / count as f64)
}

/// Mean squared deviation. Panics on length mismatch or empty input.
pub fn mse(pred: &[f64], target: &[f64]) -> f64 {
    assert!(!pred.is_empty() && pred.len() == target.len(), "mse lengths");
    pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / pred.len() as f64
}

/// Mean absolute deviation. Panics on length mismatch or empty input.
pub fn mae(pred: &[f64], target: &[f64]) -> f64 {
    assert!(!pred.is_empty() && pred.len() == target.len(), "mae lengths");
    pred.iter().zip(target).map(|(p, t)| (p - t).abs()).sum::<f64>() / pred.len() as f64
}
