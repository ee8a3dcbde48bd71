#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("ROC-AUC needs both classes, got {positives} positives and {negatives} negatives")]
    SingleClass { positives: usize, negatives: usize },
    #[error("{scores} scores for {labels} labels")]
    Length { scores: usize, labels: usize },
    #[error("score at index {0} is NaN")]
    NaN(usize),
}

/// Area under the ROC curve as the Mann-Whitney statistic: the probability
/// that a random positive scores above a random negative, ties counting one
/// half.
///
/// ```
/// use graphwarp::train::roc_auc;
/// assert_eq!(roc_auc(&[0.9, 0.1], &[true, false]).unwrap(), 1.0);
/// assert_eq!(roc_auc(&[0.4, 0.4, 0.4], &[true, false, true]).unwrap(), 0.5);
/// ```
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64, MetricError> {
    if scores.len() != labels.len() {
        return Err(MetricError::Length {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(MetricError::NaN(i));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(MetricError::SingleClass { positives, negatives });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // twice the rank sum of the positives, with tied groups sharing their
    // mean rank, kept in integers
    let mut rank_sum2: u128 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let group_pos = order[start..end].iter().filter(|&&i| labels[i]).count() as u128;
        rank_sum2 += group_pos * (start + 1 + end) as u128;
        start = end;
    }
    let p = positives as u128;
    let u2 = rank_sum2 - p * (p + 1);
    Ok(u2 as f64 / (2 * p * negatives as u128) as f64)
}

/// Mean ROC-AUC over the tasks that have both classes among their labelled
/// entries; `None` when no task qualifies. Inputs are `rows × tasks`.
pub fn mean_task_auc(scores: &[f64], labels: &[f64], mask: &[bool], tasks: usize) -> Option<f64> {
    let mut aucs = Vec::new();
    for t in 0..tasks {
        let (s, l): (Vec<f64>, Vec<bool>) = (t..scores.len())
            .step_by(tasks)
            .filter(|&i| mask[i])
            .map(|i| (scores[i], labels[i] == 1.0))
            .unzip();
        if let Ok(a) = roc_auc(&s, &l) {
            aucs.push(a);
        }
    }
    (!aucs.is_empty()).then(|| aucs.iter().sum::<f64>() / aucs.len() as f64)
}

/// Mean absolute error over labelled entries; `None` if there are none.
pub fn masked_mae(pred: &[f64], labels: &[f64], mask: &[bool]) -> Option<f64> {
    let (sum, count) = pred
        .iter()
        .zip(labels)
        .zip(mask)
        .filter(|(_, &m)| m)
        .fold((0.0, 0usize), |(s, c), ((p, y), _)| (s + (p - y).abs(), c + 1));
    (count > 0).then(|| sum / count as f64)
}
