#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RatioError {
    #[error("{0} vanilla losses paired with {1} augmented losses")]
    Length(usize, usize),
    #[error("no loss pairs")]
    Empty,
    #[error("vanilla loss of pair {0} is zero")]
    ZeroLoss(usize),
}

/// Mean over seed-paired runs of `(L - L⁺) / |L|`, where `L` is the vanilla
/// loss and `L⁺` the loss with the module attached. Positive means the
/// module lowered the loss.
///
/// ```
/// use graphwarp::train::loss_reduction_ratio;
/// assert_eq!(loss_reduction_ratio(&[2.0], &[1.0]).unwrap(), 0.5);
/// assert!((loss_reduction_ratio(&[1.0], &[1.2]).unwrap() + 0.2).abs() < 1e-15);
/// ```
pub fn loss_reduction_ratio(vanilla: &[f64], plus: &[f64]) -> Result<f64, RatioError> {
    let per_pair = pair_ratios(vanilla, plus)?;
    Ok(per_pair.iter().sum::<f64>() / per_pair.len() as f64)
}

/// Per-pair ratios, in input order.
pub fn pair_ratios(vanilla: &[f64], plus: &[f64]) -> Result<Vec<f64>, RatioError> {
    if vanilla.len() != plus.len() {
        return Err(RatioError::Length(vanilla.len(), plus.len()));
    }
    if vanilla.is_empty() {
        return Err(RatioError::Empty);
    }
    vanilla
        .iter()
        .zip(plus)
        .enumerate()
        .map(|(i, (&l, &lp))| {
            if l == 0.0 {
                Err(RatioError::ZeroLoss(i))
            } else {
                Ok((l - lp) / l.abs())
            }
        })
        .collect()
}
