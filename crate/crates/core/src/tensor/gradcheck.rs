use super::{Tensor, TensorError};

/// Outcome of comparing analytic gradients with central differences.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// Largest `|analytic - numeric| / max(1, |analytic|, |numeric|)`.
    pub max_rel_error: f64,
    /// Parameter index and flat entry where the largest error occurred.
    pub worst: Option<(usize, usize)>,
    /// Largest error per parameter tensor.
    pub per_param: Vec<f64>,
}

/// Maximum relative gradient error of `f` at `params`; see
/// [`grad_check_report`].
pub fn grad_check<F, E>(f: F, params: &[Tensor], step: f64) -> Result<f64, E>
where
    F: Fn(&[Tensor]) -> Result<Tensor, E>,
    E: From<TensorError>,
{
    Ok(grad_check_report(f, params, step)?.max_rel_error)
}

/// Compares the gradient of the scalar `f(params)` from [`Tensor::backward`]
/// with the central difference `(f(p + step) - f(p - step)) / 2·step`, one
/// entry at a time.
///
/// `f` is called with fresh leaves carrying the values of `params`, so the
/// inputs themselves are never mutated.
pub fn grad_check_report<F, E>(f: F, params: &[Tensor], step: f64) -> Result<GradCheckReport, E>
where
    F: Fn(&[Tensor]) -> Result<Tensor, E>,
    E: From<TensorError>,
{
    if !(step > 0.0) {
        return Err(TensorError::InvalidArgument {
            op: "grad_check",
            msg: format!("step must be positive, got {step}"),
        }
        .into());
    }
    let leaves = params
        .iter()
        .map(|p| Tensor::param(p.values().to_vec(), p.shape()))
        .collect::<Result<Vec<_>, _>>()?;
    let loss = f(&leaves)?;
    finite(&loss)?;
    loss.backward()?;
    let analytic: Vec<Vec<f64>> = leaves
        .iter()
        .map(|l| l.grad().expect("leaves are tracked"))
        .collect();

    let mut constants: Vec<Tensor> = params.iter().map(Tensor::detach).collect();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        per_param: vec![0.0; params.len()],
    };
    for (pi, param) in params.iter().enumerate() {
        let mut values = param.values().to_vec();
        for idx in 0..values.len() {
            let orig = values[idx];
            values[idx] = orig + step;
            constants[pi] = Tensor::new(values.clone(), param.shape())?;
            let plus = finite(&f(&constants)?)?;
            values[idx] = orig - step;
            constants[pi] = Tensor::new(values.clone(), param.shape())?;
            let minus = finite(&f(&constants)?)?;
            values[idx] = orig;

            let numeric = (plus - minus) / (2.0 * step);
            let a = analytic[pi][idx];
            let err = (a - numeric).abs() / 1f64.max(a.abs()).max(numeric.abs());
            if err > report.per_param[pi] {
                report.per_param[pi] = err;
            }
            if err > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = err;
                report.worst = Some((pi, idx));
            }
        }
        constants[pi] = param.detach();
    }
    Ok(report)
}

fn finite(t: &Tensor) -> Result<f64, TensorError> {
    let v = t.item()?;
    if !v.is_finite() {
        return Err(TensorError::NonFinite("grad_check objective".into()));
    }
    Ok(v)
}
