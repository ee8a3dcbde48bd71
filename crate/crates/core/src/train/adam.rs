use crate::gnn::ParamStore;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AdamError {
    #[error("non-finite gradient in parameter {0}")]
    NonFinite(String),
    #[error("{got} gradient tensors for {expected} parameters")]
    Count { expected: usize, got: usize },
    #[error("gradient for parameter {0} has the wrong length")]
    Length(String),
}

/// Adam with bias correction and the fixed hyperparameters
/// `α = 0.001, β₁ = 0.9, β₂ = 0.999, ε = 1e-8`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Completed steps.
    pub t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(store: &ParamStore) -> Self {
        let zeros: Vec<Vec<f64>> = store.entries().iter().map(|e| vec![0.0; e.values.len()]).collect();
        AdamState {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    /// Applies one update. Nothing changes if any gradient is non-finite.
    pub fn step(&mut self, store: &mut ParamStore, grads: &[Vec<f64>]) -> Result<(), AdamError> {
        if grads.len() != self.m.len() || store.len() != self.m.len() {
            return Err(AdamError::Count {
                expected: self.m.len(),
                got: grads.len(),
            });
        }
        for (e, g) in store.entries().iter().zip(grads) {
            if g.len() != e.values.len() {
                return Err(AdamError::Length(e.name.clone()));
            }
            if g.iter().any(|x| !x.is_finite()) {
                return Err(AdamError::NonFinite(e.name.clone()));
            }
        }
        self.t += 1;
        let t = self.t as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (i, g) in grads.iter().enumerate() {
            let values = store.values_mut(crate::gnn::ParamId(i));
            for (((p, &g), m), v) in values.iter_mut().zip(g).zip(&mut self.m[i]).zip(&mut self.v[i]) {
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
            }
        }
        Ok(())
    }
}
