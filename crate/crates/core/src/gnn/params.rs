use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::tensor::Tensor;

/// Index of a tensor in a [`ParamStore`], and in any slice produced by
/// [`ParamStore::bind`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl std::ops::Index<ParamId> for [Tensor] {
    type Output = Tensor;

    fn index(&self, id: ParamId) -> &Tensor {
        &self[id.0]
    }
}

impl std::ops::Index<ParamId> for Vec<Tensor> {
    type Output = Tensor;

    fn index(&self, id: ParamId) -> &Tensor {
        &self[id.0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

/// Ordered, named trainable tensors.
///
/// Each tensor is initialized from its own stream seeded by the store seed
/// and the tensor name, so its initial values do not depend on what else was
/// allocated before it.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore {
    seed: u64,
    entries: Vec<ParamEntry>,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

impl ParamStore {
    pub fn new(seed: u64) -> Self {
        ParamStore {
            seed,
            entries: Vec::new(),
        }
    }

    fn push(&mut self, name: &str, shape: &[usize], values: Vec<f64>) -> ParamId {
        assert!(
            self.entries.iter().all(|e| e.name != name),
            "duplicate parameter name {name}"
        );
        assert!(shape.iter().all(|&d| d > 0), "zero extent in {name}: {shape:?}");
        self.entries.push(ParamEntry {
            name: name.to_string(),
            shape: shape.to_vec(),
            values,
        });
        ParamId(self.entries.len() - 1)
    }

    /// Glorot-uniform matrix, `U(-a, a)` with `a = sqrt(6 / (rows + cols))`.
    pub fn glorot(&mut self, name: &str, shape: [usize; 2]) -> ParamId {
        let limit = (6.0 / (shape[0] + shape[1]) as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ fnv1a(name.as_bytes()));
        let dist = Uniform::new_inclusive(-limit, limit);
        let values = (0..shape[0] * shape[1]).map(|_| dist.sample(&mut rng)).collect();
        self.push(name, &shape, values)
    }

    pub fn zeros(&mut self, name: &str, shape: &[usize]) -> ParamId {
        self.push(name, shape, vec![0.0; shape.iter().product()])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn scalar_count(&self) -> usize {
        self.entries.iter().map(|e| e.values.len()).sum()
    }

    pub fn entries(&self) -> &[ParamEntry] {
        &self.entries
    }

    pub fn entry(&self, id: ParamId) -> &ParamEntry {
        &self.entries[id.0]
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.entries.iter().position(|e| e.name == name).map(ParamId)
    }

    /// Overwrites the values of one tensor.
    ///
    /// # Panics
    /// If the length differs from the tensor's element count.
    pub fn set(&mut self, id: ParamId, values: Vec<f64>) {
        let e = &mut self.entries[id.0];
        assert_eq!(values.len(), e.values.len(), "new values for {}", e.name);
        e.values = values;
    }

    pub fn values_mut(&mut self, id: ParamId) -> &mut [f64] {
        &mut self.entries[id.0].values
    }

    /// Adds `U(-scale, scale)` noise to every entry, moving zero-initialized
    /// biases off activation kinks before gradient checks.
    pub fn perturb(&mut self, seed: u64, scale: f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = Uniform::new_inclusive(-scale, scale);
        for e in &mut self.entries {
            e.values.iter_mut().for_each(|v| *v += dist.sample(&mut rng));
        }
    }

    /// Fresh tracked leaves, one per entry, ready for a differentiated pass.
    pub fn bind(&self) -> Vec<Tensor> {
        self.entries
            .iter()
            .map(|e| Tensor::param(e.values.clone(), &e.shape).expect("validated shape"))
            .collect()
    }

    /// Untracked copies for inference.
    pub fn constants(&self) -> Vec<Tensor> {
        self.entries
            .iter()
            .map(|e| Tensor::new(e.values.clone(), &e.shape).expect("validated shape"))
            .collect()
    }
}
