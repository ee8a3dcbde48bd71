//! Train/validation/test splits.
//!
//! The skeleton split groups molecules by a Weisfeiler-Lehman hash of their
//! bare connectivity (atom labels erased, bonds untyped) and assigns whole
//! groups, largest first, so structurally identical skeletons never straddle
//! two subsets. It approximates a scaffold split without ring-system
//! chemistry.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::MolGraph;

const WL_ITERATIONS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SplitError {
    #[error("cannot split {0} samples into three subsets")]
    TooSmall(usize),
    #[error("fractions {0:?} must be positive and sum to 1")]
    BadFractions((f64, f64, f64)),
}

fn check(n: usize, fractions: (f64, f64, f64)) -> Result<(usize, usize), SplitError> {
    if n < 3 {
        return Err(SplitError::TooSmall(n));
    }
    let (a, b, c) = fractions;
    if !(a > 0.0 && b > 0.0 && c > 0.0) || (a + b + c - 1.0).abs() > 1e-9 {
        return Err(SplitError::BadFractions(fractions));
    }
    let train = (a * n as f64).round() as usize;
    let train_val = ((a + b) * n as f64).round() as usize;
    Ok((train, train_val))
}

/// Weisfeiler-Lehman hash of the unlabeled, untyped skeleton of `g`.
/// `salt` perturbs the key values without changing which graphs collide.
pub fn skeleton_key(g: &MolGraph, salt: u64) -> u64 {
    let adj = g.neighbors();
    let mut labels = vec![0u64; adj.len()];
    let mut history: Vec<u64> = Vec::with_capacity(adj.len() * WL_ITERATIONS);
    for _ in 0..WL_ITERATIONS {
        labels = adj
            .iter()
            .enumerate()
            .map(|(i, nbrs)| {
                let mut around: Vec<u64> = nbrs.iter().map(|&j| labels[j]).collect();
                around.sort_unstable();
                let mut h = DefaultHasher::new();
                labels[i].hash(&mut h);
                around.hash(&mut h);
                h.finish()
            })
            .collect();
        history.extend(&labels);
    }
    history.sort_unstable();
    let mut h = DefaultHasher::new();
    salt.hash(&mut h);
    adj.len().hash(&mut h);
    history.hash(&mut h);
    h.finish()
}

/// Greedy skeleton-group split; `seed` salts the keys, which only changes
/// the order of equally sized groups.
pub fn skeleton_split(
    graphs: &[MolGraph],
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<Split, SplitError> {
    let keys: Vec<u64> = graphs.iter().map(|g| skeleton_key(g, seed)).collect();
    split_by_keys(&keys, fractions)
}

pub(crate) fn split_by_keys(keys: &[u64], fractions: (f64, f64, f64)) -> Result<Split, SplitError> {
    let (train_cap, train_val_cap) = check(keys.len(), fractions)?;
    let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, &k) in keys.iter().enumerate() {
        groups.entry(k).or_default().push(i);
    }
    let mut ordered: Vec<(u64, Vec<usize>)> = groups.into_iter().collect();
    ordered.sort_by(|(ka, a), (kb, b)| b.len().cmp(&a.len()).then(ka.cmp(kb)));

    let mut split = Split::default();
    for (_, members) in ordered {
        if split.train.len() + members.len() <= train_cap {
            split.train.extend(members);
        } else if split.train.len() + split.val.len() + members.len() <= train_val_cap {
            split.val.extend(members);
        } else {
            split.test.extend(members);
        }
    }
    split.train.sort_unstable();
    split.val.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

/// Uniform shuffle split.
pub fn random_split(n: usize, fractions: (f64, f64, f64), seed: u64) -> Result<Split, SplitError> {
    let (train_cap, train_val_cap) = check(n, fractions)?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut split = Split {
        train: idx[..train_cap].to_vec(),
        val: idx[train_cap..train_val_cap].to_vec(),
        test: idx[train_val_cap..].to_vec(),
    };
    split.train.sort_unstable();
    split.val.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}
