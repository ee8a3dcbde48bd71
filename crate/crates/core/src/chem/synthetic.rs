//! Synthetic graph-level task whose label needs global information.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Atom, Bond, BondType, Dataset, GraphParts, MolGraph, TaskKind};

const SYMBOLS: [&str; 3] = ["C", "N", "O"];

/// Random tree on `n` nodes; with probability one half one extra edge closes
/// a cycle. Atoms are drawn uniformly from C, N, O; all bonds are single.
pub fn random_graph(rng: &mut impl Rng, n: usize) -> MolGraph {
    let atoms: Vec<Atom> = (0..n).map(|_| Atom::new(SYMBOLS[rng.gen_range(0..3)])).collect();
    let mut bonds: Vec<Bond> = (1..n)
        .map(|i| Bond {
            a: rng.gen_range(0..i),
            b: i,
            kind: BondType::Single,
        })
        .collect();
    if n >= 3 && rng.gen_bool(0.5) {
        loop {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            let taken = bonds
                .iter()
                .any(|x| (x.a == a && x.b == b) || (x.a == b && x.b == a));
            if a != b && !taken {
                bonds.push(Bond {
                    a,
                    b,
                    kind: BondType::Single,
                });
                break;
            }
        }
    }
    MolGraph::new(atoms, bonds).expect("generated graph is valid")
}

/// `count` graphs of 10 to 20 nodes labelled with the parity of their
/// diameter.
pub fn diameter_parity(count: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graphs = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for _ in 0..count {
        let n = rng.gen_range(10..=20);
        let g = random_graph(&mut rng, n);
        labels.push(vec![Some((g.diameter() % 2) as f64)]);
        graphs.push(g);
    }
    Dataset {
        task: TaskKind::Classify,
        task_names: vec!["diameter_parity".into()],
        graphs,
        labels,
    }
}

/// Graph with `n` nodes of uniform random features in [-1, 1), each pair
/// joined with probability 0.35 by an edge of a random relation.
pub fn random_parts(rng: &mut impl Rng, n: usize, width: usize, relations: usize) -> GraphParts {
    let node_features = (0..n)
        .map(|_| (0..width).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(0.35) {
                edges.push((i, j, rng.gen_range(0..relations)));
            }
        }
    }
    GraphParts {
        node_features,
        edges,
        super_features: vec![],
        labels: vec![],
    }
}
