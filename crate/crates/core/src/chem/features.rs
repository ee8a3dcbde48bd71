use serde::{Deserialize, Serialize};

use super::{MolGraph, BOND_TYPES};

/// Ordered atom-symbol table defining the one-hot node encoding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab {
    symbols: Vec<String>,
    /// When set, one extra trailing column absorbs symbols not in the table.
    unknown_bucket: bool,
}

impl Vocab {
    /// Exact table; atoms outside it get an all-zero row.
    pub fn new<S: AsRef<str>>(symbols: &[S]) -> Self {
        Vocab {
            symbols: symbols.iter().map(|s| s.as_ref().to_string()).collect(),
            unknown_bucket: false,
        }
    }

    pub fn with_unknown_bucket<S: AsRef<str>>(symbols: &[S]) -> Self {
        Vocab {
            unknown_bucket: true,
            ..Vocab::new(symbols)
        }
    }

    /// Elements common in drug-like datasets, plus an unknown bucket.
    pub fn organic() -> Self {
        Vocab::with_unknown_bucket(&[
            "C", "N", "O", "S", "F", "Cl", "Br", "I", "P", "B", "Si", "Se", "Na", "K",
        ])
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    /// Width of a one-hot row.
    pub fn width(&self) -> usize {
        self.symbols.len() + usize::from(self.unknown_bucket)
    }

    pub fn index(&self, symbol: &str) -> Option<usize> {
        self.symbols
            .iter()
            .position(|s| s == symbol)
            .or(self.unknown_bucket.then_some(self.symbols.len()))
    }

    /// Length of the vector returned by [`supernode_features`].
    pub fn supernode_width(&self) -> usize {
        self.width() + BOND_TYPES + 2
    }
}

/// Dense per-molecule inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Featurized {
    pub atoms: usize,
    pub width: usize,
    /// `atoms × width`, row-major.
    pub one_hot: Vec<f64>,
    /// `BOND_TYPES × atoms × atoms`, row-major, symmetric per relation.
    pub adjacency: Vec<f64>,
}

impl Featurized {
    pub fn adjacency_at(&self, relation: usize, i: usize, j: usize) -> f64 {
        self.adjacency[(relation * self.atoms + i) * self.atoms + j]
    }
}

pub fn featurize(g: &MolGraph, vocab: &Vocab) -> Featurized {
    let n = g.atom_count();
    let width = vocab.width();
    let mut one_hot = vec![0.0; n * width];
    for (i, atom) in g.atoms().iter().enumerate() {
        if let Some(k) = vocab.index(&atom.symbol) {
            one_hot[i * width + k] = 1.0;
        }
    }
    let mut adjacency = vec![0.0; BOND_TYPES * n * n];
    for b in g.bonds() {
        let r = b.kind.index();
        adjacency[(r * n + b.a) * n + b.b] = 1.0;
        adjacency[(r * n + b.b) * n + b.a] = 1.0;
    }
    Featurized {
        atoms: n,
        width,
        one_hot,
        adjacency,
    }
}

/// Graph-level raw features for the supernode:
/// `[atom-symbol histogram | bond-type histogram | atom count | bond count]`.
pub fn supernode_features(g: &MolGraph, vocab: &Vocab) -> Vec<f64> {
    let mut out = vec![0.0; vocab.supernode_width()];
    for atom in g.atoms() {
        if let Some(k) = vocab.index(&atom.symbol) {
            out[k] += 1.0;
        }
    }
    let base = vocab.width();
    for b in g.bonds() {
        out[base + b.kind.index()] += 1.0;
    }
    out[base + BOND_TYPES] = g.atom_count() as f64;
    out[base + BOND_TYPES + 1] = g.bond_count() as f64;
    out
}
