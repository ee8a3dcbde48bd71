//! Molecular graphs: SMILES parsing, featurization, dataset splits and
//! padded minibatches.

mod batch;
mod dataset;
mod features;
mod smiles;
mod split;
pub mod synthetic;

use std::collections::{HashSet, VecDeque};
use std::fmt;

pub use batch::{batch, GraphBatch, GraphParts};
pub use dataset::{DataError, Dataset, TaskKind};
pub use features::{featurize, supernode_features, Featurized, Vocab};
pub use smiles::{parse_smiles, SmilesError, SmilesErrorKind};
pub use split::{random_split, skeleton_key, skeleton_split, Split, SplitError};

/// Number of bond types, and therefore of adjacency relations.
pub const BOND_TYPES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondType {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondType {
    pub const ALL: [BondType; BOND_TYPES] = [
        BondType::Single,
        BondType::Double,
        BondType::Triple,
        BondType::Aromatic,
    ];

    /// Relation index used for the per-type adjacency.
    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    /// Element symbol, capitalized (`"C"`, `"Cl"`), or `"*"` for a wildcard.
    pub symbol: String,
    pub aromatic: bool,
}

impl Atom {
    pub fn new(symbol: impl Into<String>) -> Self {
        Atom {
            symbol: symbol.into(),
            aromatic: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub kind: BondType,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("bond ({0}, {1}) references an atom outside 0..{2}")]
    OutOfRange(usize, usize, usize),
    #[error("bond from atom {0} to itself")]
    SelfLoop(usize),
    #[error("duplicate bond between atoms {0} and {1}")]
    Duplicate(usize, usize),
    #[error("graph has no atoms")]
    Empty,
}

/// Heavy-atom molecular graph with typed, undirected bonds.
#[derive(Clone, PartialEq, Eq)]
pub struct MolGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
}

impl MolGraph {
    pub fn new(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<Self, GraphError> {
        if atoms.is_empty() {
            return Err(GraphError::Empty);
        }
        let mut seen = HashSet::new();
        for bond in &bonds {
            if bond.a >= atoms.len() || bond.b >= atoms.len() {
                return Err(GraphError::OutOfRange(bond.a, bond.b, atoms.len()));
            }
            if bond.a == bond.b {
                return Err(GraphError::SelfLoop(bond.a));
            }
            if !seen.insert((bond.a.min(bond.b), bond.a.max(bond.b))) {
                return Err(GraphError::Duplicate(bond.a, bond.b));
            }
        }
        Ok(MolGraph { atoms, bonds })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    pub fn symbols(&self) -> Vec<&str> {
        self.atoms.iter().map(|a| a.symbol.as_str()).collect()
    }

    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.atoms.len()];
        for b in &self.bonds {
            adj[b.a].push(b.b);
            adj[b.b].push(b.a);
        }
        adj
    }

    /// Same molecule with atom `i` moved to position `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<MolGraph, GraphError> {
        assert_eq!(perm.len(), self.atoms.len(), "permutation length");
        let mut atoms = vec![Atom::new(""); self.atoms.len()];
        for (i, atom) in self.atoms.iter().enumerate() {
            atoms[perm[i]] = atom.clone();
        }
        let bonds = self
            .bonds
            .iter()
            .map(|b| Bond {
                a: perm[b.a],
                b: perm[b.b],
                kind: b.kind,
            })
            .collect();
        MolGraph::new(atoms, bonds)
    }

    /// Longest shortest path over all connected pairs (0 for a single atom).
    pub fn diameter(&self) -> usize {
        let adj = self.neighbors();
        let mut best = 0;
        for start in 0..adj.len() {
            let mut dist = vec![usize::MAX; adj.len()];
            dist[start] = 0;
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        best = best.max(dist[v]);
                        queue.push_back(v);
                    }
                }
            }
        }
        best
    }
}

impl fmt::Debug for MolGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MolGraph")
            .field("atoms", &self.symbols())
            .field(
                "bonds",
                &self
                    .bonds
                    .iter()
                    .map(|b| (b.a, b.b, b.kind))
                    .collect::<Vec<_>>(),
            )
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> MolGraph {
        let atoms = (0..n).map(|_| Atom::new("C")).collect();
        let bonds = (1..n)
            .map(|i| Bond {
                a: i - 1,
                b: i,
                kind: BondType::Single,
            })
            .collect();
        MolGraph::new(atoms, bonds).unwrap()
    }

    #[test]
    fn rejects_invalid_bonds() {
        let atoms = vec![Atom::new("C"), Atom::new("O")];
        let bond = |a, b| Bond {
            a,
            b,
            kind: BondType::Single,
        };
        assert_eq!(
            MolGraph::new(atoms.clone(), vec![bond(0, 0)]),
            Err(GraphError::SelfLoop(0))
        );
        assert_eq!(
            MolGraph::new(atoms.clone(), vec![bond(0, 2)]),
            Err(GraphError::OutOfRange(0, 2, 2))
        );
        assert_eq!(
            MolGraph::new(atoms.clone(), vec![bond(0, 1), bond(1, 0)]),
            Err(GraphError::Duplicate(1, 0))
        );
        assert_eq!(MolGraph::new(vec![], vec![]), Err(GraphError::Empty));
    }

    #[test]
    fn diameter_of_paths_and_cycles() {
        assert_eq!(path(1).diameter(), 0);
        assert_eq!(path(5).diameter(), 4);
        let mut bonds = path(6).bonds().to_vec();
        bonds.push(Bond {
            a: 5,
            b: 0,
            kind: BondType::Single,
        });
        let ring = MolGraph::new(path(6).atoms().to_vec(), bonds).unwrap();
        assert_eq!(ring.diameter(), 3);
    }

    #[test]
    fn permutation_preserves_structure() {
        let g = path(4);
        let p = g.permuted(&[3, 1, 0, 2]).unwrap();
        assert_eq!(p.bond_count(), 3);
        assert_eq!(p.diameter(), 3);
    }
}
