use super::{featurize, supernode_features, MolGraph, Vocab, BOND_TYPES};

/// One graph's dense inputs before padding. Useful for graphs that do not
/// come from SMILES, such as random test graphs with fewer relations.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphParts {
    /// One row per node, all of equal width.
    pub node_features: Vec<Vec<f64>>,
    /// Undirected edges `(i, j, relation)`.
    pub edges: Vec<(usize, usize, usize)>,
    pub super_features: Vec<f64>,
    /// `None` marks a missing label.
    pub labels: Vec<Option<f64>>,
}

impl GraphParts {
    pub fn from_mol(g: &MolGraph, vocab: &Vocab, labels: Vec<Option<f64>>) -> Self {
        let f = featurize(g, vocab);
        GraphParts {
            node_features: f.one_hot.chunks(f.width).map(<[f64]>::to_vec).collect(),
            edges: g.bonds().iter().map(|b| (b.a, b.b, b.kind.index())).collect(),
            super_features: supernode_features(g, vocab),
            labels,
        }
    }

    pub fn nodes(&self) -> usize {
        self.node_features.len()
    }

    /// Same graph with node `i` moved to position `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> GraphParts {
        let mut node_features = vec![Vec::new(); self.nodes()];
        for (i, row) in self.node_features.iter().enumerate() {
            node_features[perm[i]] = row.clone();
        }
        GraphParts {
            node_features,
            edges: self.edges.iter().map(|&(i, j, r)| (perm[i], perm[j], r)).collect(),
            super_features: self.super_features.clone(),
            labels: self.labels.clone(),
        }
    }
}

/// Padded minibatch. Plain data, so it can be built on one thread and
/// consumed on another.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphBatch {
    /// B
    pub graphs: usize,
    /// N, the largest node count in the batch.
    pub max_nodes: usize,
    /// R
    pub relations: usize,
    pub node_width: usize,
    pub super_width: usize,
    /// T
    pub tasks: usize,
    /// `B × N × node_width`
    pub node_features: Vec<f64>,
    /// `R × B × N × N`, symmetric per relation.
    pub adjacency: Vec<f64>,
    /// `B × N`
    pub node_mask: Vec<bool>,
    /// `B × super_width`
    pub super_features: Vec<f64>,
    /// `B × T`, zero where the label is missing.
    pub labels: Vec<f64>,
    /// `B × T`
    pub label_mask: Vec<bool>,
}

impl GraphBatch {
    /// Pads `parts` to a common node count.
    ///
    /// # Panics
    /// If `parts` is empty, widths disagree, or an edge is out of range.
    pub fn from_parts(parts: &[GraphParts], relations: usize) -> GraphBatch {
        assert!(!parts.is_empty(), "batch of zero graphs");
        let b = parts.len();
        let n = parts.iter().map(GraphParts::nodes).max().unwrap_or(0);
        let f = parts[0].node_features.first().map_or(0, Vec::len);
        let s = parts[0].super_features.len();
        let t = parts[0].labels.len();

        let mut out = GraphBatch {
            graphs: b,
            max_nodes: n,
            relations,
            node_width: f,
            super_width: s,
            tasks: t,
            node_features: vec![0.0; b * n * f],
            adjacency: vec![0.0; relations * b * n * n],
            node_mask: vec![false; b * n],
            super_features: Vec::with_capacity(b * s),
            labels: vec![0.0; b * t],
            label_mask: vec![false; b * t],
        };
        for (gi, p) in parts.iter().enumerate() {
            assert_eq!(p.super_features.len(), s, "supernode width");
            assert_eq!(p.labels.len(), t, "label width");
            for (i, row) in p.node_features.iter().enumerate() {
                assert_eq!(row.len(), f, "node feature width");
                out.node_features[(gi * n + i) * f..][..f].copy_from_slice(row);
                out.node_mask[gi * n + i] = true;
            }
            for &(i, j, r) in &p.edges {
                assert!(i < p.nodes() && j < p.nodes() && r < relations, "edge out of range");
                let base = (r * b + gi) * n * n;
                out.adjacency[base + i * n + j] = 1.0;
                out.adjacency[base + j * n + i] = 1.0;
            }
            out.super_features.extend_from_slice(&p.super_features);
            for (k, label) in p.labels.iter().enumerate() {
                if let Some(y) = label {
                    out.labels[gi * t + k] = *y;
                    out.label_mask[gi * t + k] = true;
                }
            }
        }
        out
    }

    pub fn node_counts(&self) -> Vec<usize> {
        self.node_mask
            .chunks(self.max_nodes)
            .map(|m| m.iter().filter(|&&x| x).count())
            .collect()
    }

    /// `B × N × N` block of one relation.
    pub fn relation(&self, r: usize) -> &[f64] {
        let size = self.graphs * self.max_nodes * self.max_nodes;
        &self.adjacency[r * size..][..size]
    }

    /// Mask as 0/1 values, `B × N`.
    pub fn mask_values(&self) -> Vec<f64> {
        self.node_mask.iter().map(|&m| f64::from(u8::from(m))).collect()
    }
}

/// Featurizes and pads molecules. `labels[i]` must have length `tasks`.
///
/// # Panics
/// If `graphs` is empty or `labels` does not match it.
pub fn batch(graphs: &[&MolGraph], labels: &[Vec<Option<f64>>], vocab: &Vocab, tasks: usize) -> GraphBatch {
    assert_eq!(graphs.len(), labels.len(), "one label row per graph");
    let parts: Vec<GraphParts> = graphs
        .iter()
        .zip(labels)
        .map(|(g, y)| {
            assert_eq!(y.len(), tasks, "label width");
            GraphParts::from_mol(g, vocab, y.clone())
        })
        .collect();
    GraphBatch::from_parts(&parts, BOND_TYPES)
}
