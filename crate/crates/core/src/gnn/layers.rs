use crate::tensor::{Result, Tensor};

use super::{dropout, gru_cell, GraphInput, GruParams, HostKind, ParamId, ParamStore, Phase};

/// One host layer, `[B, N, D] -> [B, N, D]`, with padded rows kept at zero.
#[derive(Debug, Clone, PartialEq)]
pub enum HostLayer {
    /// `relu(Â h W)`
    Rsgcn { w: ParamId },
    /// `GRU(h, Σ_r A_r h W_r)`
    Ggnn { w: Vec<ParamId>, gru: GruParams },
    /// `tanh(concat_k(h F_k + Σ_j α_k h_j G_k) W)` with bilinear neighbor
    /// attention whose form is picked by the edge relation. `attn[k][r]` is
    /// stored transposed relative to the score `h_iᵀ A h_j`, which only
    /// renames the parameter.
    Rgat {
        self_w: Vec<ParamId>,
        neigh_w: Vec<ParamId>,
        attn: Vec<Vec<ParamId>>,
        mix: ParamId,
    },
    /// Two ReLU layers on `h + Σ_j h_j`, dropout between them.
    Gin {
        w1: ParamId,
        b1: ParamId,
        w2: ParamId,
        b2: ParamId,
        dropout: f64,
    },
}

impl HostLayer {
    pub fn new(
        kind: HostKind,
        store: &mut ParamStore,
        prefix: &str,
        dim: usize,
        heads: usize,
        relations: usize,
        dropout: f64,
    ) -> HostLayer {
        let p = |s: &str| format!("{prefix}.{s}");
        match kind {
            HostKind::Rsgcn => HostLayer::Rsgcn {
                w: store.glorot(&p("w"), [dim, dim]),
            },
            HostKind::Ggnn => HostLayer::Ggnn {
                w: (0..relations)
                    .map(|r| store.glorot(&p(&format!("w{r}")), [dim, dim]))
                    .collect(),
                gru: GruParams::new(store, &p("gru"), dim, dim),
            },
            HostKind::Rgat => HostLayer::Rgat {
                self_w: (0..heads)
                    .map(|k| store.glorot(&p(&format!("self{k}")), [dim, dim]))
                    .collect(),
                neigh_w: (0..heads)
                    .map(|k| store.glorot(&p(&format!("neigh{k}")), [dim, dim]))
                    .collect(),
                attn: (0..heads)
                    .map(|k| {
                        (0..relations)
                            .map(|r| store.glorot(&p(&format!("attn{k}_{r}")), [dim, dim]))
                            .collect()
                    })
                    .collect(),
                mix: store.glorot(&p("mix"), [heads * dim, dim]),
            },
            HostKind::Gin => HostLayer::Gin {
                w1: store.glorot(&p("w1"), [dim, dim]),
                b1: store.zeros(&p("b1"), &[dim]),
                w2: store.glorot(&p("w2"), [dim, dim]),
                b2: store.zeros(&p("b2"), &[dim]),
                dropout,
            },
        }
    }

    pub fn kind(&self) -> HostKind {
        match self {
            HostLayer::Rsgcn { .. } => HostKind::Rsgcn,
            HostLayer::Ggnn { .. } => HostKind::Ggnn,
            HostLayer::Rgat { .. } => HostKind::Rgat,
            HostLayer::Gin { .. } => HostKind::Gin,
        }
    }

    pub fn forward(
        &self,
        params: &[Tensor],
        h: &Tensor,
        graph: &GraphInput,
        phase: &mut Phase<'_>,
    ) -> Result<Tensor> {
        let out = match self {
            HostLayer::Rsgcn { w } => graph.renormalized.bmm(&h.matmul(&params[*w])?)?.relu(),
            HostLayer::Ggnn { w, gru } => {
                let mut message: Option<Tensor> = None;
                for (a, &wr) in graph.adjacency.iter().zip(w) {
                    let m = a.bmm(&h.matmul(&params[wr])?)?;
                    message = Some(match message {
                        Some(acc) => acc.add(&m)?,
                        None => m,
                    });
                }
                let message = message.expect("at least one relation");
                gru_cell(h, &message, gru, params)?
            }
            HostLayer::Rgat {
                self_w,
                neigh_w,
                mix,
                ..
            } => {
                let alphas = self.attention(params, h, graph)?;
                let heads = alphas
                    .iter()
                    .zip(self_w.iter().zip(neigh_w))
                    .map(|(alpha, (&f, &g))| {
                        h.matmul(&params[f])?.add(&alpha.bmm(&h.matmul(&params[g])?)?)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Tensor::concat(&heads)?.matmul(&params[*mix])?.tanh()
            }
            HostLayer::Gin {
                w1,
                b1,
                w2,
                b2,
                dropout: rate,
            } => {
                let z = h.add(&graph.total.bmm(h)?)?;
                let hidden = z.matmul(&params[*w1])?.add_bias(&params[*b1])?.relu();
                let hidden = dropout(&hidden, *rate, phase)?;
                hidden.matmul(&params[*w2])?.add_bias(&params[*b2])?.relu()
            }
        };
        graph.mask_rows(&out)
    }

    /// Per-head neighbor attention `[B, N, N]` of an RGAT layer; rows of
    /// nodes without neighbors are zero. Empty for other kinds.
    pub fn attention(&self, params: &[Tensor], h: &Tensor, graph: &GraphInput) -> Result<Vec<Tensor>> {
        let HostLayer::Rgat { attn, .. } = self else {
            return Ok(Vec::new());
        };
        let ht = h.transpose()?;
        attn.iter()
            .map(|per_relation| {
                let mut scores: Option<Tensor> = None;
                for (a, &ar) in graph.adjacency.iter().zip(per_relation) {
                    let s = h.matmul(&params[ar])?.bmm(&ht)?.mul(a)?;
                    scores = Some(match scores {
                        Some(acc) => acc.add(&s)?,
                        None => s,
                    });
                }
                scores
                    .expect("at least one relation")
                    .softmax_masked_or_zero(&graph.neighbor_mask)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::chem::synthetic::random_parts;
    use crate::chem::{GraphBatch, GraphParts};
    use crate::tensor::grad_check;

    fn setup(kind: HostKind, seed: u64, sizes: &[usize]) -> (ParamStore, HostLayer, GraphBatch) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new(seed);
        let layer = HostLayer::new(kind, &mut store, "l0", 4, 2, 2, 0.5);
        store.perturb(seed, 0.2);
        let parts: Vec<GraphParts> = sizes.iter().map(|&n| random_parts(&mut rng, n, 4, 2)).collect();
        (store, layer, GraphBatch::from_parts(&parts, 2))
    }

    fn features(b: &GraphBatch) -> Tensor {
        Tensor::new(b.node_features.clone(), &[b.graphs, b.max_nodes, b.node_width]).unwrap()
    }

    #[test]
    fn every_layer_passes_grad_check() {
        for kind in HostKind::ALL {
            for seed in 0..3 {
                let (store, layer, batch) = setup(kind, seed, &[5, 7]);
                let graph = GraphInput::new(&batch).unwrap();
                let mut all = store.constants();
                all.push(features(&batch));
                let x = all.len() - 1;
                let err = grad_check(
                    |t: &[Tensor]| {
                        let out = layer.forward(t, &t[x], &graph, &mut Phase::Eval)?;
                        Ok::<_, crate::tensor::TensorError>(out.tanh().sum())
                    },
                    &all,
                    1e-5,
                )
                .unwrap();
                assert!(err < 1e-4, "{kind} seed {seed}: {err}");
            }
        }
    }

    #[test]
    fn padded_rows_do_not_leak() {
        for kind in HostKind::ALL {
            let (store, layer, batch) = setup(kind, 11, &[3, 6]);
            let graph = GraphInput::new(&batch).unwrap();
            let params = store.constants();
            let clean = layer.forward(&params, &features(&batch), &graph, &mut Phase::Eval).unwrap();
            let mut noisy = batch.node_features.clone();
            for (i, m) in batch.node_mask.iter().enumerate() {
                if !m {
                    noisy[i * 4..(i + 1) * 4].copy_from_slice(&[9.0, -3.0, 2.0, 7.0]);
                }
            }
            let noisy = Tensor::new(noisy, &[2, 6, 4]).unwrap();
            let dirty = layer.forward(&params, &noisy, &graph, &mut Phase::Eval).unwrap();
            assert_eq!(clean.values(), dirty.values(), "{kind}");
        }
    }

    #[test]
    fn permutation_equivariance() {
        for kind in HostKind::ALL {
            let mut rng = ChaCha8Rng::seed_from_u64(21);
            let mut store = ParamStore::new(21);
            let layer = HostLayer::new(kind, &mut store, "l0", 4, 2, 2, 0.5);
            let parts = random_parts(&mut rng, 7, 4, 2);
            let perm = [3, 0, 6, 1, 5, 2, 4];
            let a = GraphBatch::from_parts(std::slice::from_ref(&parts), 2);
            let b = GraphBatch::from_parts(&[parts.permuted(&perm)], 2);
            let params = store.constants();
            let run = |batch: &GraphBatch| {
                let graph = GraphInput::new(batch).unwrap();
                layer
                    .forward(&params, &features(batch), &graph, &mut Phase::Eval)
                    .unwrap()
            };
            let (ya, yb) = (run(&a), run(&b));
            for i in 0..7 {
                for c in 0..4 {
                    let (u, v) = (ya.values()[i * 4 + c], yb.values()[perm[i] * 4 + c]);
                    assert!((u - v).abs() < 1e-12, "{kind}: {u} vs {v}");
                }
            }
        }
    }

    #[test]
    fn ggnn_without_edges_is_gru_of_zero_message() {
        let mut store = ParamStore::new(5);
        let layer = HostLayer::new(HostKind::Ggnn, &mut store, "l0", 3, 1, 2, 0.0);
        let parts = GraphParts {
            node_features: vec![vec![0.3, -0.2, 0.9], vec![0.1, 0.4, -0.7]],
            edges: vec![],
            super_features: vec![],
            labels: vec![],
        };
        let batch = GraphBatch::from_parts(&[parts], 2);
        let graph = GraphInput::new(&batch).unwrap();
        let params = store.constants();
        let h = features(&batch);
        let out = layer.forward(&params, &h, &graph, &mut Phase::Eval).unwrap();
        let HostLayer::Ggnn { gru, .. } = &layer else { unreachable!() };
        let expected = gru_cell(&h, &Tensor::zeros(&[1, 2, 3]).unwrap(), gru, &params).unwrap();
        assert_eq!(out.values(), expected.values());
    }

    #[test]
    fn ggnn_star_center_message_is_linear_sum() {
        let mut store = ParamStore::new(6);
        let layer = HostLayer::new(HostKind::Ggnn, &mut store, "l0", 2, 1, 1, 0.0);
        let parts = GraphParts {
            node_features: vec![vec![0.0, 0.0], vec![1.0, 2.0], vec![3.0, -1.0], vec![0.5, 0.5]],
            edges: vec![(0, 1, 0), (0, 2, 0), (0, 3, 0)],
            super_features: vec![],
            labels: vec![],
        };
        let batch = GraphBatch::from_parts(&[parts], 1);
        let graph = GraphInput::new(&batch).unwrap();
        let HostLayer::Ggnn { w, .. } = &layer else { unreachable!() };
        let params = store.constants();
        let m = graph.adjacency[0].bmm(&features(&batch).matmul(&params[w[0]]).unwrap()).unwrap();
        let leaf_sum = Tensor::new(vec![4.5, 1.5], &[1, 2]).unwrap();
        let expected = leaf_sum.matmul(&params[w[0]]).unwrap();
        for c in 0..2 {
            assert!((m.values()[c] - expected.values()[c]).abs() < 1e-14);
        }
    }

    #[test]
    fn rgat_attention_rows() {
        let mut store = ParamStore::new(7);
        let layer = HostLayer::new(HostKind::Rgat, &mut store, "l0", 3, 2, 2, 0.0);
        // node 0 has one neighbor, node 2 has two with identical features
        let parts = GraphParts {
            node_features: vec![
                vec![0.2, 0.1, -0.4],
                vec![0.5, -0.3, 0.8],
                vec![0.9, 0.9, 0.1],
                vec![0.5, -0.3, 0.8],
                vec![0.1, 0.1, 0.1],
            ],
            edges: vec![(0, 1, 1), (2, 1, 0), (2, 3, 0)],
            super_features: vec![],
            labels: vec![],
        };
        let batch = GraphBatch::from_parts(&[parts], 2);
        let graph = GraphInput::new(&batch).unwrap();
        let alphas = layer
            .attention(&store.constants(), &features(&batch), &graph)
            .unwrap();
        for a in &alphas {
            let v = a.values();
            assert_eq!(v[1], 1.0);
            assert!((v[2 * 5 + 1] - 0.5).abs() < 1e-12);
            assert!((v[2 * 5 + 3] - 0.5).abs() < 1e-12);
            assert!(v[4 * 5..].iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn gin_isolated_node_and_eval_determinism() {
        let mut store = ParamStore::new(8);
        let layer = HostLayer::new(HostKind::Gin, &mut store, "l0", 3, 1, 1, 0.5);
        let parts = GraphParts {
            node_features: vec![vec![0.4, -0.1, 0.3]],
            edges: vec![],
            super_features: vec![],
            labels: vec![],
        };
        let batch = GraphBatch::from_parts(&[parts], 1);
        let graph = GraphInput::new(&batch).unwrap();
        let params = store.constants();
        let h = features(&batch);
        let a = layer.forward(&params, &h, &graph, &mut Phase::Eval).unwrap();
        let b = layer.forward(&params, &h, &graph, &mut Phase::Eval).unwrap();
        assert_eq!(a.values(), b.values());
        let HostLayer::Gin { w1, b1, w2, b2, .. } = &layer else { unreachable!() };
        let mlp = h
            .matmul(&params[*w1])
            .unwrap()
            .add_bias(&params[*b1])
            .unwrap()
            .relu()
            .matmul(&params[*w2])
            .unwrap()
            .add_bias(&params[*b2])
            .unwrap()
            .relu();
        assert_eq!(a.values(), mlp.values());
    }
}
