use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::chem::synthetic::random_parts;
use crate::chem::{GraphParts, TaskKind};
use crate::gnn::HostKind;
use crate::gwm::GwmParts;
use crate::tensor::grad_check;

const F: usize = 5;
const S: usize = 3;

fn config(host: HostKind, variant: Variant, layers: usize) -> ModelConfig {
    ModelConfig {
        host,
        variant,
        layers,
        dim: 4,
        heads: 2,
        relations: 2,
        tasks: 1,
        task: TaskKind::Classify,
        dropout: 0.5,
        seed: 17,
        node_features: F,
        super_features: S,
    }
}

fn parts(rng: &mut ChaCha8Rng, n: usize) -> GraphParts {
    let mut p = random_parts(rng, n, F, 2);
    p.super_features = (0..S).map(|_| rng.gen_range(0.0..3.0)).collect();
    p.labels = vec![Some(f64::from(u8::from(rng.gen_bool(0.5))))];
    p
}

fn random_batch(seed: u64, sizes: &[usize]) -> GraphBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p: Vec<GraphParts> = sizes.iter().map(|&n| parts(&mut rng, n)).collect();
    GraphBatch::from_parts(&p, 2)
}

#[test]
fn output_shape_is_graphs_by_tasks() {
    let model = Model::new(config(HostKind::Rsgcn, Variant::None, 1)).unwrap();
    let batch = random_batch(0, &[3, 5, 2]);
    let out = model.forward(&model.store().constants(), &batch, &mut Phase::Eval).unwrap();
    assert_eq!(out.predictions.shape(), &[3, 1]);
    assert!(out.g.is_none());
}

#[test]
fn predictions_ignore_node_order() {
    let perm = [4, 2, 0, 5, 1, 3];
    for host in HostKind::ALL {
        for variant in Variant::ALL {
            let model = Model::new(config(host, variant, 2)).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let p = parts(&mut rng, 6);
            let q = parts(&mut rng, 4);
            let a = GraphBatch::from_parts(&[p.clone(), q.clone()], 2);
            let b = GraphBatch::from_parts(&[p.permuted(&perm), q], 2);
            let ya = model.predict(&a).unwrap();
            let yb = model.predict(&b).unwrap();
            for (x, y) in ya.iter().zip(&yb) {
                assert!((x - y).abs() < 1e-9, "{host}/{variant}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn full_model_passes_grad_check() {
    for host in HostKind::ALL {
        let mut model = Model::new(config(host, Variant::Full, 2)).unwrap();
        model.store_mut().perturb(5, 0.2);
        let batch = random_batch(4, &[4]);
        let err = grad_check(
            |t: &[Tensor]| {
                let out = model.forward(t, &batch, &mut Phase::Eval)?;
                Ok::<_, ModelError>(out.predictions.bce_with_logits(&batch.labels, &batch.label_mask)?)
            },
            &model.store().constants(),
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-4, "{host}: {err}");
    }
}

#[test]
fn zero_states_read_out_to_zero() {
    let model = Model::new(config(HostKind::Rsgcn, Variant::None, 1)).unwrap();
    let params = model.store().constants();
    let h = Tensor::zeros(&[2, 3, 4]).unwrap();
    let g = Tensor::zeros(&[2, 4]).unwrap();
    let out = readout(&h, &g, model.readout_params(), &params).unwrap();
    assert!(out.values().iter().all(|&v| v == 0.0));
}

#[test]
fn doubling_node_states_doubles_the_aggregate() {
    let model = Model::new(config(HostKind::Rsgcn, Variant::None, 1)).unwrap();
    let params = model.store().constants();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let values: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let h = Tensor::new(values.clone(), &[1, 3, 4]).unwrap();
    let h2 = h.scale(2.0);
    let agg = |h: &Tensor| {
        h.sum_axis(1)
            .unwrap()
            .matmul(&params[model.readout_params().aggregate])
            .unwrap()
    };
    for (a, b) in agg(&h).values().iter().zip(agg(&h2).values()) {
        assert!((2.0 * a - b).abs() < 1e-14);
    }
}

#[test]
fn padded_node_features_do_not_matter() {
    for host in HostKind::ALL {
        let model = Model::new(config(host, Variant::Full, 2)).unwrap();
        let mut batch = random_batch(7, &[2, 6]);
        let clean = model.predict(&batch).unwrap();
        for (i, m) in batch.node_mask.clone().iter().enumerate() {
            if !m {
                batch.node_features[i * F..(i + 1) * F].copy_from_slice(&[3.0, -2.0, 1.0, 5.0, 0.5]);
            }
        }
        assert_eq!(model.predict(&batch).unwrap(), clean, "{host}");
    }
}

#[test]
fn module_leaves_host_shapes_alone() {
    for host in HostKind::ALL {
        let none = Model::new(config(host, Variant::None, 3)).unwrap();
        assert!(none.super_embed().is_none());
        assert!(none.store().entries().iter().all(|e| !e.name.contains("gwm")));
        for variant in [Variant::Simple, Variant::NoGate, Variant::Full] {
            let with = Model::new(config(host, variant, 3)).unwrap();
            assert_eq!(none.host_shapes(), with.host_shapes());
            assert!(with.store().scalar_count() > none.store().scalar_count());
        }
        let again = Model::new(config(host, Variant::Full, 3)).unwrap();
        assert_eq!(
            again.store().scalar_count(),
            Model::new(config(host, Variant::Full, 3)).unwrap().store().scalar_count()
        );
    }
}

fn identity(d: usize) -> Vec<f64> {
    (0..d * d).map(|i| if i % (d + 1) == 0 { 1.0 } else { 0.0 }).collect()
}

/// Simple module with identity main mix, zero super-to-main mix and a zero
/// supernode path.
pub(crate) fn reduce_to_host(model: &mut Model) {
    let d = model.config().dim;
    let embed = *model.super_embed().unwrap();
    let merges: Vec<_> = model
        .modules()
        .iter()
        .map(|m| match &m.parts {
            GwmParts::Simple { merge, .. } => *merge,
            _ => panic!("simple variant expected"),
        })
        .collect();
    let store = model.store_mut();
    let n = store.entry(embed.w).values.len();
    store.set(embed.w, vec![0.0; n]);
    store.set(embed.b, vec![0.0; d]);
    for m in merges {
        store.set(m.z1, identity(d));
        store.set(m.z2, vec![0.0; d * d]);
        store.set(m.z1_super, vec![0.0; d * d]);
    }
}

#[test]
fn reduced_simple_module_matches_vanilla_host_exactly() {
    for host in HostKind::ALL {
        let vanilla = Model::new(config(host, Variant::None, 3)).unwrap();
        let mut simple = Model::new(config(host, Variant::Simple, 3)).unwrap();
        reduce_to_host(&mut simple);
        for seed in 0..5 {
            let batch = random_batch(seed, &[3, 7, 5]);
            let a = vanilla
                .forward(&vanilla.store().constants(), &batch, &mut Phase::Eval)
                .unwrap();
            let b = simple
                .forward(&simple.store().constants(), &batch, &mut Phase::Eval)
                .unwrap();
            assert_eq!(a.h.values(), b.h.values(), "{host}");
            assert_eq!(a.predictions.values(), b.predictions.values(), "{host}");
        }
    }
}

#[test]
fn checkpoint_round_trip() {
    let mut model = Model::new(config(HostKind::Rgat, Variant::Full, 2)).unwrap();
    model.store_mut().perturb(1, 0.1);
    let vocab = crate::chem::Vocab::organic();
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, &model, Some(&vocab)).unwrap();
    let ck = read_checkpoint(buf.as_slice()).unwrap();
    assert_eq!(ck.vocab.as_ref(), Some(&vocab));
    assert_eq!(ck.into_model().unwrap(), model);

    let mut bad = buf.clone();
    bad[0] = b'X';
    assert!(matches!(read_checkpoint(bad.as_slice()), Err(CheckpointError::BadMagic)));
    let mut bad = buf.clone();
    bad[8] = 9;
    assert!(matches!(read_checkpoint(bad.as_slice()), Err(CheckpointError::Version(9))));
    assert!(matches!(
        read_checkpoint(&buf[..buf.len() - 3]),
        Err(CheckpointError::Io(_))
    ));
}

#[test]
fn checkpoint_for_other_architecture_is_rejected() {
    let model = Model::new(config(HostKind::Gin, Variant::None, 1)).unwrap();
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, &model, None).unwrap();
    let mut ck = read_checkpoint(buf.as_slice()).unwrap();
    ck.config.layers = 2;
    assert!(matches!(ck.into_model(), Err(CheckpointError::Mismatch(_))));
}

#[test]
fn width_mismatch_is_reported() {
    let mut cfg = config(HostKind::Rsgcn, Variant::None, 1);
    cfg.node_features = F + 1;
    let model = Model::new(cfg).unwrap();
    let err = model.predict(&random_batch(0, &[2])).unwrap_err();
    assert!(matches!(err, ModelError::Width { what: "node feature", .. }));
}

#[test]
fn invalid_configs_are_rejected() {
    let mut cfg = config(HostKind::Rsgcn, Variant::None, 0);
    assert!(matches!(Model::new(cfg.clone()), Err(ModelError::Config(_))));
    cfg.layers = 1;
    cfg.dropout = 1.0;
    assert!(matches!(Model::new(cfg), Err(ModelError::Config(_))));
}
