//! Frequency-adaptive attention network.
//!
//! Each layer computes a signed coefficient per directed edge, blends it with
//! the previous layer's coefficient, aggregates degree-normalized relation
//! messages per head and applies a node-level residual. Positive coefficients
//! smooth a node towards its neighbors, negative ones push it away.

mod edges;
mod forward;
pub mod ops;
mod params;
mod trace;

pub use edges::{EdgeIndex, PairSlots};
pub use forward::{forward, forward_pass, ForwardPass, Mode, PreparedInput};
pub use params::{
    AttentionMode, FaAtLayer, LayerResidual, ModelConfig, ModelParams, ResidualVariant,
};
pub use trace::{AttentionTrace, EdgeKind, SignSummary};

#[cfg(test)]
mod tests {
    use super::ops::{self, NodeResidual};
    use super::*;
    use crate::features::FeatureSet;
    use crate::graph::HeteroGraph;
    use crate::numcore::{seeded_rng, Matrix};
    use rand::Rng;

    fn random_graph(n: usize, rels: &[&str], p: f64, seed: u64) -> HeteroGraph {
        let mut rng = seeded_rng(seed);
        let mut g = HeteroGraph::new(n);
        for r in rels {
            let pairs: Vec<_> = (0..n)
                .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
                .filter(|_| rng.random::<f64>() < p)
                .collect();
            g.add_relation(r, pairs).unwrap();
        }
        g
    }

    fn random_features(n: usize, f: usize, seed: u64) -> FeatureSet {
        let mut rng = seeded_rng(seed);
        let data = (0..n * f)
            .map(|_| rng.random::<f64>() * 2.0 - 1.0)
            .collect();
        FeatureSet::single(Matrix::from_vec(n, f, data).unwrap())
    }

    fn small_config() -> ModelConfig {
        ModelConfig {
            hidden: 8,
            heads: 2,
            layers: 2,
            dropout: 0.0,
            ..Default::default()
        }
    }

    fn names(g: &HeteroGraph) -> Vec<String> {
        g.relation_names()
    }

    #[test]
    fn trace_is_bounded_and_complete() {
        let g = random_graph(12, &["a", "b"], 0.3, 1);
        let fs = random_features(12, 5, 2);
        let p = ModelParams::init(5, &names(&g), &small_config(), 3).unwrap();
        let (logits, trace) = forward(&g, &fs, &p, Mode::Eval).unwrap();
        assert_eq!(logits.shape(), (12, 2));
        assert_eq!(trace.num_slots(), 2 * g.num_edges());
        assert_eq!(trace.alpha.len(), 2);
        assert_eq!(trace.alpha[0].len(), 2);
        let (lo, hi) = trace.range().unwrap();
        assert!(lo >= -1.0 && hi <= 1.0);
    }

    #[test]
    fn edge_residual_stays_convex() {
        let g = random_graph(10, &["a"], 0.4, 4);
        let fs = random_features(10, 3, 5);
        let cfg = ModelConfig {
            layers: 3,
            beta: 0.3,
            ..small_config()
        };
        let p = ModelParams::init(3, &names(&g), &cfg, 6).unwrap();
        let (_, trace) = forward(&g, &fs, &p, Mode::Eval).unwrap();
        // α_l − β·α_{l−1} = (1−β)·α̂_l with |α̂_l| ≤ 1
        for l in 1..3 {
            for k in 0..2 {
                for e in 0..trace.num_slots() {
                    let prev = trace.alpha[l - 1][k][e];
                    let cur = trace.alpha[l][k][e];
                    let hat = (cur - 0.3 * prev) / 0.7;
                    assert!(hat.abs() <= 1.0 + 1e-12);
                    assert!(cur >= hat.min(prev) - 1e-12 && cur <= hat.max(prev) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn eval_is_deterministic() {
        let g = random_graph(10, &["a", "b"], 0.3, 7);
        let fs = random_features(10, 4, 8);
        let p = ModelParams::init(4, &names(&g), &small_config(), 9).unwrap();
        let (a, ta) = forward(&g, &fs, &p, Mode::Eval).unwrap();
        let (b, tb) = forward(&g, &fs, &p, Mode::Eval).unwrap();
        assert_eq!(a.data(), b.data());
        assert_eq!(ta.alpha_bar, tb.alpha_bar);
    }

    #[test]
    fn dropout_only_in_train_mode() {
        let g = random_graph(10, &["a"], 0.3, 10);
        let fs = random_features(10, 4, 11);
        let cfg = ModelConfig {
            dropout: 0.5,
            ..small_config()
        };
        let p = ModelParams::init(4, &names(&g), &cfg, 12).unwrap();
        let (e1, _) = forward(&g, &fs, &p, Mode::Eval).unwrap();
        let (t1, _) = forward(&g, &fs, &p, Mode::Train { seed: 1 }).unwrap();
        let (t1b, _) = forward(&g, &fs, &p, Mode::Train { seed: 1 }).unwrap();
        assert_ne!(e1.data(), t1.data());
        assert_eq!(t1.data(), t1b.data());
    }

    #[test]
    fn isolated_single_node_uses_fusion_path_only() {
        let g = HeteroGraph::new(1);
        let fs = random_features(1, 3, 13);
        let cfg = ModelConfig {
            residual: ResidualVariant::Initial,
            epsilon: 0.5,
            ..small_config()
        };
        let p = ModelParams::init(3, &["r".to_string()], &cfg, 14).unwrap();
        let (logits, trace) = forward(&g, &fs, &p, Mode::Eval).unwrap();
        assert_eq!(trace.num_slots(), 0);
        let act = cfg.activation();
        let x0 = ops::fuse_features(&fs, p.store.value(p.fusion), act).unwrap();
        let z = Matrix::zeros(1, cfg.hidden);
        let mut x = x0.clone();
        for _ in 0..cfg.layers {
            x = ops::node_residual(&x, &x0, &z, NodeResidual::Initial(0.5), act).unwrap();
        }
        let expect = x
            .matmul(p.store.value(p.out_w))
            .unwrap()
            .add(p.store.value(p.out_b))
            .unwrap();
        assert_eq!(logits.data(), expect.data());
    }

    #[test]
    fn empty_graph_errors() {
        let g = HeteroGraph::new(0);
        let fs = FeatureSet::single(Matrix::zeros(0, 2));
        let p = ModelParams::init(2, &[], &small_config(), 0).unwrap();
        assert!(forward(&g, &fs, &p, Mode::Eval).is_err());
    }

    #[test]
    fn nan_reports_layer() {
        let g = random_graph(6, &["a"], 0.5, 15);
        let fs = random_features(6, 2, 16);
        let mut p = ModelParams::init(2, &names(&g), &small_config(), 17).unwrap();
        let id = p.layers[0].wr[0][0];
        p.store.get_mut(id).value.data_mut()[0] = f64::NAN;
        let err = forward(&g, &fs, &p, Mode::Eval).unwrap_err().to_string();
        assert!(err.contains("layer 1"), "{err}");
    }

    #[test]
    fn one_layer_matches_plain_ops() {
        let g = random_graph(9, &["a", "b"], 0.35, 18);
        let fs = random_features(9, 4, 19);
        for residual in [ResidualVariant::Initial, ResidualVariant::Transform] {
            let cfg = ModelConfig {
                layers: 1,
                residual,
                epsilon: 0.3,
                ..small_config()
            };
            let rel = names(&g);
            let p = ModelParams::init(4, &rel, &cfg, 20).unwrap();
            let (logits, trace) = forward(&g, &fs, &p, Mode::Eval).unwrap();
            let act = cfg.activation();
            let v = |id| p.store.value(id);
            let x0 = ops::fuse_features(&fs, v(p.fusion), act).unwrap();
            let idx = EdgeIndex::build(&g, &rel).unwrap();
            let layer = &p.layers[0];
            let mut heads = vec![];
            for k in 0..cfg.heads {
                let alpha: Vec<f64> = (0..idx.num_slots())
                    .map(|e| {
                        ops::attention_coeff(
                            x0.row(idx.dst[e]),
                            x0.row(idx.src[e]),
                            v(layer.wq[k]),
                            v(layer.wk[k]),
                            v(layer.g[k]).data(),
                            act,
                        )
                        .unwrap()
                    })
                    .collect();
                for (a, b) in alpha.iter().zip(&trace.alpha[0][k]) {
                    assert!((a - b).abs() < 1e-12);
                }
                let wr: Vec<Matrix> = layer.wr[k].iter().map(|&id| v(id).clone()).collect();
                heads.push(ops::aggregate(&x0, &idx, &alpha, &wr).unwrap());
            }
            let z = Matrix::concat_cols(&[&heads[0], &heads[1]]).unwrap();
            let res = match layer.residual {
                LayerResidual::Transform(id) => NodeResidual::Transform(v(id)),
                LayerResidual::Initial(eps) => NodeResidual::Initial(eps),
            };
            let x1 = ops::node_residual(&x0, &x0, &z, res, act).unwrap();
            let expect = x1.matmul(v(p.out_w)).unwrap();
            for i in 0..9 {
                for c in 0..2 {
                    assert!((logits[(i, c)] - expect[(i, c)]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn relation_permutation_is_bitwise_invariant() {
        let g = random_graph(12, &["a", "b", "c"], 0.25, 21);
        // keep relations edge-disjoint so per-node sums meet in a fixed order
        let mut disjoint = HeteroGraph::new(12);
        let mut seen = std::collections::HashSet::new();
        for r in g.relations() {
            let pairs: Vec<_> = r
                .pairs()
                .iter()
                .copied()
                .filter(|p| seen.insert(*p))
                .collect();
            disjoint.add_relation(r.name(), pairs).unwrap();
        }
        let fs = random_features(12, 3, 22);
        let p = ModelParams::init(3, &names(&disjoint), &small_config(), 23).unwrap();
        let (base, _) = forward(&disjoint, &fs, &p, Mode::Eval).unwrap();
        let permuted = disjoint.permute_relations(&[2, 0, 1]).unwrap();
        let (moved, _) = forward(&permuted, &fs, &p, Mode::Eval).unwrap();
        assert_eq!(base.data(), moved.data());

        let mut q = p.clone();
        q.relations.reverse();
        let mut renamed = disjoint.clone();
        renamed.rename_relation("a", "x").unwrap();
        let pos = q.relations.iter().position(|r| r == "a").unwrap();
        q.relations[pos] = "x".into();
        // the reversed list must also swap the per-relation weights to match
        for layer in &mut q.layers {
            for head in &mut layer.wr {
                head.reverse();
            }
        }
        let (again, _) = forward(&renamed, &fs, &q, Mode::Eval).unwrap();
        assert_eq!(base.data(), again.data());
    }

    #[test]
    fn unit_attention_matches_normalized_sum_oracle() {
        for seed in 0..20 {
            let g = random_graph(10, &["r"], 0.3, 100 + seed);
            let mut rng = seeded_rng(200 + seed);
            let data = (0..30).map(|_| rng.random::<f64>() - 0.5).collect();
            let x = Matrix::from_vec(10, 3, data).unwrap();
            let data = (0..9).map(|_| rng.random::<f64>() - 0.5).collect();
            let w = Matrix::from_vec(3, 3, data).unwrap();
            let idx = EdgeIndex::build(&g, &names(&g)).unwrap();
            let z = ops::aggregate(
                &x,
                &idx,
                &vec![1.0; idx.num_slots()],
                std::slice::from_ref(&w),
            )
            .unwrap();

            let deg: Vec<f64> = (0..10)
                .map(|u| (0..10).filter(|&v| g.contains_pair(u, v)).count() as f64)
                .collect();
            let xw = x.matmul(&w).unwrap();
            for u in 0..10 {
                for c in 0..3 {
                    let mut s = 0.0;
                    for v in 0..10 {
                        if g.contains_pair(u, v) {
                            s += xw[(v, c)] / (deg[u] * deg[v]).sqrt();
                        }
                    }
                    assert!((z[(u, c)] - s).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn constant_and_sigmoid_modes() {
        let g = random_graph(10, &["a"], 0.4, 30);
        let fs = random_features(10, 3, 31);
        for (mode, lo) in [
            (AttentionMode::Constant, 1.0),
            (AttentionMode::Sigmoid, 0.0),
        ] {
            let cfg = ModelConfig {
                attention: mode,
                ..small_config()
            };
            let p = ModelParams::init(3, &names(&g), &cfg, 32).unwrap();
            let (_, trace) = forward(&g, &fs, &p, Mode::Eval).unwrap();
            let (min, max) = trace.range().unwrap();
            assert!(min >= lo && max <= 1.0, "{mode:?}: {min} {max}");
        }
    }
}
