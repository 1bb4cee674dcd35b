//! Losses, the training loop, splits, metrics and ablation variants.

mod ablation;
mod checkpoint;
mod config;
mod loss;
mod metrics;
mod splits;
mod trainer;

pub use ablation::{ablation_run, random_pairs, AblationVariant, PipelineOutcome, RANDOM_RELATION};
pub use checkpoint::{Checkpoint, TensorEntry, CHECKPOINT_SCHEMA};
pub use config::TrainConfig;
pub use loss::{record_total_loss, weight_guidance_loss, GuidancePairs, LossBreakdown};
pub use metrics::{accuracy, evaluate, Confusion, MetricsReport};
pub use splits::{make_splits, SplitSet, DEFAULT_RATIOS};
pub use trainer::{loss_and_gradients, train_model, train_model_with, EpochLog, TrainOutcome};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::faat::{Mode, ModelParams, PreparedInput};
    use crate::graph::{synth_graph, SynthConfig};

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            hidden: 8,
            heads: 2,
            mlp_hidden: Some(16),
            max_epochs: 40,
            lr: 0.01,
            ..Default::default()
        }
    }

    fn data(
        h: f64,
        seed: u64,
    ) -> (
        crate::graph::HeteroGraph,
        crate::features::FeatureSet,
        crate::graph::LabelSet,
        SplitSet,
    ) {
        let (g, fs, labels) = synth_graph(&SynthConfig {
            n_per_class: 40,
            target_edge_homophily: h,
            mean_degree: 4.0,
            seed,
            ..Default::default()
        })
        .unwrap();
        let splits = make_splits(&labels, [0.3, 0.2, 0.5], seed).unwrap();
        (g, fs, labels, splits)
    }

    #[test]
    fn same_seed_same_metrics() {
        let (g, fs, l, s) = data(0.5, 1);
        let a = train_model(&g, &fs, &l, &s, &small_cfg()).unwrap();
        let b = train_model(&g, &fs, &l, &s, &small_cfg()).unwrap();
        assert_eq!(a.test, b.test);
        assert_eq!(a.trace.alpha_bar, b.trace.alpha_bar);
        assert_eq!(a.best_epoch, b.best_epoch);
        assert!(a.best_epoch >= 1 && a.best_epoch <= a.epochs_ran);
    }

    #[test]
    fn five_steps_descend() {
        let (g, fs, l, s) = data(0.3, 2);
        let cfg = TrainConfig {
            dropout: 0.0,
            lr: 1e-3,
            ..small_cfg()
        };
        let mut p = ModelParams::init(
            fs.total_width(),
            &g.relation_names(),
            &cfg.model_config(Default::default()),
            0,
        )
        .unwrap();
        let input = PreparedInput::new(&g, &fs, &p).unwrap();
        let guide = GuidancePairs::build(&input.edges, &l, &s.train);
        let dense = l.dense();
        let adam = crate::numcore::AdamConfig::with_lr(cfg.lr);
        let mut last = f64::INFINITY;
        for _ in 0..5 {
            let (loss, grads) =
                loss_and_gradients(&input, &p, &dense, &s.train, &guide, &cfg, Mode::Eval).unwrap();
            assert!(loss.total < last, "{} !< {}", loss.total, last);
            last = loss.total;
            let ids: Vec<_> = p.store.ids().collect();
            p.store.zero_grad();
            for (id, g) in ids.into_iter().zip(&grads) {
                p.store.get_mut(id).accumulate(g).unwrap();
            }
            p.store.adam_step(&adam);
        }
    }

    #[test]
    fn no_wegl_equals_zero_lambda2() {
        let (g, fs, l, s) = data(0.4, 3);
        let cfg = TrainConfig {
            max_epochs: 10,
            ..small_cfg()
        };
        let a = ablation_run(AblationVariant::NoWegl, &g, &fs, &l, &s, &cfg).unwrap();
        let full = TrainConfig {
            lambda2: 0.0,
            ..cfg
        };
        let b = ablation_run(AblationVariant::Full, &g, &fs, &l, &s, &full).unwrap();
        let la: Vec<f64> = a.train.history.iter().map(|e| e.loss.total).collect();
        let lb: Vec<f64> = b.train.history.iter().map(|e| e.loss.total).collect();
        assert_eq!(la, lb);
        assert_eq!(a.train.test, b.train.test);
    }

    #[test]
    fn mean_pooling_trace_is_one_and_sigmoid_nonnegative() {
        let (g, fs, l, s) = data(0.2, 4);
        let cfg = TrainConfig {
            max_epochs: 5,
            ..small_cfg()
        };
        let mp = ablation_run(AblationVariant::MeanPooling, &g, &fs, &l, &s, &cfg).unwrap();
        assert!(mp.train.trace.all_values().all(|v| v == 1.0));
        let sg = ablation_run(AblationVariant::NoFreqAdaptive, &g, &fs, &l, &s, &cfg).unwrap();
        assert!(sg
            .train
            .trace
            .all_values()
            .all(|v| (0.0..=1.0).contains(&v)));
        let re = ablation_run(AblationVariant::RandomEdges, &g, &fs, &l, &s, &cfg).unwrap();
        let full = ablation_run(AblationVariant::Full, &g, &fs, &l, &s, &cfg).unwrap();
        assert_eq!(
            re.injected.as_ref().unwrap().1.len(),
            full.injected.as_ref().unwrap().1.len()
        );
        assert_eq!(
            re.graph.relation(RANDOM_RELATION).unwrap().len(),
            full.knn.unwrap().pairs().len()
        );
    }
}
