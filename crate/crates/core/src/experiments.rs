//! Benchmarks and sweeps: k-NN augmentation studies, homophily sweeps,
//! ablation tables, and the toy gradient check.
//!
//! Sweep results are long-format rows `sweep,level,seed,variant,metric,value`,
//! one per measured quantity, ready for any plotting tool.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::faat::{Mode, ModelConfig, ModelParams, PreparedInput, ResidualVariant};
use crate::features::FeatureSet;
use crate::graph::{edge_homophily, synth_graph, HeteroGraph, LabelSet, SynthConfig};
use crate::homoaug::{augment, knn_graph, train_mlp, MlpConfig};
use crate::numcore::{grad_check, seeded_rng, GradCheckReport, Matrix, DEFAULT_STEP};
use crate::train::{
    ablation_run, loss_and_gradients, make_splits, AblationVariant, GuidancePairs, PipelineOutcome,
    SplitSet, TrainConfig,
};

/// A synthetic benchmark: generator, split ratios and detector settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Benchmark {
    pub synth: SynthConfig,
    pub split_ratios: [f64; 3],
    pub train: TrainConfig,
}

impl Default for Benchmark {
    fn default() -> Self {
        Benchmark::desk()
    }
}

impl Benchmark {
    /// Desk-scale preset used by the examples and the acceptance suite:
    /// 1000 users with weakly separated features, bots hidden among humans,
    /// a small detector and a short training schedule.
    pub fn desk() -> Self {
        Benchmark {
            synth: SynthConfig {
                n_per_class: 500,
                class_mean_separation: 1.0,
                human_share: 1.0,
                ..Default::default()
            },
            split_ratios: [0.4, 0.1, 0.5],
            train: TrainConfig {
                lr: 5e-3,
                lambda1: 1e-4,
                lambda2: 0.2,
                dropout: 0.1,
                hidden: 32,
                mlp_hidden: Some(32),
                patience: 50,
                ..Default::default()
            },
        }
    }

    /// Graph, features, labels and splits at edge homophily `homophily` for `seed`.
    pub fn instance(&self, homophily: f64, seed: u64) -> Result<Dataset> {
        let synth = SynthConfig {
            target_edge_homophily: homophily,
            seed,
            ..self.synth.clone()
        };
        let (graph, features, labels) = synth_graph(&synth)?;
        let splits = make_splits(&labels, self.split_ratios, seed)?;
        Ok(Dataset {
            graph,
            features,
            labels,
            splits: Some(splits),
        })
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            seed,
            ..self.train.clone()
        }
    }
}

/// One long-format measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub sweep: String,
    pub level: f64,
    pub seed: u64,
    pub variant: String,
    pub metric: String,
    pub value: f64,
}

pub fn write_long_csv(path: &Path, records: &[SweepRecord]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Mean of `metric` over seeds for one (variant, level) cell.
pub fn mean_metric(
    records: &[SweepRecord],
    variant: &str,
    level: f64,
    metric: &str,
) -> Option<f64> {
    let values: Vec<f64> = records
        .iter()
        .filter(|r| r.variant == variant && r.level == level && r.metric == metric)
        .map(|r| r.value)
        .collect();
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Sorted distinct levels present in `records`.
pub fn levels(records: &[SweepRecord]) -> Vec<f64> {
    let mut out: Vec<f64> = records.iter().map(|r| r.level).collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Edge homophily of a single relation given by its pairs.
pub fn pairs_homophily(
    num_nodes: usize,
    pairs: &[(usize, usize)],
    labels: &LabelSet,
) -> Result<f64> {
    let mut g = HeteroGraph::new(num_nodes);
    g.add_relation("pairs", pairs.iter().copied())?;
    edge_homophily(&g, labels)
}

fn splits_of(ds: &Dataset) -> Result<&SplitSet> {
    ds.splits
        .as_ref()
        .ok_or_else(|| Error::Config("dataset has no train/val/test split".into()))
}

/// Rows describing one pipeline run: test metrics, epochs, and the homophily
/// of the trained graph and of the injected relation.
pub fn outcome_records(
    sweep: &str,
    level: f64,
    seed: u64,
    outcome: &PipelineOutcome,
    labels: &LabelSet,
) -> Result<Vec<SweepRecord>> {
    let t = &outcome.train;
    let mut metrics = vec![
        ("accuracy", t.test.accuracy),
        ("f1", t.test.f1),
        ("balanced_accuracy", t.test.balanced_accuracy),
        ("best_epoch", t.best_epoch as f64),
        (
            "graph_edge_homophily",
            edge_homophily(&outcome.graph, labels)?,
        ),
    ];
    if let Some((_, pairs)) = &outcome.injected {
        metrics.push((
            "injected_edge_homophily",
            pairs_homophily(outcome.graph.num_nodes(), pairs, labels)?,
        ));
    }
    Ok(metrics
        .into_iter()
        .map(|(metric, value)| SweepRecord {
            sweep: sweep.to_string(),
            level,
            seed,
            variant: outcome.variant.name().to_string(),
            metric: metric.to_string(),
            value,
        })
        .collect())
}

/// Trains every variant at every (level, seed). `make` builds the dataset and
/// configuration for a cell; the same dataset is shared by all variants.
pub fn run_sweep<F>(
    sweep: &str,
    levels: &[f64],
    seeds: &[u64],
    variants: &[AblationVariant],
    mut make: F,
) -> Result<Vec<SweepRecord>>
where
    F: FnMut(f64, u64) -> Result<(Dataset, TrainConfig)>,
{
    let mut records = Vec::new();
    for &level in levels {
        for &seed in seeds {
            let (ds, cfg) = make(level, seed)?;
            let splits = splits_of(&ds)?;
            for &variant in variants {
                log::info!("{sweep} = {level}, seed {seed}, variant {variant}");
                let outcome =
                    ablation_run(variant, &ds.graph, &ds.features, &ds.labels, splits, &cfg)?;
                records.extend(outcome_records(sweep, level, seed, &outcome, &ds.labels)?);
            }
        }
    }
    Ok(records)
}

/// Accuracy of every variant across synthetic edge homophily levels.
pub fn homophily_sweep(
    bench: &Benchmark,
    levels: &[f64],
    seeds: &[u64],
    variants: &[AblationVariant],
) -> Result<Vec<SweepRecord>> {
    run_sweep("homophily", levels, seeds, variants, |h, seed| {
        Ok((bench.instance(h, seed)?, bench.train_config(seed)))
    })
}

/// Accuracy of every variant across k on a benchmark at fixed homophily.
pub fn k_sweep(
    bench: &Benchmark,
    homophily: f64,
    ks: &[usize],
    seeds: &[u64],
    variants: &[AblationVariant],
) -> Result<Vec<SweepRecord>> {
    let levels: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    run_sweep("k", &levels, seeds, variants, |k, seed| {
        let cfg = TrainConfig {
            k: k as usize,
            ..bench.train_config(seed)
        };
        Ok((bench.instance(homophily, seed)?, cfg))
    })
}

/// The six-variant ablation table at one homophily level.
pub fn ablation_study(
    bench: &Benchmark,
    homophily: f64,
    seeds: &[u64],
) -> Result<Vec<SweepRecord>> {
    homophily_sweep(bench, &[homophily], seeds, &AblationVariant::ALL)
}

/// Homophily of the k-NN relation and of the augmented graph for each k.
///
/// The MLP is trained once per call; only the neighbor count varies.
pub fn knn_homophily_sweep(
    ds: &Dataset,
    ks: &[usize],
    mlp: &MlpConfig,
    seed: u64,
) -> Result<Vec<SweepRecord>> {
    let splits = splits_of(ds)?;
    let model = train_mlp(&ds.features, &ds.labels, &splits.train, &splits.val, mlp)?;
    let reps = model.hidden_reps(&ds.features)?;
    let mut out = Vec::new();
    for &k in ks {
        let knn = knn_graph(&reps, k)?;
        let augmented = augment(&ds.graph, &knn)?;
        let n = ds.graph.num_nodes();
        for (metric, value) in [
            (
                "knn_edge_homophily",
                pairs_homophily(n, &knn.pairs(), &ds.labels)?,
            ),
            (
                "combined_edge_homophily",
                edge_homophily(&augmented, &ds.labels)?,
            ),
        ] {
            out.push(SweepRecord {
                sweep: "k".into(),
                level: k as f64,
                seed,
                variant: "homo_aug".into(),
                metric: metric.into(),
                value,
            });
        }
    }
    Ok(out)
}

/// Parses `a:b:step` into the inclusive grid `a, a+step, …, b`, rounded to
/// nine decimals.
pub fn parse_range(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("range `{text}` is not start:end:step")))?;
    let [start, end, step] = parts[..] else {
        return Err(Error::Config(format!(
            "range `{text}` is not start:end:step"
        )));
    };
    if step.is_nan() || step <= 0.0 || end < start {
        return Err(Error::Config(format!(
            "range `{text}` needs step > 0 and end >= start"
        )));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

/// The bundled gradient-check problem: 8 users, two relations, two layers of
/// two heads, dropout off, both regularizers active.
pub struct ToyProblem {
    pub graph: HeteroGraph,
    pub features: FeatureSet,
    pub labels: LabelSet,
    pub train: Vec<usize>,
    pub config: TrainConfig,
}

impl ToyProblem {
    pub fn new(residual: ResidualVariant) -> Result<Self> {
        let mut rng = seeded_rng(17);
        let n = 8;
        let mut graph = HeteroGraph::new(n);
        graph.add_relation(
            "follower",
            [
                (0, 1),
                (1, 2),
                (2, 3),
                (3, 4),
                (4, 5),
                (5, 6),
                (6, 7),
                (0, 7),
            ],
        )?;
        graph.add_relation("friend", [(0, 2), (1, 3), (0, 1), (4, 6), (5, 7), (2, 5)])?;
        let data = (0..n * 3)
            .map(|_| rng.random::<f64>() * 2.0 - 1.0)
            .collect();
        let features = FeatureSet::single(Matrix::from_vec(n, 3, data)?);
        let labels = LabelSet::binary(&[0, 1, 1, 0, 0, 1, 0, 1])?;
        let config = TrainConfig {
            hidden: 4,
            heads: 2,
            layers: 2,
            dropout: 0.0,
            lambda1: 0.01,
            lambda2: 0.5,
            residual,
            seed: 3,
            ..Default::default()
        };
        Ok(ToyProblem {
            graph,
            features,
            labels,
            train: (0..6).collect(),
            config,
        })
    }

    pub fn model_config(&self) -> ModelConfig {
        self.config.model_config(Default::default())
    }

    /// Finite differences against the analytic gradient of the total loss.
    pub fn grad_check(&self) -> Result<GradCheckReport> {
        let params = ModelParams::init(
            self.features.total_width(),
            &self.graph.relation_names(),
            &self.model_config(),
            self.config.seed,
        )?;
        let input = PreparedInput::new(&self.graph, &self.features, &params)?;
        let dense = self.labels.dense();
        let guidance = GuidancePairs::build(&input.edges, &self.labels, &self.train);
        let mut probe = params.clone();
        grad_check(&params.store, DEFAULT_STEP, |store| {
            probe.store = store.clone();
            let (loss, grads) = loss_and_gradients(
                &input,
                &probe,
                &dense,
                &self.train,
                &guidance,
                &self.config,
                Mode::Eval,
            )?;
            Ok((loss.total, grads))
        })
    }
}

/// Worst relative error of the toy check under both residual variants.
pub fn toy_grad_check() -> Result<Vec<(ResidualVariant, GradCheckReport)>> {
    [ResidualVariant::Initial, ResidualVariant::Transform]
        .into_iter()
        .map(|r| Ok((r, ToyProblem::new(r)?.grad_check()?)))
        .collect()
}
