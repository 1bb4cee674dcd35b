use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::splits::SplitSet;
use super::trainer::{train_model_with, TrainOutcome};
use crate::error::{Error, Result};
use crate::faat::AttentionMode;
use crate::features::FeatureSet;
use crate::graph::{HeteroGraph, LabelSet};
use crate::homoaug::{homo_aug, KnnResult, KNN_RELATION};
use crate::numcore::seeded_rng;

pub const RANDOM_RELATION: &str = "random";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationVariant {
    Full,
    NoAug,
    RandomEdges,
    NoFreqAdaptive,
    MeanPooling,
    NoWegl,
}

impl AblationVariant {
    pub const ALL: [AblationVariant; 6] = [
        AblationVariant::Full,
        AblationVariant::NoAug,
        AblationVariant::RandomEdges,
        AblationVariant::NoFreqAdaptive,
        AblationVariant::MeanPooling,
        AblationVariant::NoWegl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AblationVariant::Full => "full",
            AblationVariant::NoAug => "no_aug",
            AblationVariant::RandomEdges => "random_edges",
            AblationVariant::NoFreqAdaptive => "no_freq_adaptive",
            AblationVariant::MeanPooling => "mean_pooling",
            AblationVariant::NoWegl => "no_wegl",
        }
    }

    pub fn attention(self) -> AttentionMode {
        match self {
            AblationVariant::NoFreqAdaptive => AttentionMode::Sigmoid,
            AblationVariant::MeanPooling => AttentionMode::Constant,
            _ => AttentionMode::Tanh,
        }
    }
}

impl fmt::Display for AblationVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AblationVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AblationVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::UnknownVariant(s.to_string()))
    }
}

/// Everything produced by one augmentation + training run.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub variant: AblationVariant,
    /// The graph the detector was trained on.
    pub graph: HeteroGraph,
    /// Name and pairs of the injected relation, if any.
    pub injected: Option<(String, Vec<(usize, usize)>)>,
    pub knn: Option<KnnResult>,
    pub train: TrainOutcome,
}

/// `count` distinct uniformly random unordered pairs without self-loops.
pub fn random_pairs(num_nodes: usize, count: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
    let available = num_nodes * num_nodes.saturating_sub(1) / 2;
    if count > available {
        return Err(Error::Graph(format!(
            "cannot draw {count} distinct pairs from {num_nodes} nodes"
        )));
    }
    let mut rng = seeded_rng(seed);
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let u = rng.random_range(0..num_nodes);
        let v = rng.random_range(0..num_nodes);
        if u != v && seen.insert((u.min(v), u.max(v))) {
            out.push((u.min(v), u.max(v)));
        }
    }
    Ok(out)
}

type Prepared = (
    HeteroGraph,
    Option<(String, Vec<(usize, usize)>)>,
    Option<KnnResult>,
);

fn with_random_edges(mut graph: HeteroGraph, count: usize, seed: u64) -> Result<Prepared> {
    let pairs = random_pairs(graph.num_nodes(), count, seed ^ 0x5eed)?;
    graph.add_relation(RANDOM_RELATION, pairs.iter().copied())?;
    Ok((graph, Some((RANDOM_RELATION.to_string(), pairs)), None))
}

/// Augment (or not) according to `variant`, then train.
///
/// A graph that already carries a `knn` relation is treated as augmented:
/// the relation is kept for the augmenting variants, dropped for `no_aug`
/// and replaced by as many random pairs for `random_edges`.
pub fn ablation_run(
    variant: AblationVariant,
    g: &HeteroGraph,
    features: &FeatureSet,
    labels: &LabelSet,
    splits: &SplitSet,
    cfg: &TrainConfig,
) -> Result<PipelineOutcome> {
    let mut cfg = cfg.clone();
    if variant == AblationVariant::NoWegl {
        cfg.lambda2 = 0.0;
    }
    let (graph, injected, knn) = if let Some(existing) = g.relation(KNN_RELATION) {
        log::info!("using the existing `{KNN_RELATION}` relation instead of re-augmenting");
        let pairs = existing.pairs().to_vec();
        let base = g.without_relation(KNN_RELATION);
        match variant {
            AblationVariant::NoAug => (base, None, None),
            AblationVariant::RandomEdges => with_random_edges(base, pairs.len(), cfg.seed)?,
            _ => (g.clone(), Some((KNN_RELATION.to_string(), pairs)), None),
        }
    } else {
        match variant {
            AblationVariant::NoAug => (g.clone(), None, None),
            _ => {
                let (augmented, knn, _) = homo_aug(
                    g,
                    features,
                    labels,
                    &splits.train,
                    &splits.val,
                    cfg.k,
                    &cfg.mlp_config(),
                )?;
                if variant == AblationVariant::RandomEdges {
                    with_random_edges(g.clone(), knn.pairs().len(), cfg.seed)?
                } else {
                    let name = knn.injected_relation.clone();
                    let pairs = knn.pairs();
                    (augmented, Some((name, pairs)), Some(knn))
                }
            }
        }
    };
    let train = train_model_with(&graph, features, labels, splits, &cfg, variant.attention())?;
    Ok(PipelineOutcome {
        variant,
        graph,
        injected,
        knn,
        train,
    })
}
