use std::collections::HashSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{HeteroGraph, LabelSet};
use crate::error::{Error, Result};
use crate::features::{FeatureFamily, FeatureSet};
use crate::numcore::{seeded_rng, Matrix};

pub const FOLLOWER_RELATION: &str = "follower";
pub const FRIEND_RELATION: &str = "friend";

/// Two-class benchmark generator settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub n_per_class: usize,
    pub target_edge_homophily: f64,
    pub mean_degree: f64,
    pub description_dim: usize,
    pub numerical_dim: usize,
    pub categorical_dim: usize,
    /// Distance between the two class means, in units of the feature std.
    pub class_mean_separation: f64,
    /// σ of the log-normal per-node degree propensity; 0 gives uniform endpoints.
    pub degree_spread: f64,
    /// Share of the same-class edges that join two humans; the rest join two
    /// bots. Above 0.5 bots sit mostly among humans.
    pub human_share: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_per_class: 500,
            target_edge_homophily: 0.5,
            mean_degree: 8.0,
            description_dim: 8,
            numerical_dim: 4,
            categorical_dim: 4,
            class_mean_separation: 2.0,
            degree_spread: 0.5,
            human_share: 0.5,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.target_edge_homophily) {
            return Err(Error::Config(format!(
                "target_edge_homophily {} outside [0, 1]",
                self.target_edge_homophily
            )));
        }
        if self.mean_degree.is_nan() || self.mean_degree <= 0.0 {
            return Err(Error::Config("mean_degree must be positive".into()));
        }
        if self.class_mean_separation.is_nan() || self.class_mean_separation < 0.0 {
            return Err(Error::Config("class_mean_separation must be ≥ 0".into()));
        }
        if !(0.0..=1.0).contains(&self.human_share) {
            return Err(Error::Config(format!(
                "human_share {} outside [0, 1]",
                self.human_share
            )));
        }
        if self.degree_spread < 0.0 {
            return Err(Error::Config("degree_spread must be ≥ 0".into()));
        }
        if self.n_per_class < 2 {
            return Err(Error::Config("n_per_class must be at least 2".into()));
        }
        if self.description_dim + self.numerical_dim + self.categorical_dim == 0 {
            return Err(Error::Config("all feature families have width 0".into()));
        }
        Ok(())
    }
}

/// Degree-corrected two-class pairing model.
///
/// Exactly `round(M·h)` of the `M = round(N·mean_degree/2)` edges join
/// same-class nodes, `human_share` of them between humans; endpoints are drawn in proportion to a log-normal
/// per-node propensity. Each edge lands in `follower` or `friend` with equal
/// probability. Features are isotropic Gaussians whose class means differ by
/// `class_mean_separation` along a random direction.
pub fn synth_graph(cfg: &SynthConfig) -> Result<(HeteroGraph, FeatureSet, LabelSet)> {
    cfg.validate()?;
    let mut rng = seeded_rng(cfg.seed);
    let n_class = cfg.n_per_class;
    let n = 2 * n_class;

    let mut label_of: Vec<usize> = (0..n).map(|i| i / n_class).collect();
    label_of.shuffle(&mut rng);
    let members: [Vec<usize>; 2] = [
        (0..n).filter(|&i| label_of[i] == 0).collect(),
        (0..n).filter(|&i| label_of[i] == 1).collect(),
    ];

    let total_edges = (n as f64 * cfg.mean_degree / 2.0).round() as usize;
    let same_edges = (total_edges as f64 * cfg.target_edge_homophily).round() as usize;
    let cross_edges = total_edges - same_edges;
    let within_capacity = n_class * (n_class - 1) / 2;
    let human_same = (same_edges as f64 * cfg.human_share).round() as usize;
    let per_class = [human_same, same_edges - human_same];
    if per_class.iter().any(|&c| c > within_capacity) {
        return Err(Error::Unreachable {
            target: cfg.target_edge_homophily,
            reason: format!(
                "needs {per_class:?} same-class pairs per class but only {within_capacity} exist in each"
            ),
        });
    }
    if cross_edges > n_class * n_class {
        return Err(Error::Unreachable {
            target: cfg.target_edge_homophily,
            reason: format!(
                "needs {cross_edges} cross-class pairs but only {} exist",
                n_class * n_class
            ),
        });
    }

    let propensity: Vec<f64> = if cfg.degree_spread > 0.0 {
        let dist =
            LogNormal::new(0.0, cfg.degree_spread).map_err(|e| Error::Config(e.to_string()))?;
        (0..n).map(|_| dist.sample(&mut rng)).collect()
    } else {
        vec![1.0; n]
    };
    let pickers: Vec<WeightedIndex<f64>> = members
        .iter()
        .map(|m| WeightedIndex::new(m.iter().map(|&i| propensity[i])))
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Config(e.to_string()))?;

    let mut chosen: HashSet<(usize, usize)> = HashSet::with_capacity(total_edges);
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(total_edges);

    for (c, &count) in per_class.iter().enumerate() {
        let m = &members[c];
        if count * 2 > within_capacity {
            let mut pool = Vec::with_capacity(within_capacity);
            for (i, &u) in m.iter().enumerate() {
                for &v in &m[i + 1..] {
                    pool.push((u.min(v), u.max(v)));
                }
            }
            let (picked, _) = pool.partial_shuffle(&mut rng, count);
            for &p in picked.iter() {
                chosen.insert(p);
                edges.push(p);
            }
        } else {
            let goal = edges.len() + count;
            while edges.len() < goal {
                let u = m[pickers[c].sample(&mut rng)];
                let v = m[pickers[c].sample(&mut rng)];
                push_new(u, v, &mut chosen, &mut edges);
            }
        }
    }

    let target_total = same_edges + cross_edges;
    if cross_edges * 2 > n_class * n_class {
        let mut pool = Vec::with_capacity(n_class * n_class);
        for &u in &members[0] {
            for &v in &members[1] {
                pool.push((u.min(v), u.max(v)));
            }
        }
        let (picked, _) = pool.partial_shuffle(&mut rng, cross_edges);
        for &p in picked.iter() {
            chosen.insert(p);
            edges.push(p);
        }
    } else {
        while edges.len() < target_total {
            let u = members[0][pickers[0].sample(&mut rng)];
            let v = members[1][pickers[1].sample(&mut rng)];
            push_new(u, v, &mut chosen, &mut edges);
        }
    }

    let mut follower = Vec::new();
    let mut friend = Vec::new();
    for e in edges {
        if rng.random_bool(0.5) {
            follower.push(e);
        } else {
            friend.push(e);
        }
    }
    let mut graph = HeteroGraph::new(n);
    graph.add_relation(FOLLOWER_RELATION, follower)?;
    graph.add_relation(FRIEND_RELATION, friend)?;

    let features = class_gaussians(cfg, &label_of, &mut rng)?;
    let labels = LabelSet::binary(&label_of)?;
    Ok((graph, features, labels))
}

fn push_new(
    u: usize,
    v: usize,
    chosen: &mut HashSet<(usize, usize)>,
    edges: &mut Vec<(usize, usize)>,
) {
    if u == v {
        return;
    }
    let key = (u.min(v), u.max(v));
    if chosen.insert(key) {
        edges.push(key);
    }
}

fn class_gaussians(
    cfg: &SynthConfig,
    label_of: &[usize],
    rng: &mut impl Rng,
) -> Result<FeatureSet> {
    let dims = [cfg.description_dim, cfg.numerical_dim, cfg.categorical_dim];
    let width: usize = dims.iter().sum();
    let mut direction: Vec<f64> = (0..width).map(|_| rng.sample(StandardNormal)).collect();
    let norm = direction
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    direction.iter_mut().for_each(|v| *v /= norm);

    let n = label_of.len();
    let mut all = Matrix::zeros(n, width);
    for (i, &label) in label_of.iter().enumerate() {
        let shift = (label as f64 - 0.5) * cfg.class_mean_separation;
        for (j, v) in all.row_mut(i).iter_mut().enumerate() {
            let noise: f64 = rng.sample(StandardNormal);
            *v = shift * direction[j] + noise;
        }
    }

    let mut fs = FeatureSet::new(n);
    let mut offset = 0;
    for (family, &d) in FeatureFamily::ALL.iter().zip(&dims) {
        if d > 0 {
            fs.set(*family, all.slice_cols(offset, offset + d)?)?;
        }
        offset += d;
    }
    Ok(fs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::edge_homophily;

    fn small(target: f64, seed: u64) -> SynthConfig {
        SynthConfig {
            n_per_class: 100,
            target_edge_homophily: target,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn fully_homophilic_target() {
        let (g, _, l) = synth_graph(&small(1.0, 0)).unwrap();
        assert_eq!(edge_homophily(&g, &l).unwrap(), 1.0);
    }

    #[test]
    fn reproducible() {
        let a = synth_graph(&small(0.3, 5)).unwrap();
        let b = synth_graph(&small(0.3, 5)).unwrap();
        assert_eq!(a, b);
        let c = synth_graph(&small(0.3, 6)).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn shape_and_relations() {
        let (g, f, l) = synth_graph(&small(0.5, 1)).unwrap();
        assert_eq!(g.num_nodes(), 200);
        assert_eq!(g.relation_names(), vec!["follower", "friend"]);
        assert_eq!(g.num_edges(), 800);
        assert_eq!(f.total_width(), 16);
        assert_eq!(l.class_counts(), vec![100, 100]);
    }

    #[test]
    fn human_share_places_same_class_edges() {
        let cfg = SynthConfig {
            human_share: 1.0,
            ..small(0.5, 2)
        };
        let (g, _, l) = synth_graph(&cfg).unwrap();
        let pairs = g.merged_pairs();
        let bot_bot = pairs
            .iter()
            .filter(|&&(u, v)| l.get(u) == Some(1) && l.get(v) == Some(1))
            .count();
        let human_human = pairs
            .iter()
            .filter(|&&(u, v)| l.get(u) == Some(0) && l.get(v) == Some(0))
            .count();
        assert_eq!(bot_bot, 0);
        assert_eq!(human_human, 400);
    }

    #[test]
    fn infeasible_density_errors() {
        let cfg = SynthConfig {
            n_per_class: 4,
            mean_degree: 7.0,
            target_edge_homophily: 1.0,
            ..Default::default()
        };
        assert!(matches!(synth_graph(&cfg), Err(Error::Unreachable { .. })));
    }

    #[test]
    fn invalid_config_errors() {
        assert!(synth_graph(&small(1.5, 0)).is_err());
        let cfg = SynthConfig {
            mean_degree: 0.0,
            ..Default::default()
        };
        assert!(synth_graph(&cfg).is_err());
    }
}
