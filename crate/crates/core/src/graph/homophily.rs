//! Node, edge and class-insensitive homophily over the union of relations.
//!
//! Only labeled nodes take part: an edge counts when both endpoints carry a
//! label, and a node's neighborhood is its set of labeled neighbors.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{HeteroGraph, LabelSet};
use crate::error::{Error, Result};

fn labeled_pairs(g: &HeteroGraph, labels: &LabelSet) -> Vec<(usize, usize, bool)> {
    g.merged_pairs()
        .into_iter()
        .filter_map(|(u, v)| match (labels.get(u), labels.get(v)) {
            (Some(a), Some(b)) => Some((u, v, a == b)),
            _ => None,
        })
        .collect()
}

/// Per labeled node: (same-label neighbors, labeled neighbors).
fn neighbor_counts(g: &HeteroGraph, labels: &LabelSet) -> Vec<(usize, usize)> {
    let mut counts = vec![(0, 0); g.num_nodes()];
    for (u, v, same) in labeled_pairs(g, labels) {
        for node in [u, v] {
            counts[node].1 += 1;
            if same {
                counts[node].0 += 1;
            }
        }
    }
    counts
}

/// Mean same-label fraction over labeled nodes with at least one labeled neighbor.
pub fn node_homophily(g: &HeteroGraph, labels: &LabelSet) -> Result<f64> {
    let counts = neighbor_counts(g, labels);
    let fractions: Vec<f64> = counts
        .iter()
        .filter(|(_, deg)| *deg > 0)
        .map(|&(same, deg)| same as f64 / deg as f64)
        .collect();
    if fractions.is_empty() {
        return Err(Error::Graph(
            "node homophily needs at least one labeled node with a labeled neighbor".into(),
        ));
    }
    Ok(fractions.iter().sum::<f64>() / fractions.len() as f64)
}

/// Fraction of (deduplicated, labeled) edges joining same-label endpoints.
pub fn edge_homophily(g: &HeteroGraph, labels: &LabelSet) -> Result<f64> {
    let pairs = labeled_pairs(g, labels);
    if pairs.is_empty() {
        return Err(Error::Graph("edge homophily of an empty edge set".into()));
    }
    let same = pairs.iter().filter(|p| p.2).count();
    Ok(same as f64 / pairs.len() as f64)
}

/// `1/(C−1) · Σ_k max(0, h_k − |C_k|/|V|)` with `h_k` aggregated over each class:
/// same-label neighbor count of class-k nodes over their total degree.
pub fn class_insensitive_homophily(g: &HeteroGraph, labels: &LabelSet) -> Result<f64> {
    let c = labels.num_classes();
    if labels_edges_empty(g, labels) {
        return Err(Error::Graph(
            "class-insensitive homophily of an empty edge set".into(),
        ));
    }
    let counts = neighbor_counts(g, labels);
    let mut same = vec![0usize; c];
    let mut degree = vec![0usize; c];
    for (node, &(s, d)) in counts.iter().enumerate() {
        if let Some(k) = labels.get(node) {
            same[k] += s;
            degree[k] += d;
        }
    }
    let class_sizes = labels.class_counts();
    let total: usize = class_sizes.iter().sum();
    let mut h = 0.0;
    for k in 0..c {
        let h_k = if degree[k] == 0 {
            0.0
        } else {
            same[k] as f64 / degree[k] as f64
        };
        h += (h_k - class_sizes[k] as f64 / total as f64).max(0.0);
    }
    Ok(h / (c - 1) as f64)
}

fn labels_edges_empty(g: &HeteroGraph, labels: &LabelSet) -> bool {
    labeled_pairs(g, labels).is_empty()
}

/// Counts of per-node homophily in the bins `[0,.25) [.25,.5) [.5,.75) [.75,1]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomophilyHistogram {
    pub bins: [usize; 4],
}

impl HomophilyHistogram {
    pub const EDGES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

    pub fn bin_of(value: f64) -> usize {
        ((value * 4.0).floor() as usize).min(3)
    }

    pub fn from_values<'a>(values: impl IntoIterator<Item = &'a f64>) -> Self {
        let mut h = HomophilyHistogram::default();
        for &v in values {
            h.bins[Self::bin_of(v)] += 1;
        }
        h
    }

    pub fn total(&self) -> usize {
        self.bins.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeHomophily {
    /// Same-label neighbor fraction per non-isolated labeled node.
    pub values: BTreeMap<usize, f64>,
    pub histogram: HomophilyHistogram,
}

impl NodeHomophily {
    /// Histogram restricted to nodes of one class.
    pub fn histogram_for_class(&self, labels: &LabelSet, class: usize) -> HomophilyHistogram {
        HomophilyHistogram::from_values(
            self.values
                .iter()
                .filter(|(n, _)| labels.get(**n) == Some(class))
                .map(|(_, v)| v),
        )
    }
}

pub fn per_node_homophily(g: &HeteroGraph, labels: &LabelSet) -> NodeHomophily {
    let values: BTreeMap<usize, f64> = neighbor_counts(g, labels)
        .into_iter()
        .enumerate()
        .filter(|(_, (_, deg))| *deg > 0)
        .map(|(n, (same, deg))| (n, same as f64 / deg as f64))
        .collect();
    let histogram = HomophilyHistogram::from_values(values.values());
    NodeHomophily { values, histogram }
}

/// The three graph-level scores, as emitted by `analyze`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomophilyReport {
    pub node_homophily: f64,
    pub edge_homophily: f64,
    pub class_insensitive_homophily: f64,
}

impl HomophilyReport {
    pub fn compute(g: &HeteroGraph, labels: &LabelSet) -> Result<Self> {
        Ok(HomophilyReport {
            node_homophily: node_homophily(g, labels)?,
            edge_homophily: edge_homophily(g, labels)?,
            class_insensitive_homophily: class_insensitive_homophily(g, labels)?,
        })
    }
}
