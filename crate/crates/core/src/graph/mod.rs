//! Relation-typed undirected graphs, labels and homophily analysis.

mod homophily;
mod perturb;
mod synth;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use homophily::{
    class_insensitive_homophily, edge_homophily, node_homophily, per_node_homophily,
    HomophilyHistogram, HomophilyReport, NodeHomophily,
};
pub use perturb::{perturb_to_homophily, PERTURB_RELATION};
pub use synth::{synth_graph, SynthConfig, FOLLOWER_RELATION, FRIEND_RELATION};

/// One edge type: undirected pairs stored as `(min, max)` plus per-node degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relation {
    name: String,
    pairs: Vec<(usize, usize)>,
    degree: Vec<usize>,
}

impl Relation {
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Pairs in insertion order, each with `u < v`.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn degree(&self, node: usize) -> usize {
        self.degree[node]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degree
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// What was discarded while inserting a relation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeInsertStats {
    pub inserted: usize,
    pub self_loops: usize,
    pub duplicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeteroGraph {
    num_nodes: usize,
    relations: Vec<Relation>,
}

impl HeteroGraph {
    pub fn new(num_nodes: usize) -> Self {
        HeteroGraph {
            num_nodes,
            relations: Vec::new(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.iter().find(|r| r.name == name)
    }

    pub fn relation_names(&self) -> Vec<String> {
        self.relations.iter().map(|r| r.name.clone()).collect()
    }

    pub fn num_edges(&self) -> usize {
        self.relations.iter().map(Relation::len).sum()
    }

    /// Adds a new relation. Self-loops and repeated pairs are dropped and counted;
    /// out-of-range endpoints and name collisions are errors.
    pub fn add_relation<I>(&mut self, name: &str, pairs: I) -> Result<EdgeInsertStats>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if self.relation(name).is_some() {
            return Err(Error::RelationExists(name.to_string()));
        }
        let mut stats = EdgeInsertStats::default();
        let mut seen = HashSet::new();
        let mut kept = Vec::new();
        let mut degree = vec![0; self.num_nodes];
        for (a, b) in pairs {
            if a >= self.num_nodes || b >= self.num_nodes {
                return Err(Error::Graph(format!(
                    "edge ({a}, {b}) in relation `{name}` references a node outside 0..{}",
                    self.num_nodes
                )));
            }
            if a == b {
                stats.self_loops += 1;
                continue;
            }
            let key = (a.min(b), a.max(b));
            if !seen.insert(key) {
                stats.duplicates += 1;
                continue;
            }
            degree[key.0] += 1;
            degree[key.1] += 1;
            kept.push(key);
        }
        stats.inserted = kept.len();
        self.relations.push(Relation {
            name: name.to_string(),
            pairs: kept,
            degree,
        });
        Ok(stats)
    }

    /// Reorders relations by `order`, a permutation of relation indices.
    pub fn permute_relations(&self, order: &[usize]) -> Result<HeteroGraph> {
        let mut check = order.to_vec();
        check.sort_unstable();
        if check != (0..self.relations.len()).collect::<Vec<_>>() {
            return Err(Error::Graph(format!(
                "{order:?} is not a relation permutation"
            )));
        }
        Ok(HeteroGraph {
            num_nodes: self.num_nodes,
            relations: order.iter().map(|&i| self.relations[i].clone()).collect(),
        })
    }

    pub fn rename_relation(&mut self, from: &str, to: &str) -> Result<()> {
        if self.relation(to).is_some() {
            return Err(Error::RelationExists(to.to_string()));
        }
        let r = self
            .relations
            .iter_mut()
            .find(|r| r.name == from)
            .ok_or_else(|| Error::Graph(format!("no relation `{from}`")))?;
        r.name = to.to_string();
        Ok(())
    }

    /// A copy without the relation `name`; unchanged if it is absent.
    pub fn without_relation(&self, name: &str) -> HeteroGraph {
        HeteroGraph {
            num_nodes: self.num_nodes,
            relations: self
                .relations
                .iter()
                .filter(|r| r.name != name)
                .cloned()
                .collect(),
        }
    }

    /// Union of all relations, deduplicated, sorted.
    pub fn merged_pairs(&self) -> Vec<(usize, usize)> {
        let mut all: Vec<(usize, usize)> = self
            .relations
            .iter()
            .flat_map(|r| r.pairs.iter().copied())
            .collect();
        all.sort_unstable();
        all.dedup();
        all
    }

    /// Sorted neighbor lists over the union of relations.
    pub fn merged_neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_nodes];
        for (u, v) in self.merged_pairs() {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    pub fn contains_pair(&self, u: usize, v: usize) -> bool {
        let key = (u.min(v), u.max(v));
        self.relations.iter().any(|r| r.pairs.contains(&key))
    }
}

/// Class label per node; `None` marks an unlabeled node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSet {
    labels: Vec<Option<usize>>,
    num_classes: usize,
}

impl LabelSet {
    pub const HUMAN: usize = 0;
    pub const BOT: usize = 1;

    pub fn new(labels: Vec<Option<usize>>, num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::Config(format!(
                "need at least two classes, got {num_classes}"
            )));
        }
        if let Some((i, l)) = labels
            .iter()
            .enumerate()
            .find_map(|(i, l)| l.filter(|&l| l >= num_classes).map(|l| (i, l)))
        {
            return Err(Error::Config(format!(
                "label {l} of node {i} is outside 0..{num_classes}"
            )));
        }
        Ok(LabelSet {
            labels,
            num_classes,
        })
    }

    /// Fully labeled binary set.
    pub fn binary(labels: &[usize]) -> Result<Self> {
        Self::new(labels.iter().map(|&l| Some(l)).collect(), 2)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn get(&self, node: usize) -> Option<usize> {
        self.labels.get(node).copied().flatten()
    }

    pub fn as_slice(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn labeled_nodes(&self) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&i| self.labels[i].is_some())
            .collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for l in self.labels.iter().flatten() {
            counts[*l] += 1;
        }
        counts
    }

    /// Dense labels with unlabeled nodes mapped to 0; only meaningful under a mask.
    pub fn dense(&self) -> Vec<usize> {
        self.labels.iter().map(|l| l.unwrap_or(0)).collect()
    }

    /// Swaps classes 0 and 1.
    pub fn swapped(&self) -> LabelSet {
        LabelSet {
            labels: self
                .labels
                .iter()
                .map(|l| {
                    l.map(|c| match c {
                        0 => 1,
                        1 => 0,
                        other => other,
                    })
                })
                .collect(),
            num_classes: self.num_classes,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insertion_drops_loops_and_duplicates() {
        let mut g = HeteroGraph::new(3);
        let stats = g
            .add_relation("follower", [(0, 1), (1, 0), (2, 2), (1, 2)])
            .unwrap();
        assert_eq!(
            stats,
            EdgeInsertStats {
                inserted: 2,
                self_loops: 1,
                duplicates: 1
            }
        );
        let r = g.relation("follower").unwrap();
        assert_eq!(r.pairs(), &[(0, 1), (1, 2)]);
        assert_eq!(r.degrees(), &[1, 2, 1]);
    }

    #[test]
    fn name_collision_and_range_errors() {
        let mut g = HeteroGraph::new(3);
        g.add_relation("a", [(0, 1)]).unwrap();
        assert!(matches!(
            g.add_relation("a", [(1, 2)]),
            Err(Error::RelationExists(_))
        ));
        assert!(g.add_relation("b", [(0, 3)]).is_err());
    }

    #[test]
    fn merged_neighbors_dedup_across_relations() {
        let mut g = HeteroGraph::new(3);
        g.add_relation("a", [(0, 1)]).unwrap();
        g.add_relation("b", [(1, 0), (1, 2)]).unwrap();
        assert_eq!(g.merged_pairs(), vec![(0, 1), (1, 2)]);
        assert_eq!(g.merged_neighbors()[1], vec![0, 2]);
    }

    #[test]
    fn labels_validate() {
        assert!(LabelSet::new(vec![Some(0), Some(2)], 2).is_err());
        assert!(LabelSet::new(vec![Some(0)], 1).is_err());
        let l = LabelSet::new(vec![Some(1), None, Some(0)], 2).unwrap();
        assert_eq!(l.labeled_nodes(), vec![0, 2]);
        assert_eq!(l.class_counts(), vec![1, 1]);
        assert_eq!(l.swapped().get(0), Some(0));
    }
}
