//! Brute-force oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use hetbot::graph::{HeteroGraph, LabelSet};
use hetbot::numcore::seeded_rng;
use rand::Rng;

/// Dense symmetric adjacency over the union of relations.
pub fn adjacency(g: &HeteroGraph) -> Vec<Vec<bool>> {
    let n = g.num_nodes();
    let mut a = vec![vec![false; n]; n];
    for r in g.relations() {
        for &(u, v) in r.pairs() {
            a[u][v] = true;
            a[v][u] = true;
        }
    }
    a
}

pub struct Oracle {
    pub node: Option<f64>,
    pub edge: Option<f64>,
    pub class_insensitive: Option<f64>,
}

/// Homophily scores straight from the definitions, by scanning the matrix.
pub fn oracle(g: &HeteroGraph, labels: &LabelSet) -> Oracle {
    let a = adjacency(g);
    let n = g.num_nodes();
    let y: Vec<Option<usize>> = (0..n).map(|i| labels.get(i)).collect();

    let mut fractions = Vec::new();
    for i in 0..n {
        let Some(yi) = y[i] else { continue };
        let nbrs: Vec<usize> = (0..n).filter(|&j| a[i][j] && y[j].is_some()).collect();
        if !nbrs.is_empty() {
            let same = nbrs.iter().filter(|&&j| y[j] == Some(yi)).count();
            fractions.push(same as f64 / nbrs.len() as f64);
        }
    }
    let node =
        (!fractions.is_empty()).then(|| fractions.iter().sum::<f64>() / fractions.len() as f64);

    let (mut same, mut total) = (0usize, 0usize);
    for i in 0..n {
        for j in i + 1..n {
            if a[i][j] && y[i].is_some() && y[j].is_some() {
                total += 1;
                if y[i] == y[j] {
                    same += 1;
                }
            }
        }
    }
    let edge = (total > 0).then(|| same as f64 / total as f64);

    let c = labels.num_classes();
    let labeled = y.iter().filter(|l| l.is_some()).count();
    let class_insensitive = (total > 0).then(|| {
        let mut h = 0.0;
        for k in 0..c {
            let (mut s, mut d, mut size) = (0usize, 0usize, 0usize);
            for i in 0..n {
                if y[i] != Some(k) {
                    continue;
                }
                size += 1;
                for j in 0..n {
                    if a[i][j] && y[j].is_some() {
                        d += 1;
                        if y[j] == Some(k) {
                            s += 1;
                        }
                    }
                }
            }
            let hk = if d == 0 { 0.0 } else { s as f64 / d as f64 };
            h += (hk - size as f64 / labeled as f64).max(0.0);
        }
        h / (c - 1) as f64
    });
    Oracle {
        node,
        edge,
        class_insensitive,
    }
}

/// A random two-relation graph with `n` nodes, some of them unlabeled.
/// Duplicate and self-loop rows are included on purpose.
pub fn random_graph(seed: u64, n: usize, unlabeled: bool) -> (HeteroGraph, LabelSet) {
    let mut rng = seeded_rng(seed);
    let p = rng.random_range(0.05..0.5);
    let mut g = HeteroGraph::new(n);
    for name in ["follower", "friend"] {
        let mut pairs = Vec::new();
        for u in 0..n {
            for v in 0..n {
                if rng.random::<f64>() < p / 2.0 {
                    pairs.push((u, v));
                }
            }
        }
        g.add_relation(name, pairs).unwrap();
    }
    let labels: Vec<Option<usize>> = (0..n)
        .map(|_| {
            if unlabeled && rng.random::<f64>() < 0.2 {
                None
            } else {
                Some(rng.random_range(0..2))
            }
        })
        .collect();
    (g, LabelSet::new(labels, 2).unwrap())
}
