use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::HeteroGraph;
use crate::numcore::{dot, Matrix};

pub const KNN_RELATION: &str = "knn";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnResult {
    /// Effective k after clamping to N−1.
    pub k: usize,
    /// Per node, ids ordered by (cosine desc, id asc).
    pub neighbor_lists: Vec<Vec<usize>>,
    pub injected_relation: String,
}

impl KnnResult {
    /// Symmetrized undirected pairs `(min, max)`, sorted and deduplicated.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .neighbor_lists
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().map(move |&v| (u.min(v), u.max(v))))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn with_relation_name(mut self, name: &str) -> Self {
        self.injected_relation = name.to_string();
        self
    }
}

/// Cosine similarity; zero-norm vectors score 0 against everything.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot(a, b) / (na * nb)
}

/// Exact brute-force cosine k-NN over the rows of `h`.
pub fn knn_graph(h: &Matrix, k: usize) -> Result<KnnResult> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let n = h.rows();
    let k_eff = k.min(n.saturating_sub(1));
    if k_eff < k {
        log::warn!("k = {k} exceeds N−1 = {}; clamping", n.saturating_sub(1));
    }
    let norms: Vec<f64> = (0..n).map(|i| dot(h.row(i), h.row(i)).sqrt()).collect();
    let mut lists = Vec::with_capacity(n);
    let mut scored: Vec<(f64, usize)> = Vec::with_capacity(n);
    for u in 0..n {
        scored.clear();
        for v in 0..n {
            if v == u {
                continue;
            }
            let sim = if norms[u] == 0.0 || norms[v] == 0.0 {
                0.0
            } else {
                dot(h.row(u), h.row(v)) / (norms[u] * norms[v])
            };
            scored.push((sim, v));
        }
        let order = |a: &(f64, usize), b: &(f64, usize)| -> Ordering {
            b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
        };
        if k_eff < scored.len() && k_eff > 0 {
            scored.select_nth_unstable_by(k_eff - 1, order);
            scored.truncate(k_eff);
        }
        scored.sort_unstable_by(order);
        lists.push(scored.iter().take(k_eff).map(|&(_, v)| v).collect());
    }
    Ok(KnnResult {
        k: k_eff,
        neighbor_lists: lists,
        injected_relation: KNN_RELATION.to_string(),
    })
}

/// Returns `g` plus one new relation holding the symmetrized k-NN pairs.
pub fn augment(g: &HeteroGraph, knn: &KnnResult) -> Result<HeteroGraph> {
    if knn.neighbor_lists.len() > g.num_nodes() {
        return Err(Error::Graph(format!(
            "k-NN covers {} nodes but the graph has {}",
            knn.neighbor_lists.len(),
            g.num_nodes()
        )));
    }
    let mut out = g.clone();
    out.add_relation(&knn.injected_relation, knn.pairs())?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn picks_most_similar() {
        let h = Matrix::from_rows(&[[1.0, 0.0], [0.9, 0.1], [0.0, 1.0]]);
        let r = knn_graph(&h, 1).unwrap();
        assert_eq!(r.neighbor_lists[0], vec![1]);
        assert!(cosine(h.row(0), h.row(1)) > 0.99);
    }

    #[test]
    fn ties_go_to_lowest_id() {
        let h = Matrix::filled(5, 3, 1.0);
        let r = knn_graph(&h, 1).unwrap();
        assert_eq!(r.neighbor_lists[0], vec![1]);
        for u in 1..5 {
            assert_eq!(r.neighbor_lists[u], vec![0]);
        }
    }

    #[test]
    fn full_k_gives_complete_graph_and_clamps() {
        let h = Matrix::from_rows(&[[1.0, 2.0], [0.0, 1.0], [3.0, -1.0], [0.5, 0.5]]);
        let r = knn_graph(&h, 10).unwrap();
        assert_eq!(r.k, 3);
        assert_eq!(r.pairs().len(), 6);
        assert!(knn_graph(&h, 0).is_err());
    }

    #[test]
    fn zero_vectors_score_zero() {
        let h = Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0]]);
        let r = knn_graph(&h, 1).unwrap();
        // node 2 has cos −1 with node 1 and 0 with the zero vector.
        assert_eq!(r.neighbor_lists[2], vec![0]);
        assert_eq!(r.neighbor_lists[0], vec![1]);
    }

    #[test]
    fn augment_adds_one_relation() {
        let mut g = HeteroGraph::new(3);
        g.add_relation("follower", [(0, 1)]).unwrap();
        let empty = KnnResult {
            k: 1,
            neighbor_lists: vec![vec![], vec![], vec![]],
            injected_relation: KNN_RELATION.into(),
        };
        let a = augment(&g, &empty).unwrap();
        assert_eq!(a.relations().len(), 2);
        assert_eq!(a.relation(KNN_RELATION).unwrap().len(), 0);
        assert_eq!(a.relations()[0], g.relations()[0]);
        assert!(matches!(augment(&a, &empty), Err(Error::RelationExists(_))));
        let twice = augment(&a, &empty.clone().with_relation_name("knn2")).unwrap();
        assert_eq!(twice.relations().len(), 3);
    }
}
