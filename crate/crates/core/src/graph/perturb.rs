use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{HeteroGraph, LabelSet};
use crate::error::{Error, Result};
use crate::numcore::seeded_rng;

pub const PERTURB_RELATION: &str = "perturb";

/// Lowers edge homophily to at most `target` by adding uniformly sampled,
/// previously absent cross-class pairs under the relation [`PERTURB_RELATION`].
/// Existing edges are never touched, so the homophilic edge count is constant.
pub fn perturb_to_homophily(
    g: &HeteroGraph,
    labels: &LabelSet,
    target: f64,
    seed: u64,
) -> Result<HeteroGraph> {
    if !(0.0..=1.0).contains(&target) {
        return Err(Error::Config(format!(
            "target homophily {target} outside [0, 1]"
        )));
    }
    let existing: HashSet<(usize, usize)> = g.merged_pairs().into_iter().collect();
    let (mut same, mut cross) = (0usize, 0usize);
    for &(u, v) in &existing {
        if let (Some(a), Some(b)) = (labels.get(u), labels.get(v)) {
            if a == b {
                same += 1;
            } else {
                cross += 1;
            }
        }
    }
    let total = same + cross;
    if total == 0 {
        return Err(Error::Graph(
            "cannot perturb a graph without labeled edges".into(),
        ));
    }
    let current = same as f64 / total as f64;
    if target > current + 1e-12 {
        return Err(Error::Unreachable {
            target,
            reason: format!(
                "current edge homophily is {current:.4}; adding heterophilic edges cannot raise it"
            ),
        });
    }
    let needed = required_cross_edges(same, cross, target).ok_or_else(|| Error::Unreachable {
        target,
        reason: "a graph with homophilic edges cannot reach homophily 0".into(),
    })?;
    if needed == 0 {
        return Ok(g.clone());
    }

    let labeled = labels.labeled_nodes();
    let counts = labels.class_counts();
    let n: usize = counts.iter().sum();
    let all_cross = (n * n - counts.iter().map(|c| c * c).sum::<usize>()) / 2;
    let available = all_cross - cross;
    if needed > available {
        return Err(Error::Unreachable {
            target,
            reason: format!("needs {needed} new cross-class pairs but only {available} exist"),
        });
    }

    let mut rng = seeded_rng(seed);
    let added: Vec<(usize, usize)> = if needed * 2 > available {
        let mut pool: Vec<(usize, usize)> = Vec::with_capacity(available);
        for (i, &u) in labeled.iter().enumerate() {
            for &v in &labeled[i + 1..] {
                if labels.get(u) != labels.get(v) && !existing.contains(&(u.min(v), u.max(v))) {
                    pool.push((u.min(v), u.max(v)));
                }
            }
        }
        let (chosen, _) = pool.partial_shuffle(&mut rng, needed);
        chosen.to_vec()
    } else {
        let mut chosen = HashSet::with_capacity(needed);
        let mut out = Vec::with_capacity(needed);
        while out.len() < needed {
            let u = labeled[rng.random_range(0..labeled.len())];
            let v = labeled[rng.random_range(0..labeled.len())];
            if labels.get(u) == labels.get(v) {
                continue;
            }
            let key = (u.min(v), u.max(v));
            if existing.contains(&key) || !chosen.insert(key) {
                continue;
            }
            out.push(key);
        }
        out
    };

    let mut result = g.clone();
    result.add_relation(PERTURB_RELATION, added)?;
    Ok(result)
}

/// Smallest `m` with `same / (same + cross + m) ≤ target`.
fn required_cross_edges(same: usize, cross: usize, target: f64) -> Option<usize> {
    if same == 0 {
        return Some(0);
    }
    if target <= 0.0 {
        return None;
    }
    let base = (same + cross) as f64;
    let mut m = ((same as f64 / target - base).ceil().max(0.0)) as usize;
    while m > 0 && same as f64 / (base + (m - 1) as f64) <= target {
        m -= 1;
    }
    while same as f64 / (base + m as f64) > target {
        m += 1;
    }
    Some(m)
}
