use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::LabelSet;
use crate::numcore::seeded_rng;

/// Disjoint train/validation/test node sets, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSet {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

pub const DEFAULT_RATIOS: [f64; 3] = [0.1, 0.1, 0.8];

impl SplitSet {
    pub fn new(mut train: Vec<usize>, mut val: Vec<usize>, mut test: Vec<usize>) -> Result<Self> {
        train.sort_unstable();
        val.sort_unstable();
        test.sort_unstable();
        let mut all: Vec<usize> = train.iter().chain(&val).chain(&test).copied().collect();
        let n = all.len();
        all.sort_unstable();
        all.dedup();
        if all.len() != n {
            return Err(Error::Config("splits overlap".into()));
        }
        Ok(SplitSet { train, val, test })
    }

    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.val.len(), self.test.len())
    }
}

/// Class-stratified random split of the labeled nodes.
///
/// Within each class the validation and test counts are rounded down and
/// the remainder goes to training.
pub fn make_splits(labels: &LabelSet, ratios: [f64; 3], seed: u64) -> Result<SplitSet> {
    if ratios.iter().any(|&r| r < 0.0) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "split ratios {ratios:?} must be non-negative and sum to 1"
        )));
    }
    let mut by_class = vec![Vec::new(); labels.num_classes()];
    for u in labels.labeled_nodes() {
        by_class[labels.get(u).expect("labeled")].push(u);
    }
    if let Some(c) = by_class.iter().position(|v| v.is_empty()) {
        return Err(Error::Config(format!("class {c} has no labeled nodes")));
    }
    let mut rng = seeded_rng(seed);
    let (mut train, mut val, mut test) = (vec![], vec![], vec![]);
    for mut nodes in by_class {
        nodes.shuffle(&mut rng);
        let n = nodes.len() as f64;
        let n_val = (n * ratios[1] + 1e-9).floor() as usize;
        let n_test = (n * ratios[2] + 1e-9).floor() as usize;
        val.extend_from_slice(&nodes[..n_val]);
        test.extend_from_slice(&nodes[n_val..n_val + n_test]);
        train.extend_from_slice(&nodes[n_val + n_test..]);
    }
    SplitSet::new(train, val, test)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn balanced(n: usize) -> LabelSet {
        LabelSet::binary(&(0..n).map(|i| i % 2).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn exact_sizes_and_determinism() {
        let l = balanced(100);
        let s = make_splits(&l, DEFAULT_RATIOS, 3).unwrap();
        assert_eq!(s.sizes(), (10, 10, 80));
        assert_eq!(s, make_splits(&l, DEFAULT_RATIOS, 3).unwrap());
        assert_ne!(s, make_splits(&l, DEFAULT_RATIOS, 4).unwrap());
    }

    #[test]
    fn stratified_and_covering() {
        let l = balanced(64);
        let s = make_splits(&l, DEFAULT_RATIOS, 0).unwrap();
        for part in [&s.train, &s.val, &s.test] {
            let bots = part.iter().filter(|&&u| l.get(u) == Some(1)).count();
            assert!((2 * bots as i64 - part.len() as i64).abs() <= 2);
        }
        let mut all: Vec<usize> = [&s.train, &s.val, &s.test]
            .into_iter()
            .flatten()
            .copied()
            .collect();
        all.sort();
        assert_eq!(all, (0..64).collect::<Vec<_>>());
    }

    #[test]
    fn unlabeled_nodes_are_excluded() {
        let l = LabelSet::new(vec![Some(0), None, Some(1), Some(0), Some(1)], 2).unwrap();
        let s = make_splits(&l, [0.5, 0.5, 0.0], 1).unwrap();
        assert!(![&s.train, &s.val, &s.test].iter().any(|p| p.contains(&1)));
    }

    #[test]
    fn bad_ratios_and_missing_class() {
        assert!(make_splits(&balanced(10), [0.1, 0.1, 0.7], 0).is_err());
        let one = LabelSet::binary(&[0, 0, 0]).unwrap();
        assert!(make_splits(&one, DEFAULT_RATIOS, 0).is_err());
    }
}
