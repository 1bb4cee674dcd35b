use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::LabelSet;
use crate::numcore::Matrix;

/// Binary confusion counts with bots as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn record(&mut self, truth: usize, pred: usize) {
        match (truth == LabelSet::BOT, pred == LabelSet::BOT) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub f1: f64,
    pub balanced_accuracy: f64,
    pub confusion: Confusion,
}

impl MetricsReport {
    /// F1 is 0 when there are no true positives; balanced accuracy averages
    /// the recalls of the classes actually present.
    pub fn from_confusion(c: Confusion) -> Result<Self> {
        if c.total() == 0 {
            return Err(Error::Config("cannot evaluate an empty node set".into()));
        }
        let accuracy = (c.tp + c.tn) as f64 / c.total() as f64;
        let f1 = if c.tp == 0 {
            0.0
        } else {
            2.0 * c.tp as f64 / (2 * c.tp + c.fp + c.fn_) as f64
        };
        let recalls: Vec<f64> = [(c.tp, c.fn_), (c.tn, c.fp)]
            .into_iter()
            .filter(|&(hit, miss)| hit + miss > 0)
            .map(|(hit, miss)| hit as f64 / (hit + miss) as f64)
            .collect();
        let balanced_accuracy = recalls.iter().sum::<f64>() / recalls.len() as f64;
        Ok(MetricsReport {
            accuracy,
            f1,
            balanced_accuracy,
            confusion: c,
        })
    }
}

/// Argmax predictions of `logits` scored on `nodes`.
pub fn evaluate(logits: &Matrix, labels: &LabelSet, nodes: &[usize]) -> Result<MetricsReport> {
    let pred = logits.argmax_rows();
    let mut c = Confusion::default();
    for &u in nodes {
        let truth = labels
            .get(u)
            .ok_or_else(|| Error::Config(format!("node {u} is unlabeled")))?;
        let p = *pred.get(u).ok_or(Error::Index {
            op: "evaluate",
            index: u,
            len: pred.len(),
        })?;
        c.record(truth, p);
    }
    MetricsReport::from_confusion(c)
}

/// Fraction of `nodes` whose argmax matches the label.
pub fn accuracy(logits: &Matrix, labels: &LabelSet, nodes: &[usize]) -> Result<f64> {
    Ok(evaluate(logits, labels, nodes)?.accuracy)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(tp: usize, fp: usize, fn_: usize, tn: usize) -> MetricsReport {
        MetricsReport::from_confusion(Confusion { tp, fp, fn_, tn }).unwrap()
    }

    #[test]
    fn hand_computed_fixture() {
        let r = report(3, 1, 1, 5);
        assert!((r.accuracy - 0.8).abs() < 1e-12);
        assert!((r.f1 - 0.75).abs() < 1e-12);
        assert!((r.balanced_accuracy - (0.75 + 5.0 / 6.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_and_all_bot() {
        let r = report(4, 0, 0, 6);
        assert_eq!((r.accuracy, r.f1, r.balanced_accuracy), (1.0, 1.0, 1.0));
        let r = report(5, 5, 0, 0);
        assert_eq!(r.accuracy, 0.5);
        assert_eq!(r.balanced_accuracy, 0.5);
        assert!((r.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn evaluate_counts_predictions() {
        let logits = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [0.0, 1.0], [2.0, 1.0]]);
        let labels = LabelSet::binary(&[0, 1, 0, 1]).unwrap();
        let r = evaluate(&logits, &labels, &[0, 1, 2, 3]).unwrap();
        assert_eq!(
            r.confusion,
            Confusion {
                tp: 1,
                fp: 1,
                fn_: 1,
                tn: 1
            }
        );
        assert!(evaluate(&logits, &labels, &[]).is_err());
    }
}
