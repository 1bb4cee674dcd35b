use std::rc::Rc;

use serde::Serialize;

use super::edges::EdgeIndex;
use crate::graph::LabelSet;

/// Recorded coefficients for every directed slot of every relation.
#[derive(Debug, Clone, Serialize)]
pub struct AttentionTrace {
    pub relations: Vec<String>,
    pub src: Vec<usize>,
    pub dst: Vec<usize>,
    pub rel: Vec<usize>,
    /// `alpha[layer][head][slot]`
    pub alpha: Vec<Vec<Vec<f64>>>,
    pub alpha_bar: Vec<f64>,
    #[serde(skip)]
    edges: Option<Rc<EdgeIndex>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Homophilic,
    Heterophilic,
    Unknown,
}

impl EdgeKind {
    pub fn of(labels: &LabelSet, u: usize, v: usize) -> Self {
        match (labels.get(u), labels.get(v)) {
            (Some(a), Some(b)) if a == b => EdgeKind::Homophilic,
            (Some(_), Some(_)) => EdgeKind::Heterophilic,
            _ => EdgeKind::Unknown,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EdgeKind::Homophilic => "homophilic",
            EdgeKind::Heterophilic => "heterophilic",
            EdgeKind::Unknown => "unknown",
        }
    }
}

impl AttentionTrace {
    pub(crate) fn new(
        edges: Rc<EdgeIndex>,
        relations: Vec<String>,
        alpha: Vec<Vec<Vec<f64>>>,
        alpha_bar: Vec<f64>,
    ) -> Self {
        AttentionTrace {
            relations,
            src: edges.src.to_vec(),
            dst: edges.dst.to_vec(),
            rel: edges.rel.clone(),
            alpha,
            alpha_bar,
            edges: Some(edges),
        }
    }

    pub fn num_slots(&self) -> usize {
        self.alpha_bar.len()
    }

    pub fn edge_index(&self) -> Option<&EdgeIndex> {
        self.edges.as_deref()
    }

    pub fn relation_of(&self, slot: usize) -> &str {
        &self.relations[self.rel[slot]]
    }

    pub fn all_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.alpha
            .iter()
            .flatten()
            .flatten()
            .copied()
            .chain(self.alpha_bar.iter().copied())
    }

    /// Smallest and largest recorded value over `alpha` and `alpha_bar`.
    pub fn range(&self) -> Option<(f64, f64)> {
        self.all_values().fold(None, |acc, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
    }

    /// `(u, v, relation, mean ᾱ of both directions)` per undirected pair.
    pub fn pair_means(&self) -> Vec<(usize, usize, usize, f64)> {
        match &self.edges {
            Some(edges) => edges
                .pairs
                .iter()
                .map(|p| {
                    let m = 0.5 * (self.alpha_bar[p.slots[0]] + self.alpha_bar[p.slots[1]]);
                    (p.u, p.v, p.relation, m)
                })
                .collect(),
            None => Vec::new(),
        }
    }

    /// Mean ᾱ and share of negative ᾱ over homophilic and heterophilic slots.
    pub fn sign_summary(&self, labels: &LabelSet) -> SignSummary {
        let mut acc = [(0.0, 0usize, 0usize); 2];
        for e in 0..self.num_slots() {
            let i = match EdgeKind::of(labels, self.src[e], self.dst[e]) {
                EdgeKind::Homophilic => 0,
                EdgeKind::Heterophilic => 1,
                EdgeKind::Unknown => continue,
            };
            acc[i].0 += self.alpha_bar[e];
            acc[i].1 += 1;
            if self.alpha_bar[e] < 0.0 {
                acc[i].2 += 1;
            }
        }
        let stat = |(sum, n, neg): (f64, usize, usize)| {
            if n == 0 {
                (f64::NAN, f64::NAN)
            } else {
                (sum / n as f64, neg as f64 / n as f64)
            }
        };
        let (homo_mean, homo_negative) = stat(acc[0]);
        let (hetero_mean, hetero_negative) = stat(acc[1]);
        SignSummary {
            homophilic_slots: acc[0].1,
            heterophilic_slots: acc[1].1,
            homo_mean,
            hetero_mean,
            homo_negative,
            hetero_negative,
        }
    }

    /// CSV rows `src,dst,relation,alpha_bar,edge_kind`, one per directed slot.
    pub fn write_csv<W: std::io::Write>(&self, labels: &LabelSet, out: W) -> crate::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["src", "dst", "relation", "alpha_bar", "edge_kind"])?;
        for e in 0..self.num_slots() {
            w.write_record([
                self.src[e].to_string(),
                self.dst[e].to_string(),
                self.relation_of(e).to_string(),
                format!("{:.17e}", self.alpha_bar[e]),
                EdgeKind::of(labels, self.src[e], self.dst[e])
                    .name()
                    .to_string(),
            ])?;
        }
        w.flush()
            .map_err(|e| crate::Error::io("attention csv", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignSummary {
    pub homophilic_slots: usize,
    pub heterophilic_slots: usize,
    pub homo_mean: f64,
    pub hetero_mean: f64,
    pub homo_negative: f64,
    pub hetero_negative: f64,
}
