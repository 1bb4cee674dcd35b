use std::rc::Rc;

use crate::error::{Error, Result};
use crate::graph::HeteroGraph;

/// One undirected pair of one relation and its two directed slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairSlots {
    /// Index into the model's relation list.
    pub relation: usize,
    pub u: usize,
    pub v: usize,
    /// Slot where `u` receives from `v`, then the reverse.
    pub slots: [usize; 2],
}

/// Directed message slots for every edge of every relation.
///
/// Slot `e` carries a message from `src[e]` into `dst[e]` under relation
/// `rel[e]`. Slots are ordered by `(dst, src, rel)`, so per-node sums do not
/// depend on the order relations appear in the graph.
#[derive(Debug, Clone)]
pub struct EdgeIndex {
    pub num_nodes: usize,
    pub num_relations: usize,
    pub src: Rc<[usize]>,
    pub dst: Rc<[usize]>,
    pub rel: Vec<usize>,
    /// `1/√(d_ur·d_vr)` with degrees taken within the slot's relation.
    pub norm: Vec<f64>,
    /// `src + rel·N`, addressing a relation-stacked node matrix.
    pub stacked_src: Rc<[usize]>,
    /// Pairs in graph order (relation by relation, insertion order within).
    pub pairs: Vec<PairSlots>,
}

impl EdgeIndex {
    /// `relations` names the model's relations; every graph relation must be among them.
    pub fn build(g: &HeteroGraph, relations: &[String]) -> Result<Self> {
        let n = g.num_nodes();
        let mut raw: Vec<(usize, usize, usize, f64)> = Vec::with_capacity(2 * g.num_edges());
        let mut pairs = Vec::with_capacity(g.num_edges());
        for relation in g.relations() {
            let ri = relations
                .iter()
                .position(|r| r == relation.name())
                .ok_or_else(|| {
                    Error::Graph(format!(
                        "relation `{}` has no parameters (model knows {:?})",
                        relation.name(),
                        relations
                    ))
                })?;
            for &(u, v) in relation.pairs() {
                let norm = 1.0 / ((relation.degree(u) * relation.degree(v)) as f64).sqrt();
                pairs.push(PairSlots {
                    relation: ri,
                    u,
                    v,
                    slots: [raw.len(), raw.len() + 1],
                });
                raw.push((u, v, ri, norm));
                raw.push((v, u, ri, norm));
            }
        }

        let mut order: Vec<usize> = (0..raw.len()).collect();
        order.sort_by_key(|&i| (raw[i].0, raw[i].1, raw[i].2));
        let mut position = vec![0; raw.len()];
        for (new, &old) in order.iter().enumerate() {
            position[old] = new;
        }
        for p in &mut pairs {
            p.slots = [position[p.slots[0]], position[p.slots[1]]];
        }

        let dst: Vec<usize> = order.iter().map(|&i| raw[i].0).collect();
        let src: Vec<usize> = order.iter().map(|&i| raw[i].1).collect();
        let rel: Vec<usize> = order.iter().map(|&i| raw[i].2).collect();
        let norm: Vec<f64> = order.iter().map(|&i| raw[i].3).collect();
        let stacked_src: Vec<usize> = src.iter().zip(&rel).map(|(&s, &r)| s + r * n).collect();
        Ok(EdgeIndex {
            num_nodes: n,
            num_relations: relations.len(),
            src: src.into(),
            dst: dst.into(),
            rel,
            norm,
            stacked_src: stacked_src.into(),
            pairs,
        })
    }

    pub fn num_slots(&self) -> usize {
        self.src.len()
    }
}
