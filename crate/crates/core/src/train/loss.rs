use std::collections::BTreeMap;
use std::rc::Rc;

use serde::Serialize;

use crate::error::Result;
use crate::faat::{AttentionTrace, EdgeIndex, ForwardPass, ModelParams};
use crate::graph::LabelSet;
use crate::numcore::{Matrix, Tape, Var};

/// Training pairs for the guidance loss and the slots feeding each of them.
///
/// A pair joined under several relations averages every slot of every
/// relation, in both directions.
#[derive(Debug, Clone)]
pub struct GuidancePairs {
    pub pairs: Vec<(usize, usize)>,
    pub targets: Vec<f64>,
    slots: Rc<[usize]>,
    owner: Rc<[usize]>,
    weights: Matrix,
}

fn group_slots(
    src: &[usize],
    dst: &[usize],
    labels: &LabelSet,
    train: &[usize],
) -> BTreeMap<(usize, usize), Vec<usize>> {
    let mut in_train = vec![false; labels.len()];
    for &u in train {
        if labels.get(u).is_some() {
            in_train[u] = true;
        }
    }
    let mut groups: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (e, (&s, &d)) in src.iter().zip(dst).enumerate() {
        if in_train[s] && in_train[d] {
            groups.entry((s.min(d), s.max(d))).or_default().push(e);
        }
    }
    groups
}

fn target(labels: &LabelSet, u: usize, v: usize) -> f64 {
    if labels.get(u) == labels.get(v) {
        1.0
    } else {
        -1.0
    }
}

impl GuidancePairs {
    pub fn build(edges: &EdgeIndex, labels: &LabelSet, train: &[usize]) -> Self {
        let groups = group_slots(&edges.src, &edges.dst, labels, train);
        if groups.is_empty() {
            log::warn!("no edge joins two training nodes; guidance loss is 0");
        }
        let mut pairs = Vec::with_capacity(groups.len());
        let mut targets = Vec::with_capacity(groups.len());
        let (mut slots, mut owner, mut weights) = (vec![], vec![], vec![]);
        for (i, (&(u, v), members)) in groups.iter().enumerate() {
            pairs.push((u, v));
            targets.push(target(labels, u, v));
            for &e in members {
                slots.push(e);
                owner.push(i);
                weights.push(1.0 / members.len() as f64);
            }
        }
        let n = weights.len();
        GuidancePairs {
            pairs,
            targets,
            slots: slots.into(),
            owner: owner.into(),
            weights: Matrix::from_vec(n, 1, weights).expect("column"),
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Records `L_e` on `tape` from the per-slot mean coefficient column.
    pub fn record(&self, tape: &mut Tape, alpha_bar: Var) -> Result<Var> {
        if self.is_empty() {
            let empty = tape.constant(Matrix::zeros(0, 1));
            return tape.hinge_mean(empty, vec![]);
        }
        let picked = tape.gather_rows(alpha_bar, self.slots.clone())?;
        let weighted = tape.mul_const(picked, self.weights.clone())?;
        let per_pair = tape.scatter_add_rows(weighted, self.owner.clone(), self.len())?;
        tape.hinge_mean(per_pair, self.targets.clone())
    }
}

/// `L_e = mean over training pairs of max(0, 1 − ᾱ_uv·y_uv)` from a recorded trace.
pub fn weight_guidance_loss(trace: &AttentionTrace, labels: &LabelSet, train: &[usize]) -> f64 {
    let groups = group_slots(&trace.src, &trace.dst, labels, train);
    if groups.is_empty() {
        log::warn!("no edge joins two training nodes; guidance loss is 0");
        return 0.0;
    }
    let total: f64 = groups
        .iter()
        .map(|(&(u, v), members)| {
            let mean =
                members.iter().map(|&e| trace.alpha_bar[e]).sum::<f64>() / members.len() as f64;
            (1.0 - mean * target(labels, u, v)).max(0.0)
        })
        .sum();
    total / groups.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossBreakdown {
    pub cross_entropy: f64,
    pub l2: f64,
    pub guidance: f64,
    pub total: f64,
}

/// Appends `CE + λ₁·Σθ² + λ₂·L_e` to the pass's tape.
///
/// The L2 term covers every parameter in the store, used by the pass or not.
pub fn record_total_loss(
    pass: &mut ForwardPass,
    params: &ModelParams,
    dense_labels: &[usize],
    train: &[usize],
    guidance: &GuidancePairs,
    lambda1: f64,
    lambda2: f64,
) -> Result<(Var, LossBreakdown)> {
    let tape = &mut pass.tape;
    let ce = tape.cross_entropy(pass.logits, dense_labels, train)?;
    let mut total = ce;
    let mut l2 = 0.0;
    if lambda1 > 0.0 {
        let squares: Vec<Var> = params
            .store
            .ids()
            .map(|id| {
                let v = tape.param(&params.store, id);
                tape.sum_squares(v)
            })
            .collect();
        let mut acc = squares[0];
        for &s in &squares[1..] {
            acc = tape.add(acc, s)?;
        }
        l2 = tape.value(acc).item();
        let scaled = tape.scale(acc, lambda1);
        total = tape.add(total, scaled)?;
    }
    let mut guide = 0.0;
    if lambda2 > 0.0 {
        let le = guidance.record(tape, pass.alpha_bar)?;
        guide = tape.value(le).item();
        let scaled = tape.scale(le, lambda2);
        total = tape.add(total, scaled)?;
    }
    let breakdown = LossBreakdown {
        cross_entropy: tape.value(ce).item(),
        l2,
        guidance: guide,
        total: tape.value(total).item(),
    };
    Ok((total, breakdown))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::faat::{forward_pass, Mode, ModelConfig, PreparedInput};
    use crate::features::FeatureSet;
    use crate::graph::HeteroGraph;
    use crate::numcore::seeded_rng;
    use rand::Rng;

    fn fixture(seed: u64) -> (HeteroGraph, FeatureSet, LabelSet, ModelParams) {
        let mut rng = seeded_rng(seed);
        let n = 10;
        let mut g = HeteroGraph::new(n);
        for r in ["a", "b"] {
            let pairs: Vec<_> = (0..n)
                .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
                .filter(|_| rng.random::<f64>() < 0.35)
                .collect();
            g.add_relation(r, pairs).unwrap();
        }
        let data = (0..n * 3).map(|_| rng.random::<f64>() - 0.5).collect();
        let fs = FeatureSet::single(Matrix::from_vec(n, 3, data).unwrap());
        let labels =
            LabelSet::binary(&(0..n).map(|_| rng.random_range(0..2)).collect::<Vec<_>>()).unwrap();
        let cfg = ModelConfig {
            hidden: 4,
            heads: 2,
            dropout: 0.0,
            ..Default::default()
        };
        let p = ModelParams::init(3, &g.relation_names(), &cfg, seed).unwrap();
        (g, fs, labels, p)
    }

    fn trace_with(alpha_bar: Vec<f64>, src: Vec<usize>, dst: Vec<usize>) -> AttentionTrace {
        let mut g = HeteroGraph::new(2);
        g.add_relation("r", [(0, 1)]).unwrap();
        let fs = FeatureSet::single(Matrix::zeros(2, 1));
        let cfg = ModelConfig {
            hidden: 2,
            heads: 1,
            ..Default::default()
        };
        let p = ModelParams::init(1, &["r".into()], &cfg, 0).unwrap();
        let (_, mut t) = crate::faat::forward(&g, &fs, &p, Mode::Eval).unwrap();
        t.alpha_bar = alpha_bar;
        t.src = src;
        t.dst = dst;
        t
    }

    #[test]
    fn hinge_hand_values() {
        let same = LabelSet::binary(&[1, 1]).unwrap();
        let t = trace_with(vec![1.0, 1.0], vec![0, 1], vec![1, 0]);
        assert_eq!(weight_guidance_loss(&t, &same, &[0, 1]), 0.0);
        let t = trace_with(vec![-1.0, -1.0], vec![0, 1], vec![1, 0]);
        assert_eq!(weight_guidance_loss(&t, &same, &[0, 1]), 2.0);
        let diff = LabelSet::binary(&[0, 1]).unwrap();
        let t = trace_with(vec![0.0, 0.0], vec![0, 1], vec![1, 0]);
        assert_eq!(weight_guidance_loss(&t, &diff, &[0, 1]), 1.0);
        // both directions are averaged before the hinge
        let t = trace_with(vec![1.0, -0.5], vec![0, 1], vec![1, 0]);
        assert!((weight_guidance_loss(&t, &same, &[0, 1]) - 0.75).abs() < 1e-15);
        // pair outside the training set contributes nothing
        assert_eq!(weight_guidance_loss(&t, &same, &[0]), 0.0);
    }

    #[test]
    fn tape_and_trace_versions_agree() {
        for seed in 0..5 {
            let (g, fs, labels, p) = fixture(seed);
            let input = PreparedInput::new(&g, &fs, &p).unwrap();
            let mut pass = forward_pass(&input, &p, Mode::Eval).unwrap();
            let train: Vec<usize> = (0..7).collect();
            let guide = GuidancePairs::build(&input.edges, &labels, &train);
            let le = guide.record(&mut pass.tape, pass.alpha_bar).unwrap();
            let trace = pass.trace(&p.relations);
            let direct = weight_guidance_loss(&trace, &labels, &train);
            assert!((pass.tape.value(le).item() - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn l2_hand_value() {
        let (g, fs, labels, mut p) = fixture(9);
        for id in p.store.ids().collect::<Vec<_>>() {
            p.store.get_mut(id).value.fill(0.0);
        }
        p.store.get_mut(p.out_b).value = Matrix::from_rows(&[[2.0, 0.0]]);
        let input = PreparedInput::new(&g, &fs, &p).unwrap();
        let guide = GuidancePairs::build(&input.edges, &labels, &[0, 1, 2]);
        let dense = labels.dense();
        let mut pass = forward_pass(&input, &p, Mode::Eval).unwrap();
        let (_, b) =
            record_total_loss(&mut pass, &p, &dense, &[0, 1, 2], &guide, 0.01, 0.0).unwrap();
        assert!((b.total - b.cross_entropy - 0.04).abs() < 1e-15);
        let mut pass = forward_pass(&input, &p, Mode::Eval).unwrap();
        let (_, b0) =
            record_total_loss(&mut pass, &p, &dense, &[0, 1, 2], &guide, 0.0, 0.0).unwrap();
        assert_eq!(b0.total, b0.cross_entropy);
    }
}
