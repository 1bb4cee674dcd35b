use std::rc::Rc;

use super::edges::EdgeIndex;
use super::params::{AttentionMode, LayerResidual, ModelParams};
use super::trace::AttentionTrace;
use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::graph::HeteroGraph;
use crate::numcore::{dropout_mask, seeded_rng, Activation, Matrix, Tape, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Eval,
    /// Dropout active, masks drawn from this seed.
    Train {
        seed: u64,
    },
}

/// Graph and features resolved once and reused across epochs.
#[derive(Debug, Clone)]
pub struct PreparedInput {
    pub edges: Rc<EdgeIndex>,
    pub x_in: Matrix,
}

impl PreparedInput {
    pub fn new(g: &HeteroGraph, features: &FeatureSet, params: &ModelParams) -> Result<Self> {
        if g.num_nodes() == 0 {
            return Err(Error::Graph("empty graph".into()));
        }
        if features.num_nodes() != g.num_nodes() {
            return Err(Error::Shape {
                op: "forward",
                left: (g.num_nodes(), 0),
                right: (features.num_nodes(), features.total_width()),
            });
        }
        let x_in = features.fused()?;
        if x_in.cols() != params.input_width {
            return Err(Error::Shape {
                op: "fusion input",
                left: x_in.shape(),
                right: (params.input_width, params.config.hidden),
            });
        }
        let edges = EdgeIndex::build(g, &params.relations)?;
        Ok(PreparedInput {
            edges: Rc::new(edges),
            x_in,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.x_in.rows()
    }
}

/// A recorded forward pass; losses are appended to `tape` by the trainer.
#[derive(Debug)]
pub struct ForwardPass {
    pub tape: Tape,
    pub logits: Var,
    /// `alphas[layer][head]`: coefficient column over directed slots.
    pub alphas: Vec<Vec<Var>>,
    /// Mean of all `alphas` per slot.
    pub alpha_bar: Var,
    pub edges: Rc<EdgeIndex>,
}

impl ForwardPass {
    pub fn logits_value(&self) -> &Matrix {
        self.tape.value(self.logits)
    }

    pub fn trace(&self, relations: &[String]) -> AttentionTrace {
        let alpha = self
            .alphas
            .iter()
            .map(|heads| {
                heads
                    .iter()
                    .map(|&v| self.tape.value(v).data().to_vec())
                    .collect()
            })
            .collect();
        AttentionTrace::new(
            self.edges.clone(),
            relations.to_vec(),
            alpha,
            self.tape.value(self.alpha_bar).data().to_vec(),
        )
    }
}

/// Fusion, `L` attention layers and the linear head, recorded on a fresh tape.
pub fn forward_pass(
    input: &PreparedInput,
    params: &ModelParams,
    mode: Mode,
) -> Result<ForwardPass> {
    let cfg = &params.config;
    let store = &params.store;
    let act = cfg.activation();
    let n = input.num_nodes();
    let edges = &input.edges;
    let e = edges.num_slots();
    let h = cfg.head_width();
    let mut rng = match mode {
        Mode::Train { seed } if cfg.dropout > 0.0 => Some(seeded_rng(seed)),
        _ => None,
    };

    let mut tape = Tape::new();
    let x_in = tape.constant(input.x_in.clone());
    let w0 = tape.param(store, params.fusion);
    let fused = tape.matmul(x_in, w0)?;
    let mut x0 = tape.act(fused, act);
    if let Some(rng) = rng.as_mut() {
        x0 = tape.mul_const(x0, dropout_mask(n, cfg.hidden, cfg.dropout, rng))?;
    }

    let norm = Matrix::column(&edges.norm);
    let ones = tape.constant(Matrix::filled(e, 1, 1.0));
    let mut x = x0;
    let mut alphas: Vec<Vec<Var>> = Vec::with_capacity(params.layers.len());
    for (l, layer) in params.layers.iter().enumerate() {
        let mut head_out = Vec::with_capacity(cfg.heads);
        let mut layer_alphas = Vec::with_capacity(cfg.heads);
        for k in 0..cfg.heads {
            let raw = match cfg.attention {
                AttentionMode::Constant => ones,
                AttentionMode::Tanh | AttentionMode::Sigmoid => {
                    let wq = tape.param(store, layer.wq[k]);
                    let wk = tape.param(store, layer.wk[k]);
                    let g = tape.param(store, layer.g[k]);
                    let q = tape.matmul(x, wq)?;
                    let q = tape.act(q, act);
                    let key = tape.matmul(x, wk)?;
                    let key = tape.act(key, act);
                    let gq = tape.slice_rows(g, 0, h)?;
                    let gk = tape.slice_rows(g, h, 2 * h)?;
                    let sq = tape.matmul(q, gq)?;
                    let sk = tape.matmul(key, gk)?;
                    let sq_e = tape.gather_rows(sq, edges.dst.clone())?;
                    let sk_e = tape.gather_rows(sk, edges.src.clone())?;
                    let score = tape.add(sq_e, sk_e)?;
                    let squash = if cfg.attention == AttentionMode::Tanh {
                        Activation::Tanh
                    } else {
                        Activation::Sigmoid
                    };
                    tape.act(score, squash)
                }
            };
            let alpha = match alphas.last() {
                Some(prev) if cfg.beta > 0.0 => {
                    let fresh = tape.scale(raw, 1.0 - cfg.beta);
                    let carried = tape.scale(prev[k], cfg.beta);
                    tape.add(fresh, carried)?
                }
                _ => raw,
            };
            layer_alphas.push(alpha);

            let projected: Vec<Var> = layer.wr[k]
                .iter()
                .map(|&id| {
                    let w = tape.param(store, id);
                    tape.matmul(x, w)
                })
                .collect::<Result<_>>()?;
            let stacked = tape.concat_rows(&projected)?;
            let messages = tape.gather_rows(stacked, edges.stacked_src.clone())?;
            let coef = tape.mul_const(alpha, norm.clone())?;
            let weighted = tape.scale_rows(messages, coef)?;
            head_out.push(tape.scatter_add_rows(weighted, edges.dst.clone(), n)?);
        }
        let z = tape.concat_cols(&head_out)?;
        debug_assert_eq!(tape.shape(z), (n, h * cfg.heads));

        let pre = match layer.residual {
            LayerResidual::Transform(id) => {
                let w = tape.param(store, id);
                let carried = tape.matmul(x, w)?;
                tape.add(carried, z)?
            }
            LayerResidual::Initial(eps) => {
                let a = tape.scale(x0, eps);
                let b = tape.scale(z, 1.0 - eps);
                tape.add(a, b)?
            }
        };
        let mut next = tape.act(pre, act);
        if let Some(rng) = rng.as_mut() {
            next = tape.mul_const(next, dropout_mask(n, cfg.hidden, cfg.dropout, rng))?;
        }
        if !tape.value(next).is_finite() {
            return Err(Error::NonFinite(format!(
                "representation after layer {}",
                l + 1
            )));
        }
        x = next;
        alphas.push(layer_alphas);
    }

    let wo = tape.param(store, params.out_w);
    let bo = tape.param(store, params.out_b);
    let out = tape.matmul(x, wo)?;
    let logits = tape.add_row(out, bo)?;

    let all: Vec<Var> = alphas.iter().flatten().copied().collect();
    let mut total = all[0];
    for &a in &all[1..] {
        total = tape.add(total, a)?;
    }
    let alpha_bar = tape.scale(total, 1.0 / all.len() as f64);

    Ok(ForwardPass {
        tape,
        logits,
        alphas,
        alpha_bar,
        edges: input.edges.clone(),
    })
}

/// Logits (N×2) and the attention trace for one pass.
pub fn forward(
    g: &HeteroGraph,
    features: &FeatureSet,
    params: &ModelParams,
    mode: Mode,
) -> Result<(Matrix, AttentionTrace)> {
    let input = PreparedInput::new(g, features, params)?;
    let pass = forward_pass(&input, params, mode)?;
    let trace = pass.trace(&params.relations);
    Ok((pass.logits_value().clone(), trace))
}
