use serde::Serialize;

use super::config::TrainConfig;
use super::loss::{record_total_loss, GuidancePairs, LossBreakdown};
use super::metrics::{evaluate, MetricsReport};
use super::splits::SplitSet;
use crate::error::{Error, Result};
use crate::faat::{forward_pass, AttentionMode, AttentionTrace, Mode, ModelParams, PreparedInput};
use crate::features::FeatureSet;
use crate::graph::{HeteroGraph, LabelSet};
use crate::numcore::AdamConfig;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: LossBreakdown,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub test: MetricsReport,
    pub val: Option<MetricsReport>,
    /// Eval-mode trace of the restored parameters.
    pub trace: AttentionTrace,
    pub epochs_ran: usize,
    /// 1-based epoch whose parameters were restored.
    pub best_epoch: usize,
    pub history: Vec<EpochLog>,
}

/// Dropout seed for one epoch, derived from the run seed.
fn epoch_seed(seed: u64, epoch: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (epoch as u64).wrapping_add(1)
}

/// Loss and parameter gradients for one pass; the objective used by training
/// and by finite-difference checks.
pub fn loss_and_gradients(
    input: &PreparedInput,
    params: &ModelParams,
    labels: &[usize],
    train: &[usize],
    guidance: &GuidancePairs,
    cfg: &TrainConfig,
    mode: Mode,
) -> Result<(LossBreakdown, Vec<crate::numcore::Matrix>)> {
    let mut pass = forward_pass(input, params, mode)?;
    let (loss, breakdown) = record_total_loss(
        &mut pass,
        params,
        labels,
        train,
        guidance,
        cfg.lambda1,
        cfg.lambda2,
    )?;
    let grads = pass.tape.backward(loss)?;
    Ok((breakdown, grads.for_store(&params.store)))
}

/// Full-batch training with tanh attention.
pub fn train_model(
    g: &HeteroGraph,
    features: &FeatureSet,
    labels: &LabelSet,
    splits: &SplitSet,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    train_model_with(g, features, labels, splits, cfg, AttentionMode::Tanh)
}

/// Full-batch Adam on the total loss, early-stopping on validation accuracy
/// (ties broken by lower validation cross-entropy) and restoring the best
/// parameters.
pub fn train_model_with(
    g: &HeteroGraph,
    features: &FeatureSet,
    labels: &LabelSet,
    splits: &SplitSet,
    cfg: &TrainConfig,
    attention: AttentionMode,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if splits.train.is_empty() {
        return Err(Error::NoSupervisedNodes);
    }
    let relations = g.relation_names();
    let mut params = ModelParams::init(
        features.total_width(),
        &relations,
        &cfg.model_config(attention),
        cfg.seed,
    )?;
    let input = PreparedInput::new(g, features, &params)?;
    let dense = labels.dense();
    let guidance = GuidancePairs::build(&input.edges, labels, &splits.train);
    let monitor = if splits.val.is_empty() {
        log::warn!("empty validation split; early stopping monitors the training nodes");
        &splits.train
    } else {
        &splits.val
    };
    let adam = AdamConfig::with_lr(cfg.lr);

    let mut best = (f64::NEG_INFINITY, f64::INFINITY);
    let mut best_values = params.store.values_snapshot();
    let mut best_epoch = 0;
    let mut since_best = 0;
    let mut history = Vec::new();
    for epoch in 0..cfg.max_epochs {
        let mode = Mode::Train {
            seed: epoch_seed(cfg.seed, epoch),
        };
        let (loss, grads) = match loss_and_gradients(
            &input,
            &params,
            &dense,
            &splits.train,
            &guidance,
            cfg,
            mode,
        ) {
            Ok(r) => r,
            Err(Error::NonFinite(_)) => {
                return Err(Error::Diverged {
                    epoch: epoch + 1,
                    loss: f64::NAN,
                })
            }
            Err(e) => return Err(e),
        };
        if !loss.total.is_finite() {
            return Err(Error::Diverged {
                epoch: epoch + 1,
                loss: loss.total,
            });
        }
        params.store.zero_grad();
        for (id, grad) in params
            .store
            .ids()
            .collect::<Vec<_>>()
            .into_iter()
            .zip(&grads)
        {
            params.store.get_mut(id).accumulate(grad)?;
        }
        params.store.adam_step(&adam);

        let mut eval = forward_pass(&input, &params, Mode::Eval)?;
        let val_acc = evaluate(eval.logits_value(), labels, monitor)?.accuracy;
        let val_ce = {
            let ce = eval.tape.cross_entropy(eval.logits, &dense, monitor)?;
            eval.tape.value(ce).item()
        };
        history.push(EpochLog {
            epoch: epoch + 1,
            loss,
            val_accuracy: val_acc,
        });
        if val_acc > best.0 || (val_acc == best.0 && val_ce < best.1) {
            best = (val_acc, val_ce);
            best_values = params.store.values_snapshot();
            best_epoch = epoch + 1;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    params.store.restore_values(&best_values);

    let pass = forward_pass(&input, &params, Mode::Eval)?;
    let logits = pass.logits_value();
    let test = evaluate(logits, labels, &splits.test)?;
    let val = if splits.val.is_empty() {
        None
    } else {
        Some(evaluate(logits, labels, &splits.val)?)
    };
    let trace = pass.trace(&params.relations);
    Ok(TrainOutcome {
        params,
        test,
        val,
        trace,
        epochs_ran: history.len(),
        best_epoch,
        history,
    })
}
