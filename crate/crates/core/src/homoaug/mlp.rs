use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::graph::LabelSet;
use crate::numcore::{
    glorot_uniform, seeded_rng, Activation, AdamConfig, Matrix, ParamId, ParamStore, Tape,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MlpConfig {
    pub hidden: usize,
    pub lr: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub leaky_slope: f64,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: 128,
            lr: 0.01,
            max_epochs: 200,
            patience: 20,
            leaky_slope: Activation::DEFAULT_SLOPE,
            seed: 0,
        }
    }
}

/// Two-layer bias-free classifier `softmax(σ(X·W1)·W2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    params: ParamStore,
    w1: ParamId,
    w2: ParamId,
    leaky_slope: f64,
    /// Set when training saw a single class; predictions then ignore the weights.
    constant_class: Option<usize>,
    pub epochs_ran: usize,
}

impl MlpModel {
    pub fn new(in_dim: usize, hidden: usize, classes: usize, leaky_slope: f64, seed: u64) -> Self {
        let mut rng = seeded_rng(seed);
        let mut params = ParamStore::new();
        let w1 = params.add("mlp.w1", glorot_uniform(in_dim, hidden, &mut rng));
        let w2 = params.add("mlp.w2", glorot_uniform(hidden, classes, &mut rng));
        MlpModel {
            params,
            w1,
            w2,
            leaky_slope,
            constant_class: None,
            epochs_ran: 0,
        }
    }

    pub fn w1(&self) -> &Matrix {
        self.params.value(self.w1)
    }

    pub fn w2(&self) -> &Matrix {
        self.params.value(self.w2)
    }

    pub fn set_w1(&mut self, w: Matrix) -> Result<()> {
        self.params.value(self.w1).same_shape(&w, "set_w1")?;
        self.params.get_mut(self.w1).value = w;
        Ok(())
    }

    pub fn hidden_width(&self) -> usize {
        self.w1().cols()
    }

    pub fn constant_class(&self) -> Option<usize> {
        self.constant_class
    }

    fn record(&self, tape: &mut Tape, x: &Matrix) -> Result<crate::numcore::Var> {
        let xv = tape.constant(x.clone());
        let w1 = tape.param(&self.params, self.w1);
        let w2 = tape.param(&self.params, self.w2);
        let pre = tape.matmul(xv, w1)?;
        let hidden = tape.act(pre, Activation::LeakyRelu(self.leaky_slope));
        tape.matmul(hidden, w2)
    }

    pub fn logits(&self, x: &Matrix) -> Result<Matrix> {
        let mut tape = Tape::new();
        let out = self.record(&mut tape, x)?;
        Ok(tape.value(out).clone())
    }

    pub fn predict(&self, features: &FeatureSet) -> Result<Vec<usize>> {
        if let Some(c) = self.constant_class {
            return Ok(vec![c; features.num_nodes()]);
        }
        Ok(self.logits(&features.fused()?)?.argmax_rows())
    }

    /// `h_u = x_u·W1` for every user: the pre-activation hidden layer, no bias.
    pub fn hidden_reps(&self, features: &FeatureSet) -> Result<Matrix> {
        features.fused()?.matmul(self.w1())
    }
}

/// Trains the MLP on `train` with Adam, early-stopping on `val` loss and
/// restoring the best weights. With an empty `val` the training loss is used.
pub fn train_mlp(
    features: &FeatureSet,
    labels: &LabelSet,
    train: &[usize],
    val: &[usize],
    cfg: &MlpConfig,
) -> Result<MlpModel> {
    if train.is_empty() {
        return Err(Error::NoSupervisedNodes);
    }
    let x = features.fused()?;
    let dense = labels.dense();
    for &i in train.iter().chain(val) {
        if labels.get(i).is_none() {
            return Err(Error::Config(format!("node {i} in a split is unlabeled")));
        }
    }
    let mut model = MlpModel::new(
        x.cols(),
        cfg.hidden.max(1),
        labels.num_classes(),
        cfg.leaky_slope,
        cfg.seed,
    );

    let first = dense[train[0]];
    if train.iter().all(|&i| dense[i] == first) {
        log::warn!("MLP training set contains only class {first}; using a constant classifier");
        model.constant_class = Some(first);
        return Ok(model);
    }

    let adam = AdamConfig::with_lr(cfg.lr);
    let monitor = if val.is_empty() { train } else { val };
    let mut best_loss = f64::INFINITY;
    let mut best = model.params.values_snapshot();
    let mut since_best = 0;
    for epoch in 0..cfg.max_epochs {
        let mut tape = Tape::new();
        let logits = model.record(&mut tape, &x)?;
        let loss = tape.cross_entropy(logits, &dense, train)?;
        let value = tape.value(loss).item();
        if !value.is_finite() {
            return Err(Error::Diverged { epoch, loss: value });
        }
        model.params.zero_grad();
        tape.backward(loss)?.accumulate_into(&mut model.params)?;
        model.params.adam_step(&adam);
        model.epochs_ran = epoch + 1;

        let mut eval = Tape::new();
        let logits = model.record(&mut eval, &x)?;
        let monitored = eval.cross_entropy(logits, &dense, monitor)?;
        let m = eval.value(monitored).item();
        if m < best_loss {
            best_loss = m;
            best = model.params.values_snapshot();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    model.params.restore_values(&best);
    Ok(model)
}
