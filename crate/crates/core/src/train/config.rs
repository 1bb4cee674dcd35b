use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::faat::{AttentionMode, ModelConfig, ResidualVariant};
use crate::numcore::Activation;

/// Hyperparameters of the detector and its training loop.
///
/// Defaults: lr 5e-4, λ₁ 0.01, λ₂ 0.2, β 0.1, dropout 0.4, 4 heads,
/// hidden 128, 2 layers, k = 1, initial-feature residual with ε = 0.5,
/// at most 500 epochs with patience 30 on validation accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub lr: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub beta: f64,
    pub dropout: f64,
    pub heads: usize,
    pub hidden: usize,
    pub layers: usize,
    pub k: usize,
    pub residual: ResidualVariant,
    pub epsilon: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub leaky_slope: f64,
    /// Hidden width of the augmentation MLP; `hidden` when unset.
    pub mlp_hidden: Option<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 5e-4,
            lambda1: 0.01,
            lambda2: 0.2,
            beta: 0.1,
            dropout: 0.4,
            heads: 4,
            hidden: 128,
            layers: 2,
            k: 1,
            residual: ResidualVariant::Initial,
            epsilon: 0.5,
            max_epochs: 500,
            patience: 30,
            leaky_slope: Activation::DEFAULT_SLOPE,
            mlp_hidden: None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("lr = {} must be positive", self.lr)));
        }
        if self.lambda1 < 0.0 || self.lambda2 < 0.0 {
            return Err(Error::Config(
                "lambda1 and lambda2 must be non-negative".into(),
            ));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        self.model_config(AttentionMode::Tanh).validate()
    }

    pub fn model_config(&self, attention: AttentionMode) -> ModelConfig {
        ModelConfig {
            hidden: self.hidden,
            heads: self.heads,
            layers: self.layers,
            beta: self.beta,
            residual: self.residual,
            epsilon: self.epsilon,
            dropout: self.dropout,
            leaky_slope: self.leaky_slope,
            attention,
        }
    }

    pub fn mlp_config(&self) -> crate::homoaug::MlpConfig {
        crate::homoaug::MlpConfig {
            hidden: self.mlp_hidden.unwrap_or(self.hidden),
            leaky_slope: self.leaky_slope,
            seed: self.seed,
            ..Default::default()
        }
    }
}
