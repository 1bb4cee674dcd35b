use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::{glorot_uniform, seeded_rng, Activation, Matrix, ParamId, ParamStore};

/// Node-level residual connection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResidualVariant {
    /// `x_l = σ(x_{l−1}·W_res + z_l)`
    Transform,
    /// `x_l = σ(ε·x_0 + (1−ε)·z_l)`
    Initial,
}

/// How raw edge coefficients are produced.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttentionMode {
    /// `tanh(gᵀ[q ∥ k])`, signed in [-1, 1].
    #[default]
    Tanh,
    /// `sigmoid(gᵀ[q ∥ k])`, low-pass only, in [0, 1].
    Sigmoid,
    /// Every coefficient fixed at 1.
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub hidden: usize,
    pub heads: usize,
    pub layers: usize,
    pub beta: f64,
    pub residual: ResidualVariant,
    pub epsilon: f64,
    pub dropout: f64,
    pub leaky_slope: f64,
    pub attention: AttentionMode,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            hidden: 128,
            heads: 4,
            layers: 2,
            beta: 0.1,
            residual: ResidualVariant::Initial,
            epsilon: 0.5,
            dropout: 0.4,
            leaky_slope: Activation::DEFAULT_SLOPE,
            attention: AttentionMode::Tanh,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(Error::Config("need at least one layer".into()));
        }
        if self.heads == 0 || self.hidden == 0 || !self.hidden.is_multiple_of(self.heads) {
            return Err(Error::Config(format!(
                "heads ({}) must divide hidden ({})",
                self.heads, self.hidden
            )));
        }
        for (name, v) in [
            ("beta", self.beta),
            ("epsilon", self.epsilon),
            ("dropout", self.dropout),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if self.dropout >= 1.0 {
            return Err(Error::Config("dropout must be below 1".into()));
        }
        Ok(())
    }

    pub fn head_width(&self) -> usize {
        self.hidden / self.heads
    }

    pub fn activation(&self) -> Activation {
        Activation::LeakyRelu(self.leaky_slope)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LayerResidual {
    Transform(ParamId),
    Initial(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaAtLayer {
    pub wq: Vec<ParamId>,
    pub wk: Vec<ParamId>,
    /// Column of length `2·D/K`: query half then key half.
    pub g: Vec<ParamId>,
    /// `wr[head][relation]`, each `D × D/K`.
    pub wr: Vec<Vec<ParamId>>,
    pub residual: LayerResidual,
}

/// Every trainable tensor of the detector plus the layout needed to use them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub store: ParamStore,
    pub config: ModelConfig,
    pub input_width: usize,
    pub relations: Vec<String>,
    pub fusion: ParamId,
    pub layers: Vec<FaAtLayer>,
    pub out_w: ParamId,
    pub out_b: ParamId,
}

impl ModelParams {
    /// Glorot-uniform weights (including `g`), zero output bias.
    pub fn init(
        input_width: usize,
        relations: &[String],
        config: &ModelConfig,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        if input_width == 0 {
            return Err(Error::Config("no input features".into()));
        }
        let mut rng = seeded_rng(seed);
        let mut store = ParamStore::new();
        let d = config.hidden;
        let h = config.head_width();
        let fusion = store.add("fusion.w0", glorot_uniform(input_width, d, &mut rng));
        let mut layers = Vec::with_capacity(config.layers);
        for l in 0..config.layers {
            let mut layer = FaAtLayer {
                wq: vec![],
                wk: vec![],
                g: vec![],
                wr: vec![],
                residual: LayerResidual::Initial(config.epsilon),
            };
            for k in 0..config.heads {
                let p = format!("layer{l}.head{k}");
                layer
                    .wq
                    .push(store.add(format!("{p}.wq"), glorot_uniform(d, h, &mut rng)));
                layer
                    .wk
                    .push(store.add(format!("{p}.wk"), glorot_uniform(d, h, &mut rng)));
                layer
                    .g
                    .push(store.add(format!("{p}.g"), glorot_uniform(2 * h, 1, &mut rng)));
                let per_rel = relations
                    .iter()
                    .map(|r| store.add(format!("{p}.rel.{r}"), glorot_uniform(d, h, &mut rng)))
                    .collect();
                layer.wr.push(per_rel);
            }
            if config.residual == ResidualVariant::Transform {
                layer.residual = LayerResidual::Transform(
                    store.add(format!("layer{l}.wres"), glorot_uniform(d, d, &mut rng)),
                );
            }
            layers.push(layer);
        }
        let out_w = store.add("out.wo", glorot_uniform(d, 2, &mut rng));
        let out_b = store.add("out.bo", Matrix::zeros(1, 2));
        Ok(ModelParams {
            store,
            config: config.clone(),
            input_width,
            relations: relations.to_vec(),
            fusion,
            layers,
            out_w,
            out_b,
        })
    }

    pub fn num_scalars(&self) -> usize {
        self.store.iter().map(|(_, _, p)| p.value.len()).sum()
    }

    pub fn relation_index(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|r| r == name)
    }
}
