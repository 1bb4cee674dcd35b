use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use crate::error::{Error, Result};
use crate::faat::{ModelConfig, ModelParams};
use crate::numcore::Matrix;

pub const CHECKPOINT_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    /// Row-major values.
    pub data: Vec<f64>,
}

/// JSON parameter dump: model layout, a named tensor list with shapes, and
/// the relation injected during augmentation so the graph can be rebuilt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub schema_version: u32,
    pub train_config: TrainConfig,
    pub model_config: ModelConfig,
    pub input_width: usize,
    pub relations: Vec<String>,
    pub tensors: Vec<TensorEntry>,
    pub injected_relation: Option<String>,
    pub injected_pairs: Vec<(usize, usize)>,
}

impl Checkpoint {
    pub fn new(
        params: &ModelParams,
        train_config: &TrainConfig,
        injected: Option<&(String, Vec<(usize, usize)>)>,
    ) -> Self {
        let tensors = params
            .store
            .iter()
            .map(|(_, name, p)| TensorEntry {
                name: name.to_string(),
                rows: p.value.rows(),
                cols: p.value.cols(),
                data: p.value.data().to_vec(),
            })
            .collect();
        Checkpoint {
            schema_version: CHECKPOINT_SCHEMA,
            train_config: train_config.clone(),
            model_config: params.config.clone(),
            input_width: params.input_width,
            relations: params.relations.clone(),
            tensors,
            injected_relation: injected.map(|(n, _)| n.clone()),
            injected_pairs: injected.map(|(_, p)| p.clone()).unwrap_or_default(),
        }
    }

    /// Rebuilds the parameters, checking every tensor name and shape.
    pub fn to_params(&self) -> Result<ModelParams> {
        if self.schema_version != CHECKPOINT_SCHEMA {
            return Err(Error::Config(format!(
                "checkpoint schema {} (expected {CHECKPOINT_SCHEMA})",
                self.schema_version
            )));
        }
        let mut params =
            ModelParams::init(self.input_width, &self.relations, &self.model_config, 0)?;
        if params.store.len() != self.tensors.len() {
            return Err(Error::Config(format!(
                "checkpoint has {} tensors, model layout needs {}",
                self.tensors.len(),
                params.store.len()
            )));
        }
        for t in &self.tensors {
            let id = params
                .store
                .find(&t.name)
                .ok_or_else(|| Error::Config(format!("unexpected tensor `{}`", t.name)))?;
            let m = Matrix::from_vec(t.rows, t.cols, t.data.clone())?;
            params.store.value(id).same_shape(&m, "checkpoint tensor")?;
            params.store.get_mut(id).value = m;
        }
        Ok(params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_exact() {
        let cfg = TrainConfig {
            hidden: 8,
            heads: 2,
            ..Default::default()
        };
        let rel = vec!["follower".to_string(), "knn".to_string()];
        let p = ModelParams::init(5, &rel, &cfg.model_config(Default::default()), 3).unwrap();
        let injected = ("knn".to_string(), vec![(0, 1), (2, 4)]);
        let ck = Checkpoint::new(&p, &cfg, Some(&injected));
        let json = serde_json::to_string(&ck).unwrap();
        let back: Checkpoint = serde_json::from_str(&json).unwrap();
        assert_eq!(back, ck);
        let q = back.to_params().unwrap();
        assert_eq!(q.store.values_snapshot(), p.store.values_snapshot());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let cfg = TrainConfig {
            hidden: 4,
            heads: 2,
            ..Default::default()
        };
        let p =
            ModelParams::init(3, &["r".into()], &cfg.model_config(Default::default()), 0).unwrap();
        let mut ck = Checkpoint::new(&p, &cfg, None);
        ck.tensors[0].rows += 1;
        ck.tensors[0].data.extend([0.0; 4]);
        assert!(ck.to_params().is_err());
    }
}
