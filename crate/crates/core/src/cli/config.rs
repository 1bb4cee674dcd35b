use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::Benchmark;
use crate::graph::SynthConfig;
use crate::train::{AblationVariant, TrainConfig};

/// The JSON document accepted by `--config`.
///
/// Every key is optional. Defaults are the desk benchmark: `train` and
/// `synth` as in [`Benchmark::desk`], `split_ratios` `[0.4, 0.1, 0.5]`,
/// any relation name accepted, variant `full`, no dataset path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub train: TrainConfig,
    /// Generator used by `synth`, and by `train` when no dataset is given.
    pub synth: SynthConfig,
    /// train/val/test ratios for datasets without a `split` column.
    pub split_ratios: [f64; 3],
    /// Accepted relation names; unknown relations in edges.csv are rejected.
    pub relations: Option<Vec<String>>,
    pub variant: AblationVariant,
    /// Dataset directory, used when `--data` is absent.
    pub data: Option<PathBuf>,
    /// Target edge homophily of `perturb`, used when `--target` is absent.
    pub perturb_target: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let bench = Benchmark::desk();
        RunConfig {
            train: bench.train,
            synth: bench.synth,
            split_ratios: bench.split_ratios,
            relations: None,
            variant: AblationVariant::Full,
            data: None,
            perturb_target: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn benchmark(&self) -> Benchmark {
        Benchmark {
            synth: self.synth.clone(),
            split_ratios: self.split_ratios,
            train: self.train.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_documents_and_unknown_keys() {
        let c: RunConfig =
            serde_json::from_str(r#"{"train": {"hidden": 16, "heads": 2}, "variant": "no_aug"}"#)
                .unwrap();
        assert_eq!(c.train.hidden, 16);
        assert_eq!(c.variant, AblationVariant::NoAug);
        assert_eq!(c.split_ratios, RunConfig::default().split_ratios);
        assert!(serde_json::from_str::<RunConfig>(r#"{"epochs": 3}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"train": {"epochs": 3}}"#).is_err());
    }
}
