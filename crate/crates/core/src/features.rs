//! Per-user feature families: description embeddings, numerical and categorical features.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureFamily {
    Description,
    Numerical,
    Categorical,
}

impl FeatureFamily {
    pub const ALL: [FeatureFamily; 3] = [
        FeatureFamily::Description,
        FeatureFamily::Numerical,
        FeatureFamily::Categorical,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureFamily::Description => "description",
            FeatureFamily::Numerical => "numerical",
            FeatureFamily::Categorical => "categorical",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s)
    }
}

/// Feature families for `num_nodes` users; absent families have width 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    num_nodes: usize,
    families: [Option<Matrix>; 3],
}

impl FeatureSet {
    pub fn new(num_nodes: usize) -> Self {
        FeatureSet {
            num_nodes,
            families: [None, None, None],
        }
    }

    pub fn with(mut self, family: FeatureFamily, values: Matrix) -> Result<Self> {
        self.set(family, values)?;
        Ok(self)
    }

    pub fn set(&mut self, family: FeatureFamily, values: Matrix) -> Result<()> {
        if values.rows() != self.num_nodes {
            return Err(Error::Shape {
                op: "FeatureSet::set",
                left: (self.num_nodes, 0),
                right: values.shape(),
            });
        }
        self.families[family as usize] = Some(values);
        Ok(())
    }

    /// A single-family set, mostly for tests and examples.
    pub fn single(values: Matrix) -> Self {
        let mut fs = FeatureSet::new(values.rows());
        fs.families[FeatureFamily::Numerical as usize] = Some(values);
        fs
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn get(&self, family: FeatureFamily) -> Option<&Matrix> {
        self.families[family as usize].as_ref()
    }

    pub fn width(&self, family: FeatureFamily) -> usize {
        self.get(family).map_or(0, Matrix::cols)
    }

    pub fn total_width(&self) -> usize {
        FeatureFamily::ALL.iter().map(|&f| self.width(f)).sum()
    }

    pub fn present(&self) -> impl Iterator<Item = (FeatureFamily, &Matrix)> {
        FeatureFamily::ALL
            .into_iter()
            .filter_map(|f| self.get(f).map(|m| (f, m)))
    }

    /// `[x_d ∥ x_num ∥ x_cat]` as one N×F matrix.
    pub fn fused(&self) -> Result<Matrix> {
        let parts: Vec<&Matrix> = self.present().map(|(_, m)| m).collect();
        if parts.is_empty() {
            return Err(Error::Config("no feature family present".into()));
        }
        Matrix::concat_cols(&parts)
    }
}
