//! Homophily-oriented augmentation.
//!
//! An MLP is trained on node features alone, its pre-activation hidden layer is
//! used as a user embedding, and the cosine k-NN graph over those embeddings is
//! injected as a new relation.

mod knn;
mod mlp;

pub use knn::{augment, cosine, knn_graph, KnnResult, KNN_RELATION};
pub use mlp::{train_mlp, MlpConfig, MlpModel};

use crate::error::Result;
use crate::features::FeatureSet;
use crate::graph::{HeteroGraph, LabelSet};

/// Full two-stage augmentation: train the MLP, embed, build the k-NN graph, inject it.
pub fn homo_aug(
    g: &HeteroGraph,
    features: &FeatureSet,
    labels: &LabelSet,
    train: &[usize],
    val: &[usize],
    k: usize,
    cfg: &MlpConfig,
) -> Result<(HeteroGraph, KnnResult, MlpModel)> {
    let mlp = train_mlp(features, labels, train, val, cfg)?;
    let reps = mlp.hidden_reps(features)?;
    let knn = knn_graph(&reps, k)?;
    let augmented = augment(g, &knn)?;
    Ok((augmented, knn, mlp))
}
