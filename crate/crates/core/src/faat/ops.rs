//! Plain-matrix versions of the layer stages, without gradient recording.

use super::edges::EdgeIndex;
use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::numcore::{dot, Activation, Matrix};

/// `x⁽⁰⁾ = σ([x_d ∥ x_num ∥ x_cat]·W0)`
pub fn fuse_features(fs: &FeatureSet, w0: &Matrix, act: Activation) -> Result<Matrix> {
    Ok(fs.fused()?.matmul(w0)?.map(|v| act.apply(v)))
}

/// `tanh(g·[σ(x_u·Wq) ∥ σ(x_v·Wk)])` for one directed pair `u ← v`.
pub fn attention_coeff(
    xu: &[f64],
    xv: &[f64],
    wq: &Matrix,
    wk: &Matrix,
    g: &[f64],
    act: Activation,
) -> Result<f64> {
    let q = Matrix::from_vec(1, xu.len(), xu.to_vec())?.matmul(wq)?;
    let k = Matrix::from_vec(1, xv.len(), xv.to_vec())?.matmul(wk)?;
    if g.len() != q.cols() + k.cols() {
        return Err(Error::Shape {
            op: "attention_coeff",
            left: (g.len(), 1),
            right: (q.cols(), k.cols()),
        });
    }
    let q = q.map(|v| act.apply(v));
    let k = k.map(|v| act.apply(v));
    let (gq, gk) = g.split_at(q.cols());
    Ok((dot(gq, q.data()) + dot(gk, k.data())).tanh())
}

/// `(1−β)·α̂ + β·α_prev`
pub fn edge_residual(alpha_hat: f64, alpha_prev: f64, beta: f64) -> f64 {
    (1.0 - beta) * alpha_hat + beta * alpha_prev
}

/// One head: `z_u = Σ_r Σ_{v∈N_r(u)} α_uv/√(d_ur·d_vr) · x_v·W_r`.
///
/// `alpha` is indexed by slot and `wr` by the relation indices of `edges`.
pub fn aggregate(x: &Matrix, edges: &EdgeIndex, alpha: &[f64], wr: &[Matrix]) -> Result<Matrix> {
    if alpha.len() != edges.num_slots() {
        return Err(Error::Shape {
            op: "aggregate",
            left: (alpha.len(), 1),
            right: (edges.num_slots(), 1),
        });
    }
    let projected: Vec<Matrix> = wr.iter().map(|w| x.matmul(w)).collect::<Result<_>>()?;
    let width = projected.first().map_or(0, |p| p.cols());
    let mut z = Matrix::zeros(x.rows(), width);
    for e in 0..edges.num_slots() {
        let c = alpha[e] * edges.norm[e];
        let msg = projected[edges.rel[e]].row(edges.src[e]);
        for (o, m) in z.row_mut(edges.dst[e]).iter_mut().zip(msg) {
            *o += c * m;
        }
    }
    Ok(z)
}

#[derive(Debug, Clone, Copy)]
pub enum NodeResidual<'a> {
    Transform(&'a Matrix),
    Initial(f64),
}

/// `σ(x_prev·W_res + z)` or `σ(ε·x⁽⁰⁾ + (1−ε)·z)`.
pub fn node_residual(
    x_prev: &Matrix,
    x0: &Matrix,
    z: &Matrix,
    residual: NodeResidual,
    act: Activation,
) -> Result<Matrix> {
    let pre = match residual {
        NodeResidual::Transform(w) => x_prev.matmul(w)?.add(z)?,
        NodeResidual::Initial(eps) => x0.scale(eps).add(&z.scale(1.0 - eps))?,
    };
    Ok(pre.map(|v| act.apply(v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureFamily;
    use crate::graph::HeteroGraph;

    const LRELU: Activation = Activation::LeakyRelu(Activation::DEFAULT_SLOPE);

    #[test]
    fn fusion_hand_value() {
        let fs = FeatureSet::new(1)
            .with(FeatureFamily::Description, Matrix::from_rows(&[[1.0]]))
            .unwrap()
            .with(FeatureFamily::Numerical, Matrix::from_rows(&[[2.0]]))
            .unwrap()
            .with(FeatureFamily::Categorical, Matrix::from_rows(&[[3.0]]))
            .unwrap();
        let w0 = Matrix::from_rows(&[[1.0], [1.0], [1.0]]);
        assert_eq!(fuse_features(&fs, &w0, LRELU).unwrap().item(), 6.0);
    }

    #[test]
    fn fusion_zero_and_identity() {
        let zero = FeatureSet::single(Matrix::zeros(3, 2));
        let out = fuse_features(&zero, &Matrix::identity(2), LRELU).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
        let x = Matrix::from_rows(&[[1.0, -2.0]]);
        let out =
            fuse_features(&FeatureSet::single(x.clone()), &Matrix::identity(2), LRELU).unwrap();
        assert_eq!(out, x.map(|v| LRELU.apply(v)));
    }

    #[test]
    fn fusion_without_families_errors() {
        assert!(fuse_features(&FeatureSet::new(2), &Matrix::identity(1), LRELU).is_err());
    }

    #[test]
    fn attention_hand_value() {
        let one = Matrix::identity(1);
        let a = attention_coeff(&[1.0], &[5.0], &one, &one, &[1.0, 0.0], LRELU).unwrap();
        assert!((a - 1f64.tanh()).abs() < 1e-15);
        assert!((a - 0.7616).abs() < 1e-4);
        let z = attention_coeff(&[1.0], &[5.0], &one, &one, &[0.0, 0.0], LRELU).unwrap();
        assert_eq!(z, 0.0);
        // u←v and v←u differ
        let b = attention_coeff(&[5.0], &[1.0], &one, &one, &[1.0, 0.0], LRELU).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn edge_residual_cases() {
        assert!((edge_residual(0.5, -1.0, 0.1) - 0.35).abs() < 1e-15);
        assert_eq!(edge_residual(0.3, -0.7, 0.0), 0.3);
        assert_eq!(edge_residual(0.3, -0.7, 1.0), -0.7);
    }

    fn pair_graph(extra_leaves: usize) -> (HeteroGraph, EdgeIndex) {
        let n = 2 + extra_leaves;
        let mut g = HeteroGraph::new(n + 1);
        let mut pairs = vec![(0, 1)];
        pairs.extend((0..extra_leaves).map(|i| (0, 2 + i)));
        g.add_relation("r", pairs).unwrap();
        let idx = EdgeIndex::build(&g, &["r".to_string()]).unwrap();
        (g, idx)
    }

    #[test]
    fn aggregate_identity_and_scaling() {
        let (g, idx) = pair_graph(0);
        let mut x = Matrix::zeros(g.num_nodes(), 2);
        x.row_mut(1).copy_from_slice(&[2.0, 3.0]);
        let ones = vec![1.0; idx.num_slots()];
        let z = aggregate(&x, &idx, &ones, &[Matrix::identity(2)]).unwrap();
        assert_eq!(z.row(0), &[2.0, 3.0]);
        // isolated node 2
        assert_eq!(z.row(2), &[0.0, 0.0]);

        let (g, idx) = pair_graph(3);
        let mut x = Matrix::zeros(g.num_nodes(), 2);
        x.row_mut(1).copy_from_slice(&[2.0, 3.0]);
        let ones = vec![1.0; idx.num_slots()];
        let z = aggregate(&x, &idx, &ones, &[Matrix::identity(2)]).unwrap();
        assert_eq!(z.row(0), &[1.0, 1.5]);
    }

    #[test]
    fn node_residual_boundaries() {
        let x0 = Matrix::from_rows(&[[1.0, -2.0]]);
        let z = Matrix::from_rows(&[[-3.0, 4.0]]);
        let s = |m: &Matrix| m.map(|v| LRELU.apply(v));
        let r = node_residual(&x0, &x0, &z, NodeResidual::Initial(1.0), LRELU).unwrap();
        assert_eq!(r, s(&x0));
        let r = node_residual(&x0, &x0, &z, NodeResidual::Initial(0.0), LRELU).unwrap();
        assert_eq!(r, s(&z));
        let w = Matrix::zeros(2, 2);
        let r = node_residual(&x0, &x0, &z, NodeResidual::Transform(&w), LRELU).unwrap();
        assert_eq!(r, s(&z));
    }
}
