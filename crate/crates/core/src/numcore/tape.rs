//! Reverse-mode differentiation over whole matrices.
//!
//! A [`Tape`] records every operation of one forward pass. Values are computed
//! eagerly; [`Tape::backward`] then walks the records in reverse and applies the
//! vector-Jacobian product of each operation. Parameters enter the tape through
//! [`Tape::param`], which records a leaf tied to a [`ParamId`] so gradients can
//! be routed back into a [`ParamStore`].

use std::collections::HashMap;
use std::rc::Rc;

use super::matrix::{Activation, Matrix};
use super::param::{ParamId, ParamStore};
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    Param(ParamId),
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    MulConst(Var, Matrix),
    ScaleRows(Var, Var),
    Act(Var, Activation),
    RowSoftmax(Var),
    Gather(Var, Rc<[usize]>),
    Scatter(Var, Rc<[usize]>),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    SliceCols(Var, usize),
    SliceRows(Var, usize),
    Sum(Var),
    SumSquares(Var),
    CrossEntropy {
        logits: Var,
        targets: Vec<(usize, usize)>,
        probs: Matrix,
    },
    Hinge {
        input: Var,
        targets: Vec<f64>,
    },
}

#[derive(Debug)]
struct Node {
    value: Matrix,
    op: Op,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: HashMap<ParamId, Var>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Matrix, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    pub fn constant(&mut self, m: Matrix) -> Var {
        self.push(m, Op::Leaf)
    }

    /// Records the current value of a parameter. Repeated calls return the same handle.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        if let Some(&v) = self.params.get(&id) {
            return v;
        }
        let v = self.push(store.value(id).clone(), Op::Param(id));
        self.params.insert(id, v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul(self.value(b))?;
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).add(self.value(b))?;
        Ok(self.push(out, Op::Add(a, b)))
    }

    /// Adds a 1×C row to every row of an N×C matrix.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let (x, b) = (self.value(a), self.value(row));
        if b.rows() != 1 || b.cols() != x.cols() {
            return Err(Error::Shape {
                op: "add_row",
                left: x.shape(),
                right: b.shape(),
            });
        }
        let mut out = x.clone();
        for r in 0..out.rows() {
            for (o, &bv) in out.row_mut(r).iter_mut().zip(b.data()) {
                *o += bv;
            }
        }
        Ok(self.push(out, Op::AddRow(a, row)))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let out = self.value(a).scale(s);
        self.push(out, Op::Scale(a, s))
    }

    /// Elementwise product with a constant matrix of the same shape.
    pub fn mul_const(&mut self, a: Var, c: Matrix) -> Result<Var> {
        let out = self.value(a).zip_map(&c, |x, y| x * y)?;
        Ok(self.push(out, Op::MulConst(a, c)))
    }

    /// Multiplies row `i` of `a` by the scalar `s[i]`, where `s` is a column.
    pub fn scale_rows(&mut self, a: Var, s: Var) -> Result<Var> {
        let (x, w) = (self.value(a), self.value(s));
        if w.cols() != 1 || w.rows() != x.rows() {
            return Err(Error::Shape {
                op: "scale_rows",
                left: x.shape(),
                right: w.shape(),
            });
        }
        let mut out = x.clone();
        for r in 0..out.rows() {
            let k = w[(r, 0)];
            out.row_mut(r).iter_mut().for_each(|v| *v *= k);
        }
        Ok(self.push(out, Op::ScaleRows(a, s)))
    }

    pub fn act(&mut self, a: Var, kind: Activation) -> Var {
        let out = self.value(a).map(|v| kind.apply(v));
        self.push(out, Op::Act(a, kind))
    }

    pub fn row_softmax(&mut self, a: Var) -> Var {
        let out = self.value(a).row_softmax();
        self.push(out, Op::RowSoftmax(a))
    }

    pub fn gather_rows(&mut self, a: Var, index: Rc<[usize]>) -> Result<Var> {
        let out = self.value(a).gather_rows(&index)?;
        Ok(self.push(out, Op::Gather(a, index)))
    }

    pub fn scatter_add_rows(&mut self, a: Var, index: Rc<[usize]>, out_rows: usize) -> Result<Var> {
        let out = self.value(a).scatter_add_rows(&index, out_rows)?;
        Ok(self.push(out, Op::Scatter(a, index)))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let mats: Vec<&Matrix> = parts.iter().map(|&v| self.value(v)).collect();
        let out = Matrix::concat_cols(&mats)?;
        Ok(self.push(out, Op::ConcatCols(parts.to_vec())))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let mats: Vec<&Matrix> = parts.iter().map(|&v| self.value(v)).collect();
        let out = Matrix::concat_rows(&mats)?;
        Ok(self.push(out, Op::ConcatRows(parts.to_vec())))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Result<Var> {
        let out = self.value(a).slice_cols(start, end)?;
        Ok(self.push(out, Op::SliceCols(a, start)))
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, end: usize) -> Result<Var> {
        let out = self.value(a).slice_rows(start, end)?;
        Ok(self.push(out, Op::SliceRows(a, start)))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let out = Matrix::scalar(self.value(a).sum());
        self.push(out, Op::Sum(a))
    }

    pub fn sum_squares(&mut self, a: Var) -> Var {
        let out = Matrix::scalar(self.value(a).sum_squares());
        self.push(out, Op::SumSquares(a))
    }

    /// Mean negative log-likelihood of `labels[i]` over the rows in `mask`.
    pub fn cross_entropy(&mut self, logits: Var, labels: &[usize], mask: &[usize]) -> Result<Var> {
        if mask.is_empty() {
            return Err(Error::NoSupervisedNodes);
        }
        let x = self.value(logits);
        let probs = x.row_softmax();
        let mut targets = Vec::with_capacity(mask.len());
        let mut loss = 0.0;
        for &row in mask {
            if row >= x.rows() {
                return Err(Error::Index {
                    op: "cross_entropy",
                    index: row,
                    len: x.rows(),
                });
            }
            let label = labels[row];
            if label >= x.cols() {
                return Err(Error::Index {
                    op: "cross_entropy label",
                    index: label,
                    len: x.cols(),
                });
            }
            loss -= log_softmax_at(x.row(row), label);
            targets.push((row, label));
        }
        loss /= mask.len() as f64;
        Ok(self.push(
            Matrix::scalar(loss),
            Op::CrossEntropy {
                logits,
                targets,
                probs,
            },
        ))
    }

    /// Mean of `max(0, 1 − a_i·t_i)` over the rows of column `a`; zero when empty.
    pub fn hinge_mean(&mut self, a: Var, targets: Vec<f64>) -> Result<Var> {
        let x = self.value(a);
        if x.cols() != 1 || x.rows() != targets.len() {
            return Err(Error::Shape {
                op: "hinge_mean",
                left: x.shape(),
                right: (targets.len(), 1),
            });
        }
        let loss = if targets.is_empty() {
            0.0
        } else {
            let total: f64 = x
                .data()
                .iter()
                .zip(&targets)
                .map(|(&v, &t)| (1.0 - v * t).max(0.0))
                .sum();
            total / targets.len() as f64
        };
        Ok(self.push(Matrix::scalar(loss), Op::Hinge { input: a, targets }))
    }

    /// Reverse sweep from `output`, seeded with ones.
    pub fn backward(&self, output: Var) -> Result<Gradients> {
        let mut grads: Vec<Option<Matrix>> = vec![None; self.nodes.len()];
        let (r, c) = self.shape(output);
        grads[output.0] = Some(Matrix::filled(r, c, 1.0));

        for idx in (0..=output.0).rev() {
            let Some(g) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf | Op::Param(_) => {}
                Op::MatMul(a, b) => {
                    let ga = g.matmul_t(self.value(*b))?;
                    let gb = self.value(*a).t_matmul(&g)?;
                    accumulate(&mut grads, *a, ga)?;
                    accumulate(&mut grads, *b, gb)?;
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, g.clone())?;
                    accumulate(&mut grads, *b, g.clone())?;
                }
                Op::AddRow(a, b) => {
                    let mut gb = Matrix::zeros(1, g.cols());
                    for r in 0..g.rows() {
                        for (o, &v) in gb.data_mut().iter_mut().zip(g.row(r)) {
                            *o += v;
                        }
                    }
                    accumulate(&mut grads, *a, g.clone())?;
                    accumulate(&mut grads, *b, gb)?;
                }
                Op::Scale(a, s) => accumulate(&mut grads, *a, g.scale(*s))?,
                Op::MulConst(a, c) => accumulate(&mut grads, *a, g.zip_map(c, |x, y| x * y)?)?,
                Op::ScaleRows(a, s) => {
                    let x = self.value(*a);
                    let w = self.value(*s);
                    let mut ga = g.clone();
                    let mut gs = Matrix::zeros(w.rows(), 1);
                    for r in 0..g.rows() {
                        let k = w[(r, 0)];
                        gs[(r, 0)] = super::matrix::dot(g.row(r), x.row(r));
                        ga.row_mut(r).iter_mut().for_each(|v| *v *= k);
                    }
                    accumulate(&mut grads, *a, ga)?;
                    accumulate(&mut grads, *s, gs)?;
                }
                Op::Act(a, kind) => {
                    let x = self.value(*a);
                    let y = &node.value;
                    let mut ga = g.clone();
                    for ((o, &xi), &yi) in ga.data_mut().iter_mut().zip(x.data()).zip(y.data()) {
                        *o *= kind.derivative(xi, yi);
                    }
                    accumulate(&mut grads, *a, ga)?;
                }
                Op::RowSoftmax(a) => {
                    let s = &node.value;
                    let mut ga = Matrix::zeros(s.rows(), s.cols());
                    for r in 0..s.rows() {
                        let inner = super::matrix::dot(g.row(r), s.row(r));
                        for ((o, &gi), &si) in ga.row_mut(r).iter_mut().zip(g.row(r)).zip(s.row(r))
                        {
                            *o = si * (gi - inner);
                        }
                    }
                    accumulate(&mut grads, *a, ga)?;
                }
                Op::Gather(a, index) => {
                    let rows = self.value(*a).rows();
                    accumulate(&mut grads, *a, g.scatter_add_rows(index, rows)?)?;
                }
                Op::Scatter(a, index) => {
                    accumulate(&mut grads, *a, g.gather_rows(index)?)?;
                }
                Op::ConcatCols(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let w = self.value(p).cols();
                        accumulate(&mut grads, p, g.slice_cols(offset, offset + w)?)?;
                        offset += w;
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let h = self.value(p).rows();
                        accumulate(&mut grads, p, g.slice_rows(offset, offset + h)?)?;
                        offset += h;
                    }
                }
                Op::SliceCols(a, start) => {
                    let (r, c) = self.shape(*a);
                    let mut ga = Matrix::zeros(r, c);
                    for i in 0..r {
                        ga.row_mut(i)[*start..*start + g.cols()].copy_from_slice(g.row(i));
                    }
                    accumulate(&mut grads, *a, ga)?;
                }
                Op::SliceRows(a, start) => {
                    let (r, c) = self.shape(*a);
                    let mut ga = Matrix::zeros(r, c);
                    for i in 0..g.rows() {
                        ga.row_mut(start + i).copy_from_slice(g.row(i));
                    }
                    accumulate(&mut grads, *a, ga)?;
                }
                Op::Sum(a) => {
                    let (r, c) = self.shape(*a);
                    accumulate(&mut grads, *a, Matrix::filled(r, c, g.item()))?;
                }
                Op::SumSquares(a) => {
                    let k = 2.0 * g.item();
                    accumulate(&mut grads, *a, self.value(*a).scale(k))?;
                }
                Op::CrossEntropy {
                    logits,
                    targets,
                    probs,
                } => {
                    let (r, c) = probs.shape();
                    let mut ga = Matrix::zeros(r, c);
                    let k = g.item() / targets.len() as f64;
                    for &(row, label) in targets {
                        for (j, o) in ga.row_mut(row).iter_mut().enumerate() {
                            let onehot = if j == label { 1.0 } else { 0.0 };
                            *o += k * (probs[(row, j)] - onehot);
                        }
                    }
                    accumulate(&mut grads, *logits, ga)?;
                }
                Op::Hinge { input, targets } => {
                    let x = self.value(*input);
                    let mut ga = Matrix::zeros(x.rows(), 1);
                    if !targets.is_empty() {
                        let k = g.item() / targets.len() as f64;
                        for (i, &t) in targets.iter().enumerate() {
                            if 1.0 - x[(i, 0)] * t > 0.0 {
                                ga[(i, 0)] = -t * k;
                            }
                        }
                    }
                    accumulate(&mut grads, *input, ga)?;
                }
            }
            // Leaves keep their gradient for inspection.
            if matches!(node.op, Op::Leaf | Op::Param(_)) {
                grads[idx] = Some(g);
            }
        }

        let params = self
            .nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| match n.op {
                Op::Param(id) => Some((id, Var(i))),
                _ => None,
            })
            .collect();
        Ok(Gradients { grads, params })
    }
}

fn log_softmax_at(row: &[f64], label: usize) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
    row[label] - lse
}

fn accumulate(grads: &mut [Option<Matrix>], v: Var, g: Matrix) -> Result<()> {
    match &mut grads[v.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => {
            *slot = Some(g);
            Ok(())
        }
    }
}

/// Gradients of one backward sweep, available for leaf values.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
    params: Vec<(ParamId, Var)>,
}

impl Gradients {
    pub fn wrt(&self, v: Var) -> Option<&Matrix> {
        self.grads[v.0].as_ref()
    }

    /// Adds the parameter gradients into `store`.
    pub fn accumulate_into(&self, store: &mut ParamStore) -> Result<()> {
        for &(id, v) in &self.params {
            if let Some(g) = &self.grads[v.0] {
                store.get_mut(id).accumulate(g)?;
            }
        }
        Ok(())
    }

    /// One gradient per parameter of `store`, zero where the parameter was unused.
    pub fn for_store(&self, store: &ParamStore) -> Vec<Matrix> {
        let mut out: Vec<Matrix> = store
            .iter()
            .map(|(_, _, p)| Matrix::zeros(p.shape().0, p.shape().1))
            .collect();
        for &(id, v) in &self.params {
            if let Some(g) = &self.grads[v.0] {
                out[id.0] = g.clone();
            }
        }
        out
    }
}
