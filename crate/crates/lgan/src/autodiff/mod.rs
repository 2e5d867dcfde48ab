//! Reverse-mode differentiation over dense `f64` matrices.
//!
//! A [`Tape`] records every operation as it runs; [`Tape::backward`] walks
//! the record in reverse and returns a fresh [`Gradients`] table, so
//! gradients never accumulate across separate tapes.
//!
//! Segment sums add each segment's values in sorted order. The result then
//! depends only on the multiset of rows in the segment, which makes graph
//! readouts exactly invariant to node relabeling.

mod adam;
mod params;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use params::{ParamStore, PARAMS_FORMAT_VERSION};

use crate::matrix::Matrix;
use std::cell::RefCell;
use std::rc::Rc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AutodiffError {
    #[error("{op}: incompatible shapes {left:?} and {right:?}")]
    Shape { op: &'static str, left: (usize, usize), right: (usize, usize) },
    #[error("{op}: index {index} out of range for {bound}")]
    Index { op: &'static str, index: usize, bound: usize },
    #[error("backward needs a 1x1 loss, got {0:?}")]
    NonScalarLoss((usize, usize)),
    #[error("non-finite gradient for parameter `{0}`")]
    NonFiniteGradient(String),
    #[error("parameter `{0}` is missing from the checkpoint")]
    MissingParam(String),
    #[error("parameter `{name}` has shape {found:?}, expected {expected:?}")]
    ParamShape { name: String, expected: (usize, usize), found: (usize, usize) },
    #[error("unsupported parameter format version {0}")]
    Version(u32),
    #[error("checkpoint decode error: {0}")]
    Decode(#[from] serde_json::Error),
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatMul(usize, usize),
    Add(usize, usize),
    AddRow(usize, usize),
    Relu(usize),
    ConcatCols(Vec<usize>),
    SegmentSum { src: usize, segments: Rc<[usize]> },
    RowSelect { src: usize, index: Rc<[usize]> },
    ScalarMul(usize, f64),
    RowScale(usize, usize),
    MulConst(usize, Rc<Matrix>),
    Sum(usize),
    Element(usize, usize, usize),
    SoftmaxCrossEntropy { logits: usize, labels: Rc<[usize]>, probs: Matrix },
}

struct Node {
    value: Rc<Matrix>,
    op: Op,
    requires_grad: bool,
}

/// Append-only operation record. Parents always precede children.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Tensor<'t> {
    tape: &'t Tape,
    id: usize,
}

impl std::fmt::Debug for Tensor<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Tensor#{} {:?}", self.id, self.shape())
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    fn push(&self, value: Matrix, op: Op, requires_grad: bool) -> Tensor<'_> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { value: Rc::new(value), op, requires_grad });
        Tensor { tape: self, id: nodes.len() - 1 }
    }

    /// A trainable input: gradients flow into it.
    pub fn param(&self, value: Matrix) -> Tensor<'_> {
        self.push(value, Op::Leaf, true)
    }

    /// A detached input: never receives gradient.
    pub fn constant(&self, value: Matrix) -> Tensor<'_> {
        self.push(value, Op::Leaf, false)
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.borrow().is_empty()
    }

    fn value(&self, id: usize) -> Rc<Matrix> {
        Rc::clone(&self.nodes.borrow()[id].value)
    }

    fn requires(&self, ids: &[usize]) -> bool {
        let nodes = self.nodes.borrow();
        ids.iter().any(|&i| nodes[i].requires_grad)
    }

    /// Gradients of the scalar `loss` with respect to every recorded value
    /// that requires them.
    pub fn backward(&self, loss: Tensor<'_>) -> Result<Gradients, AutodiffError> {
        let shape = loss.shape();
        if shape != (1, 1) {
            return Err(AutodiffError::NonScalarLoss(shape));
        }
        let nodes = self.nodes.borrow();
        let mut grads: Vec<Option<Matrix>> = vec![None; nodes.len()];
        grads[loss.id] = Some(Matrix::filled(1, 1, 1.0));
        for id in (0..=loss.id).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &nodes[id];
            if !node.requires_grad {
                continue;
            }
            let mut send = |target: usize, contribution: Matrix| {
                if !nodes[target].requires_grad {
                    return;
                }
                match &mut grads[target] {
                    Some(acc) => acc.add_assign(&contribution),
                    slot @ None => *slot = Some(contribution),
                }
            };
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    if nodes[*a].requires_grad {
                        send(*a, g.matmul_t(&nodes[*b].value));
                    }
                    if nodes[*b].requires_grad {
                        send(*b, nodes[*a].value.t_matmul(&g));
                    }
                }
                Op::Add(a, b) => {
                    send(*a, g.clone());
                    send(*b, g.clone());
                }
                Op::AddRow(a, bias) => {
                    let mut gb = Matrix::zeros(1, g.cols());
                    for r in 0..g.rows() {
                        for (acc, x) in gb.row_mut(0).iter_mut().zip(g.row(r)) {
                            *acc += x;
                        }
                    }
                    send(*a, g.clone());
                    send(*bias, gb);
                }
                Op::Relu(a) => {
                    let x = &nodes[*a].value;
                    let mut out = g.clone();
                    for (o, &xi) in out.as_mut_slice().iter_mut().zip(x.as_slice()) {
                        if xi <= 0.0 {
                            *o = 0.0;
                        }
                    }
                    send(*a, out);
                }
                Op::ConcatCols(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let cols = nodes[p].value.cols();
                        let mut piece = Matrix::zeros(g.rows(), cols);
                        for r in 0..g.rows() {
                            piece.row_mut(r).copy_from_slice(&g.row(r)[offset..offset + cols]);
                        }
                        offset += cols;
                        send(p, piece);
                    }
                }
                Op::SegmentSum { src, segments } => {
                    let mut out = Matrix::zeros(segments.len(), g.cols());
                    for (r, &s) in segments.iter().enumerate() {
                        out.row_mut(r).copy_from_slice(g.row(s));
                    }
                    send(*src, out);
                }
                Op::RowSelect { src, index } => {
                    let (rows, cols) = nodes[*src].value.shape();
                    let mut out = Matrix::zeros(rows, cols);
                    for (r, &i) in index.iter().enumerate() {
                        for (acc, x) in out.row_mut(i).iter_mut().zip(g.row(r)) {
                            *acc += x;
                        }
                    }
                    send(*src, out);
                }
                Op::ScalarMul(a, s) => {
                    let mut out = g.clone();
                    out.scale(*s);
                    send(*a, out);
                }
                Op::RowScale(a, s) => {
                    let x = &nodes[*a].value;
                    let scale = &nodes[*s].value;
                    if nodes[*a].requires_grad {
                        let mut out = g.clone();
                        for r in 0..out.rows() {
                            let k = scale.get(r, 0);
                            out.row_mut(r).iter_mut().for_each(|v| *v *= k);
                        }
                        send(*a, out);
                    }
                    if nodes[*s].requires_grad {
                        let mut gs = Matrix::zeros(x.rows(), 1);
                        for r in 0..x.rows() {
                            gs.set(r, 0, g.row(r).iter().zip(x.row(r)).map(|(a, b)| a * b).sum());
                        }
                        send(*s, gs);
                    }
                }
                Op::MulConst(a, mask) => {
                    let mut out = g.clone();
                    for (o, m) in out.as_mut_slice().iter_mut().zip(mask.as_slice()) {
                        *o *= m;
                    }
                    send(*a, out);
                }
                Op::Sum(a) => {
                    let (r, c) = nodes[*a].value.shape();
                    send(*a, Matrix::filled(r, c, g.get(0, 0)));
                }
                Op::Element(a, r, c) => {
                    let (rows, cols) = nodes[*a].value.shape();
                    let mut out = Matrix::zeros(rows, cols);
                    out.set(*r, *c, g.get(0, 0));
                    send(*a, out);
                }
                Op::SoftmaxCrossEntropy { logits, labels, probs } => {
                    let scale = g.get(0, 0) / labels.len() as f64;
                    let mut out = probs.clone();
                    for (r, &l) in labels.iter().enumerate() {
                        let v = out.get(r, l);
                        out.set(r, l, v - 1.0);
                    }
                    out.scale(scale);
                    send(*logits, out);
                }
            }
            grads[id] = Some(g);
        }
        Ok(Gradients { grads })
    }
}

/// Result of one backward pass.
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    /// `None` when `t` does not require gradients or is unreachable from the loss.
    pub fn get(&self, t: Tensor<'_>) -> Option<&Matrix> {
        self.grads.get(t.id).and_then(Option::as_ref)
    }

    /// Gradient of `t`, or zeros of its shape when none flowed.
    pub fn get_or_zeros(&self, t: Tensor<'_>) -> Matrix {
        self.get(t).cloned().unwrap_or_else(|| {
            let (r, c) = t.shape();
            Matrix::zeros(r, c)
        })
    }
}

fn check_same(op: &'static str, a: (usize, usize), b: (usize, usize)) -> Result<(), AutodiffError> {
    if a == b {
        Ok(())
    } else {
        Err(AutodiffError::Shape { op, left: a, right: b })
    }
}

/// Sum of `values` in ascending order.
fn sorted_sum(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    values.iter().sum()
}

impl<'t> Tensor<'t> {
    pub fn value(&self) -> Rc<Matrix> {
        self.tape.value(self.id)
    }

    pub fn shape(&self) -> (usize, usize) {
        self.tape.nodes.borrow()[self.id].value.shape()
    }

    pub fn requires_grad(&self) -> bool {
        self.tape.nodes.borrow()[self.id].requires_grad
    }

    /// The single entry of a 1x1 tensor.
    pub fn scalar(&self) -> f64 {
        let v = self.value();
        assert_eq!(v.shape(), (1, 1), "scalar() on a non-scalar tensor");
        v.get(0, 0)
    }

    fn unary(&self, value: Matrix, op: Op) -> Tensor<'t> {
        let req = self.tape.requires(&[self.id]);
        self.tape.push(value, op, req)
    }

    fn binary(&self, other: &Tensor<'t>, value: Matrix, op: Op) -> Tensor<'t> {
        let req = self.tape.requires(&[self.id, other.id]);
        self.tape.push(value, op, req)
    }

    pub fn matmul(&self, other: &Tensor<'t>) -> Result<Tensor<'t>, AutodiffError> {
        let (a, b) = (self.value(), other.value());
        if a.cols() != b.rows() {
            return Err(AutodiffError::Shape { op: "matmul", left: a.shape(), right: b.shape() });
        }
        Ok(self.binary(other, a.matmul(&b), Op::MatMul(self.id, other.id)))
    }

    pub fn add(&self, other: &Tensor<'t>) -> Result<Tensor<'t>, AutodiffError> {
        let (a, b) = (self.value(), other.value());
        check_same("add", a.shape(), b.shape())?;
        let mut out = (*a).clone();
        out.add_assign(&b);
        Ok(self.binary(other, out, Op::Add(self.id, other.id)))
    }

    /// Adds a `1 x cols` row to every row.
    pub fn add_row(&self, bias: &Tensor<'t>) -> Result<Tensor<'t>, AutodiffError> {
        let (a, b) = (self.value(), bias.value());
        if b.rows() != 1 || b.cols() != a.cols() {
            return Err(AutodiffError::Shape { op: "add_row", left: a.shape(), right: b.shape() });
        }
        let mut out = (*a).clone();
        for r in 0..out.rows() {
            for (o, x) in out.row_mut(r).iter_mut().zip(b.row(0)) {
                *o += x;
            }
        }
        Ok(self.binary(bias, out, Op::AddRow(self.id, bias.id)))
    }

    pub fn relu(&self) -> Tensor<'t> {
        let out = self.value().map(|x| if x > 0.0 { x } else { 0.0 });
        self.unary(out, Op::Relu(self.id))
    }

    pub fn concat_cols(parts: &[Tensor<'t>]) -> Result<Tensor<'t>, AutodiffError> {
        let first = parts.first().expect("concat_cols needs at least one part");
        let values: Vec<Rc<Matrix>> = parts.iter().map(Tensor::value).collect();
        let rows = values[0].rows();
        for v in &values[1..] {
            if v.rows() != rows {
                return Err(AutodiffError::Shape { op: "concat_cols", left: values[0].shape(), right: v.shape() });
            }
        }
        let cols: usize = values.iter().map(|v| v.cols()).sum();
        let mut out = Matrix::zeros(rows, cols);
        for r in 0..rows {
            let mut offset = 0;
            for v in &values {
                out.row_mut(r)[offset..offset + v.cols()].copy_from_slice(v.row(r));
                offset += v.cols();
            }
        }
        let ids: Vec<usize> = parts.iter().map(|t| t.id).collect();
        let req = first.tape.requires(&ids);
        Ok(first.tape.push(out, Op::ConcatCols(ids), req))
    }

    /// Row `s` of the result is the sum of the rows whose segment id is `s`;
    /// empty segments give zero rows.
    pub fn segment_sum(&self, segments: Rc<[usize]>, count: usize) -> Result<Tensor<'t>, AutodiffError> {
        let x = self.value();
        if segments.len() != x.rows() {
            return Err(AutodiffError::Shape { op: "segment_sum", left: x.shape(), right: (segments.len(), 1) });
        }
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); count];
        for (r, &s) in segments.iter().enumerate() {
            if s >= count {
                return Err(AutodiffError::Index { op: "segment_sum", index: s, bound: count });
            }
            members[s].push(r);
        }
        let mut out = Matrix::zeros(count, x.cols());
        let mut buf = Vec::new();
        for (s, rows) in members.iter().enumerate() {
            match rows.len() {
                0 => {}
                1 => out.row_mut(s).copy_from_slice(x.row(rows[0])),
                _ => {
                    for c in 0..x.cols() {
                        buf.clear();
                        buf.extend(rows.iter().map(|&r| x.get(r, c)));
                        out.set(s, c, sorted_sum(&mut buf));
                    }
                }
            }
        }
        Ok(self.unary(out, Op::SegmentSum { src: self.id, segments }))
    }

    /// Gathers rows by index (repeats allowed).
    pub fn row_select(&self, index: Rc<[usize]>) -> Result<Tensor<'t>, AutodiffError> {
        let x = self.value();
        let mut out = Matrix::zeros(index.len(), x.cols());
        for (r, &i) in index.iter().enumerate() {
            if i >= x.rows() {
                return Err(AutodiffError::Index { op: "row_select", index: i, bound: x.rows() });
            }
            out.row_mut(r).copy_from_slice(x.row(i));
        }
        Ok(self.unary(out, Op::RowSelect { src: self.id, index }))
    }

    pub fn scalar_mul(&self, s: f64) -> Tensor<'t> {
        let out = self.value().map(|x| x * s);
        self.unary(out, Op::ScalarMul(self.id, s))
    }

    /// Multiplies row `r` by `scale[r, 0]`.
    pub fn row_scale(&self, scale: &Tensor<'t>) -> Result<Tensor<'t>, AutodiffError> {
        let (x, s) = (self.value(), scale.value());
        if s.cols() != 1 || s.rows() != x.rows() {
            return Err(AutodiffError::Shape { op: "row_scale", left: x.shape(), right: s.shape() });
        }
        let mut out = (*x).clone();
        for r in 0..out.rows() {
            let k = s.get(r, 0);
            out.row_mut(r).iter_mut().for_each(|v| *v *= k);
        }
        Ok(self.binary(scale, out, Op::RowScale(self.id, scale.id)))
    }

    /// Element-wise product with a constant (dropout masks).
    pub fn mul_const(&self, mask: Rc<Matrix>) -> Result<Tensor<'t>, AutodiffError> {
        let x = self.value();
        check_same("mul_const", x.shape(), mask.shape())?;
        let mut out = (*x).clone();
        for (o, m) in out.as_mut_slice().iter_mut().zip(mask.as_slice()) {
            *o *= m;
        }
        Ok(self.unary(out, Op::MulConst(self.id, mask)))
    }

    pub fn sum(&self) -> Tensor<'t> {
        let total = self.value().sum();
        self.unary(Matrix::filled(1, 1, total), Op::Sum(self.id))
    }

    pub fn element(&self, r: usize, c: usize) -> Result<Tensor<'t>, AutodiffError> {
        let x = self.value();
        if r >= x.rows() || c >= x.cols() {
            return Err(AutodiffError::Index { op: "element", index: r * x.cols() + c, bound: x.len() });
        }
        Ok(self.unary(Matrix::filled(1, 1, x.get(r, c)), Op::Element(self.id, r, c)))
    }

    /// Mean cross-entropy of row-wise softmax against integer labels.
    pub fn softmax_cross_entropy(&self, labels: Rc<[usize]>) -> Result<Tensor<'t>, AutodiffError> {
        let x = self.value();
        if labels.len() != x.rows() {
            return Err(AutodiffError::Shape {
                op: "softmax_cross_entropy",
                left: x.shape(),
                right: (labels.len(), 1),
            });
        }
        let mut probs = Matrix::zeros(x.rows(), x.cols());
        let mut loss = 0.0;
        for (r, &l) in labels.iter().enumerate() {
            if l >= x.cols() {
                return Err(AutodiffError::Index { op: "softmax_cross_entropy", index: l, bound: x.cols() });
            }
            let row = x.row(r);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = row.iter().map(|v| (v - max).exp()).sum();
            for (c, v) in row.iter().enumerate() {
                probs.set(r, c, (v - max).exp() / z);
            }
            loss += z.ln() + max - row[l];
        }
        let out = Matrix::filled(1, 1, loss / labels.len().max(1) as f64);
        Ok(self.unary(out, Op::SoftmaxCrossEntropy { logits: self.id, labels, probs }))
    }
}
