use std::rc::Rc;

use super::tensor::{matmul, Tensor};
use crate::error::{Error, Result};

/// Marks a gathered position that reads as zero (convolution padding).
pub const PAD: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatMul { a: NodeId, b: NodeId, ta: bool, tb: bool },
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    AddScalar(NodeId),
    BroadcastCols(NodeId),
    SumCols(NodeId),
    BroadcastRows(NodeId),
    SumRows(NodeId),
    Relu(NodeId),
    Sigmoid(NodeId),
    Powf(NodeId, f64),
    Gather(NodeId, Rc<[u32]>),
    ScatterAdd(NodeId, Rc<[u32]>),
    Reshape(NodeId),
}

impl Op {
    fn inputs(&self) -> [Option<NodeId>; 2] {
        match *self {
            Op::Leaf => [None, None],
            Op::MatMul { a, b, .. } | Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) => [Some(a), Some(b)],
            Op::Scale(a, _)
            | Op::AddScalar(a)
            | Op::BroadcastCols(a)
            | Op::SumCols(a)
            | Op::BroadcastRows(a)
            | Op::SumRows(a)
            | Op::Relu(a)
            | Op::Sigmoid(a)
            | Op::Powf(a, _)
            | Op::Gather(a, _)
            | Op::ScatterAdd(a, _)
            | Op::Reshape(a) => [Some(a), None],
        }
    }
}

struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Tape of 2-D tensor operations supporting reverse-mode differentiation.
///
/// Every backward rule is expressed with the same recorded operations, so
/// gradients taken with `create_graph` are themselves differentiable.
pub struct Graph {
    nodes: Vec<Node>,
    recording: bool,
    // Nodes lying on a path from a `wrt` node to the loss during `backward`.
    live: Vec<bool>,
}

impl Default for Graph {
    fn default() -> Self {
        Self::new()
    }
}

impl Graph {
    pub fn new() -> Self {
        Self { nodes: Vec::new(), recording: true, live: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    pub fn requires_grad(&self, id: NodeId) -> bool {
        self.nodes[id.0].requires_grad
    }

    /// A differentiable leaf.
    pub fn param(&mut self, value: Tensor) -> NodeId {
        let rg = self.recording;
        self.push(value, Op::Leaf, rg)
    }

    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.push(value, Op::Leaf, false)
    }

    /// Runs `f` with recording disabled: every node it creates is a constant.
    pub fn no_grad<R>(&mut self, f: impl FnOnce(&mut Self) -> R) -> R {
        let prev = self.recording;
        self.recording = false;
        let out = f(self);
        self.recording = prev;
        out
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> NodeId {
        self.nodes.push(Node { value, op, requires_grad });
        NodeId(self.nodes.len() - 1)
    }

    fn record(&mut self, value: Tensor, op: Op, inputs: &[NodeId]) -> NodeId {
        let rg = self.recording && inputs.iter().any(|i| self.nodes[i.0].requires_grad);
        self.push(value, op, rg)
    }

    fn check(&self, id: NodeId) -> Result<()> {
        if id.0 < self.nodes.len() {
            Ok(())
        } else {
            Err(Error::GraphNotRecorded(id.0))
        }
    }

    fn same_shape(&self, a: NodeId, b: NodeId, what: &str) -> Result<()> {
        self.check(a)?;
        self.check(b)?;
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa != sb {
            return Err(Error::ShapeMismatch(format!("{what}: {sa:?} vs {sb:?}")));
        }
        Ok(())
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId, ta: bool, tb: bool) -> Result<NodeId> {
        self.check(a)?;
        self.check(b)?;
        let (ar, ac) = self.value(a).shape();
        let (br, bc) = self.value(b).shape();
        let inner_a = if ta { ar } else { ac };
        let inner_b = if tb { bc } else { br };
        if inner_a != inner_b {
            return Err(Error::ShapeMismatch(format!("matmul {ar}x{ac} (t={ta}) by {br}x{bc} (t={tb})")));
        }
        let v = matmul(self.value(a), self.value(b), ta, tb);
        Ok(self.record(v, Op::MatMul { a, b, ta, tb }, &[a, b]))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape(a, b, "add")?;
        let v = self.value(a).zip(self.value(b), |x, y| x + y);
        Ok(self.record(v, Op::Add(a, b), &[a, b]))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape(a, b, "sub")?;
        let v = self.value(a).zip(self.value(b), |x, y| x - y);
        Ok(self.record(v, Op::Sub(a, b), &[a, b]))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape(a, b, "mul")?;
        let v = self.value(a).zip(self.value(b), |x, y| x * y);
        Ok(self.record(v, Op::Mul(a, b), &[a, b]))
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> Result<NodeId> {
        self.check(a)?;
        let v = self.value(a).map(|x| c * x);
        Ok(self.record(v, Op::Scale(a, c), &[a]))
    }

    pub fn add_scalar(&mut self, a: NodeId, c: f64) -> Result<NodeId> {
        self.check(a)?;
        let v = self.value(a).map(|x| x + c);
        Ok(self.record(v, Op::AddScalar(a), &[a]))
    }

    /// `[r,1] → [r,cols]` by repeating the column.
    pub fn broadcast_cols(&mut self, a: NodeId, cols: usize) -> Result<NodeId> {
        self.check(a)?;
        let t = self.value(a);
        if t.cols() != 1 {
            return Err(Error::ShapeMismatch(format!("broadcast_cols needs a column, got {:?}", t.shape())));
        }
        let mut data = Vec::with_capacity(t.rows() * cols);
        for r in 0..t.rows() {
            data.extend(std::iter::repeat_n(t.data()[r], cols));
        }
        let v = Tensor::from_vec(t.rows(), cols, data)?;
        Ok(self.record(v, Op::BroadcastCols(a), &[a]))
    }

    /// `[r,c] → [r,1]` by summing each row.
    pub fn sum_cols(&mut self, a: NodeId) -> Result<NodeId> {
        self.check(a)?;
        let t = self.value(a);
        let c = t.cols();
        let data = t.data().chunks(c.max(1)).map(|row| row.iter().sum()).collect();
        let v = Tensor::from_vec(t.rows(), 1, data)?;
        Ok(self.record(v, Op::SumCols(a), &[a]))
    }

    /// `[1,c] → [rows,c]` by repeating the row.
    pub fn broadcast_rows(&mut self, a: NodeId, rows: usize) -> Result<NodeId> {
        self.check(a)?;
        let t = self.value(a);
        if t.rows() != 1 {
            return Err(Error::ShapeMismatch(format!("broadcast_rows needs a row, got {:?}", t.shape())));
        }
        let data = t.data().repeat(rows);
        let v = Tensor::from_vec(rows, t.cols(), data)?;
        Ok(self.record(v, Op::BroadcastRows(a), &[a]))
    }

    /// `[r,c] → [1,c]` by summing each column.
    pub fn sum_rows(&mut self, a: NodeId) -> Result<NodeId> {
        self.check(a)?;
        let t = self.value(a);
        let c = t.cols();
        let mut data = vec![0.0; c];
        for row in t.data().chunks(c.max(1)) {
            for (o, x) in data.iter_mut().zip(row) {
                *o += x;
            }
        }
        let v = Tensor::from_vec(1, c, data)?;
        Ok(self.record(v, Op::SumRows(a), &[a]))
    }

    /// Sum of all entries as a `[1,1]` node.
    pub fn sum(&mut self, a: NodeId) -> Result<NodeId> {
        let s = self.sum_cols(a)?;
        self.sum_rows(s)
    }

    pub fn relu(&mut self, a: NodeId) -> Result<NodeId> {
        self.check(a)?;
        let v = self.value(a).map(|x| x.max(0.0));
        Ok(self.record(v, Op::Relu(a), &[a]))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> Result<NodeId> {
        self.check(a)?;
        let v = self.value(a).map(|x| 1.0 / (1.0 + (-x).exp()));
        Ok(self.record(v, Op::Sigmoid(a), &[a]))
    }

    pub fn powf(&mut self, a: NodeId, p: f64) -> Result<NodeId> {
        self.check(a)?;
        let v = self.value(a).map(|x| x.powf(p));
        Ok(self.record(v, Op::Powf(a, p), &[a]))
    }

    pub fn square(&mut self, a: NodeId) -> Result<NodeId> {
        self.mul(a, a)
    }

    /// Flat gather: `out[i] = a[idx[i]]`, or zero where `idx[i] == PAD`.
    pub fn gather(&mut self, a: NodeId, idx: Rc<[u32]>, rows: usize, cols: usize) -> Result<NodeId> {
        self.check(a)?;
        if idx.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!("gather of {} indices into {rows}x{cols}", idx.len())));
        }
        let src = self.value(a).data();
        if idx.iter().any(|i| *i != PAD && *i as usize >= src.len()) {
            return Err(Error::ShapeMismatch("gather index out of range".into()));
        }
        let data = idx.iter().map(|i| if *i == PAD { 0.0 } else { src[*i as usize] }).collect();
        let v = Tensor::from_vec(rows, cols, data)?;
        Ok(self.record(v, Op::Gather(a, idx), &[a]))
    }

    /// Adjoint of [`Graph::gather`]: `out[idx[i]] += a[i]`.
    pub fn scatter_add(&mut self, a: NodeId, idx: Rc<[u32]>, rows: usize, cols: usize) -> Result<NodeId> {
        self.check(a)?;
        if idx.len() != self.value(a).len() {
            return Err(Error::ShapeMismatch("scatter index length".into()));
        }
        let mut data = vec![0.0; rows * cols];
        for (i, x) in idx.iter().zip(self.value(a).data()) {
            if *i != PAD {
                let slot = data
                    .get_mut(*i as usize)
                    .ok_or_else(|| Error::ShapeMismatch("scatter index out of range".into()))?;
                *slot += x;
            }
        }
        let v = Tensor::from_vec(rows, cols, data)?;
        Ok(self.record(v, Op::ScatterAdd(a, idx), &[a]))
    }

    pub fn reshape(&mut self, a: NodeId, rows: usize, cols: usize) -> Result<NodeId> {
        self.check(a)?;
        if self.value(a).len() != rows * cols {
            return Err(Error::ShapeMismatch(format!("reshape {:?} to {rows}x{cols}", self.value(a).shape())));
        }
        let v = self.value(a).reshaped(rows, cols);
        Ok(self.record(v, Op::Reshape(a), &[a]))
    }

    /// Gradients of the scalar `loss` with respect to each node in `wrt`.
    ///
    /// With `create_graph` the returned gradients are recorded nodes that can
    /// be differentiated again; otherwise they are constants. Nodes the loss
    /// does not depend on get zero gradients.
    pub fn grad(&mut self, loss: NodeId, wrt: &[NodeId], create_graph: bool) -> Result<Vec<NodeId>> {
        self.check(loss)?;
        for w in wrt {
            self.check(*w)?;
        }
        if self.value(loss).len() != 1 {
            return Err(Error::ShapeMismatch(format!("loss must be scalar, got {:?}", self.value(loss).shape())));
        }
        let prev = self.recording;
        self.recording = create_graph && prev;
        let result = self.backward(loss, wrt);
        self.recording = prev;
        result
    }

    fn backward(&mut self, loss: NodeId, wrt: &[NodeId]) -> Result<Vec<NodeId>> {
        // Only nodes downstream of `wrt` need gradients; without this pruning a
        // loss at the end of an unrolled inner loop would backpropagate through
        // every earlier step.
        let mut live = vec![false; loss.0 + 1];
        for w in wrt.iter().filter(|w| w.0 <= loss.0) {
            live[w.0] = true;
        }
        let start = wrt.iter().map(|w| w.0).min().unwrap_or(loss.0 + 1);
        for i in start..=loss.0 {
            if !live[i] && self.nodes[i].requires_grad {
                live[i] = self.nodes[i].op.inputs().iter().flatten().any(|n| live[n.0]);
            }
        }
        let mut grads: Vec<Option<NodeId>> = vec![None; loss.0 + 1];
        if self.nodes[loss.0].requires_grad && live[loss.0] {
            grads[loss.0] = Some(self.constant(Tensor::scalar(1.0)));
        }
        self.live = live;
        let result = self.accumulate(loss, &mut grads);
        self.live = Vec::new();
        result?;
        wrt.iter()
            .map(|w| match grads.get(w.0).copied().flatten() {
                Some(g) => Ok(g),
                None => {
                    let (r, c) = self.value(*w).shape();
                    Ok(self.constant(Tensor::zeros(r, c)))
                }
            })
            .collect()
    }

    fn accumulate(&mut self, loss: NodeId, grads: &mut [Option<NodeId>]) -> Result<()> {
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i] else { continue };
            if !self.nodes[i].requires_grad {
                continue;
            }
            let op = self.nodes[i].op.clone();
            for (input, gi) in self.input_grads(NodeId(i), &op, g)? {
                grads[input.0] = Some(match grads[input.0] {
                    Some(prev) => self.add(prev, gi)?,
                    None => gi,
                });
            }
        }
        Ok(())
    }

    fn input_grads(&mut self, out: NodeId, op: &Op, g: NodeId) -> Result<Vec<(NodeId, NodeId)>> {
        let needs = |s: &Self, n: NodeId| s.nodes[n.0].requires_grad && s.live.get(n.0).copied().unwrap_or(false);
        Ok(match *op {
            Op::Leaf => Vec::new(),
            Op::MatMul { a, b, ta, tb } => {
                let mut v = Vec::new();
                if needs(self, a) {
                    let ga = match (ta, tb) {
                        (false, false) => self.matmul(g, b, false, true)?,
                        (false, true) => self.matmul(g, b, false, false)?,
                        (true, false) => self.matmul(b, g, false, true)?,
                        (true, true) => self.matmul(b, g, true, true)?,
                    };
                    v.push((a, ga));
                }
                if needs(self, b) {
                    let gb = match (ta, tb) {
                        (false, false) => self.matmul(a, g, true, false)?,
                        (false, true) => self.matmul(g, a, true, false)?,
                        (true, false) => self.matmul(a, g, false, false)?,
                        (true, true) => self.matmul(g, a, true, true)?,
                    };
                    v.push((b, gb));
                }
                v
            }
            Op::Add(a, b) => vec![(a, g), (b, g)],
            Op::Sub(a, b) => {
                let nb = if needs(self, b) { Some(self.scale(g, -1.0)?) } else { None };
                let mut v = vec![(a, g)];
                v.extend(nb.map(|x| (b, x)));
                v
            }
            Op::Mul(a, b) => {
                let mut v = Vec::new();
                if needs(self, a) {
                    v.push((a, self.mul(g, b)?));
                }
                if needs(self, b) {
                    v.push((b, self.mul(g, a)?));
                }
                v
            }
            Op::Scale(a, c) => vec![(a, self.scale(g, c)?)],
            Op::AddScalar(a) => vec![(a, g)],
            Op::BroadcastCols(a) => vec![(a, self.sum_cols(g)?)],
            Op::SumCols(a) => {
                let cols = self.value(a).cols();
                vec![(a, self.broadcast_cols(g, cols)?)]
            }
            Op::BroadcastRows(a) => vec![(a, self.sum_rows(g)?)],
            Op::SumRows(a) => {
                let rows = self.value(a).rows();
                vec![(a, self.broadcast_rows(g, rows)?)]
            }
            Op::Relu(a) => {
                let mask = self.value(a).map(|x| if x > 0.0 { 1.0 } else { 0.0 });
                let mask = self.constant(mask);
                vec![(a, self.mul(g, mask)?)]
            }
            Op::Sigmoid(a) => {
                // s(1 − s) with s the recorded output, so the rule stays differentiable.
                let one_minus = self.scale(out, -1.0)?;
                let one_minus = self.add_scalar(one_minus, 1.0)?;
                let ds = self.mul(out, one_minus)?;
                vec![(a, self.mul(g, ds)?)]
            }
            Op::Powf(a, p) => {
                let d = self.powf(a, p - 1.0)?;
                let d = self.scale(d, p)?;
                vec![(a, self.mul(g, d)?)]
            }
            Op::Gather(a, ref idx) => {
                let (r, c) = self.value(a).shape();
                vec![(a, self.scatter_add(g, idx.clone(), r, c)?)]
            }
            Op::ScatterAdd(a, ref idx) => {
                let (r, c) = self.value(a).shape();
                vec![(a, self.gather(g, idx.clone(), r, c)?)]
            }
            Op::Reshape(a) => {
                let (r, c) = self.value(a).shape();
                vec![(a, self.reshape(g, r, c)?)]
            }
        })
    }
}
