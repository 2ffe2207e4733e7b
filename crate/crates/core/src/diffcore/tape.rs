use crate::error::{Error, Result};

use super::tensor::Tensor;

/// Handle to a node recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op {
    Leaf { name: String },
    Constant(Tensor),
    MatVec(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Div(NodeId, NodeId),
    Scale(NodeId, f64),
    AddScalar(NodeId, f64),
    ClampMin(NodeId, f64),
    Sigmoid(NodeId),
    Tanh(NodeId),
    Softplus(NodeId),
    Square(NodeId),
    Sqrt(NodeId),
    Ln(NodeId),
    Mean(NodeId),
    Sum(NodeId),
    Concat(Vec<NodeId>),
    Slice { input: NodeId, start: usize, len: usize },
    Reshape(NodeId, Vec<usize>),
}

impl Op {
    fn kind(&self) -> &'static str {
        match self {
            Op::Leaf { .. } => "leaf",
            Op::Constant(_) => "constant",
            Op::MatVec(..) => "matvec",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Div(..) => "div",
            Op::Scale(..) => "scale",
            Op::AddScalar(..) => "add_scalar",
            Op::ClampMin(..) => "clamp_min",
            Op::Sigmoid(_) => "sigmoid",
            Op::Tanh(_) => "tanh",
            Op::Softplus(_) => "softplus",
            Op::Square(_) => "square",
            Op::Sqrt(_) => "sqrt",
            Op::Ln(_) => "ln",
            Op::Mean(_) => "mean",
            Op::Sum(_) => "sum",
            Op::Concat(_) => "concat",
            Op::Slice { .. } => "slice",
            Op::Reshape(..) => "reshape",
        }
    }
}

/// A recorded computation graph.
///
/// Nodes are appended in construction order, so every node's inputs precede
/// it and the node list is already a topological order. The tape stores the
/// graph only; values live in [`Values`], so one tape can be evaluated many
/// times with different leaf bindings.
#[derive(Clone, Debug, Default)]
pub struct Tape {
    nodes: Vec<Op>,
    leaves: Vec<NodeId>,
}

/// Leaf values for one evaluation of a tape.
#[derive(Clone, Debug)]
pub struct Bindings {
    slots: Vec<Option<Tensor>>,
}

impl Bindings {
    /// Bind `value` to `leaf`. Fails if `leaf` is not a leaf of the tape the
    /// bindings were created from.
    pub fn set(&mut self, tape: &Tape, leaf: NodeId, value: Tensor) -> Result<()> {
        let slot = tape.leaf_slot(leaf)?;
        self.slots[slot] = Some(value);
        Ok(())
    }
}

/// Forward values of every node, indexed by [`NodeId`].
#[derive(Clone, Debug)]
pub struct Values {
    values: Vec<Tensor>,
}

impl Values {
    pub fn get(&self, id: NodeId) -> &Tensor {
        &self.values[id.0]
    }

    pub fn scalar(&self, id: NodeId) -> Option<f64> {
        self.values[id.0].item()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Gradients of a scalar seed with respect to each leaf.
#[derive(Clone, Debug)]
pub struct Gradients {
    leaves: Vec<NodeId>,
    grads: Vec<Tensor>,
}

impl Gradients {
    pub fn get(&self, leaf: NodeId) -> Option<&Tensor> {
        self.leaves
            .iter()
            .position(|&l| l == leaf)
            .map(|i| &self.grads[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &Tensor)> {
        self.leaves.iter().copied().zip(self.grads.iter())
    }
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

    pub fn leaves(&self) -> &[NodeId] {
        &self.leaves
    }

    fn push(&mut self, op: Op) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(op);
        id
    }

    fn leaf_slot(&self, leaf: NodeId) -> Result<usize> {
        self.leaves
            .iter()
            .position(|&l| l == leaf)
            .ok_or_else(|| Error::InvalidArgument(format!("node {} is not a leaf", leaf.0)))
    }

    /// An input whose value is supplied at evaluation time.
    pub fn leaf(&mut self, name: impl Into<String>) -> NodeId {
        let id = self.push(Op::Leaf { name: name.into() });
        self.leaves.push(id);
        id
    }

    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Constant(value))
    }

    pub fn scalar(&mut self, value: f64) -> NodeId {
        self.constant(Tensor::scalar(value))
    }

    pub fn matvec(&mut self, matrix: NodeId, vector: NodeId) -> NodeId {
        self.push(Op::MatVec(matrix, vector))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Add(a, b))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Mul(a, b))
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Div(a, b))
    }

    pub fn scale(&mut self, a: NodeId, factor: f64) -> NodeId {
        self.push(Op::Scale(a, factor))
    }

    pub fn neg(&mut self, a: NodeId) -> NodeId {
        self.scale(a, -1.0)
    }

    pub fn add_scalar(&mut self, a: NodeId, offset: f64) -> NodeId {
        self.push(Op::AddScalar(a, offset))
    }

    /// Elementwise `max(a, floor)`. The gradient passes only where `a > floor`.
    pub fn clamp_min(&mut self, a: NodeId, floor: f64) -> NodeId {
        self.push(Op::ClampMin(a, floor))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Tanh(a))
    }

    pub fn softplus(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Softplus(a))
    }

    pub fn square(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Square(a))
    }

    pub fn sqrt(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Sqrt(a))
    }

    pub fn ln(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Ln(a))
    }

    /// Arithmetic mean of all elements, as a scalar.
    pub fn mean(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Mean(a))
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Sum(a))
    }

    /// Concatenate scalars and vectors into one vector.
    pub fn concat(&mut self, parts: &[NodeId]) -> NodeId {
        self.push(Op::Concat(parts.to_vec()))
    }

    /// Contiguous run of `len` elements of a flattened tensor, as a vector.
    pub fn slice(&mut self, input: NodeId, start: usize, len: usize) -> NodeId {
        self.push(Op::Slice { input, start, len })
    }

    /// Single element of a flattened tensor, as a scalar.
    pub fn element(&mut self, input: NodeId, index: usize) -> NodeId {
        let s = self.slice(input, index, 1);
        self.reshape(s, &[])
    }

    pub fn reshape(&mut self, input: NodeId, shape: &[usize]) -> NodeId {
        self.push(Op::Reshape(input, shape.to_vec()))
    }

    pub fn bindings(&self) -> Bindings {
        Bindings {
            slots: vec![None; self.leaves.len()],
        }
    }

    /// Bindings from leaf values given in leaf-creation order.
    pub fn bind_all(&self, values: Vec<Tensor>) -> Result<Bindings> {
        if values.len() != self.leaves.len() {
            return Err(Error::InvalidArgument(format!(
                "tape has {} leaves, got {} values",
                self.leaves.len(),
                values.len()
            )));
        }
        Ok(Bindings {
            slots: values.into_iter().map(Some).collect(),
        })
    }

    /// Evaluate every node.
    pub fn forward(&self, bindings: &Bindings) -> Result<Values> {
        let mut values: Vec<Tensor> = Vec::with_capacity(self.nodes.len());
        let mut leaf_cursor = 0;
        for (idx, op) in self.nodes.iter().enumerate() {
            let value = match op {
                Op::Leaf { name } => {
                    let v = bindings
                        .slots
                        .get(leaf_cursor)
                        .and_then(|s| s.clone())
                        .ok_or_else(|| Error::Shape {
                            node: idx,
                            op: "leaf",
                            detail: format!("leaf '{name}' is unbound"),
                        })?;
                    leaf_cursor += 1;
                    v
                }
                _ => eval(idx, op, &values)?,
            };
            if !value.all_finite() {
                return Err(Error::Overflow {
                    node: idx,
                    op: op.kind(),
                });
            }
            values.push(value);
        }
        Ok(Values { values })
    }

    /// Reverse sweep from a scalar `seed`, returning d(seed)/d(leaf) for every
    /// leaf. Accumulation visits nodes in reverse creation order.
    pub fn backward(&self, values: &Values, seed: NodeId) -> Result<Gradients> {
        if values.values.len() != self.nodes.len() {
            return Err(Error::InvalidArgument(
                "values were not produced by this tape".into(),
            ));
        }
        let seed_value = values.get(seed);
        if !seed_value.is_scalar() {
            return Err(Error::Shape {
                node: seed.0,
                op: self.nodes[seed.0].kind(),
                detail: format!(
                    "backward seed must be scalar, has shape {:?}",
                    seed_value.shape()
                ),
            });
        }
        let mut adjoints: Vec<Option<Tensor>> = vec![None; seed.0 + 1];
        adjoints[seed.0] = Some(Tensor::from_parts(
            seed_value.shape().to_vec(),
            vec![1.0],
        ));

        for idx in (0..=seed.0).rev() {
            let Some(grad) = adjoints[idx].take() else {
                continue;
            };
            let op = &self.nodes[idx];
            if matches!(op, Op::Leaf { .. }) {
                adjoints[idx] = Some(grad);
                continue;
            }
            for (input, contrib) in vjp(op, &values.values, &values.values[idx], &grad) {
                match &mut adjoints[input.0] {
                    Some(acc) => acc.add_assign(&contrib),
                    slot @ None => *slot = Some(contrib),
                }
            }
        }

        let grads = self
            .leaves
            .iter()
            .map(|&leaf| {
                adjoints
                    .get_mut(leaf.0)
                    .and_then(Option::take)
                    .unwrap_or_else(|| Tensor::zeros(values.get(leaf).shape()))
            })
            .collect();
        Ok(Gradients {
            leaves: self.leaves.clone(),
            grads,
        })
    }
}

fn shape_err(node: usize, op: &Op, detail: String) -> Error {
    Error::Shape {
        node,
        op: op.kind(),
        detail,
    }
}

fn same_shape(node: usize, op: &Op, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(shape_err(
            node,
            op,
            format!("operand shapes {:?} and {:?} differ", a.shape(), b.shape()),
        ));
    }
    Ok(())
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn eval(idx: usize, op: &Op, values: &[Tensor]) -> Result<Tensor> {
    let v = |id: &NodeId| &values[id.0];
    Ok(match op {
        Op::Leaf { .. } => unreachable!("leaves are bound, not evaluated"),
        Op::Constant(t) => t.clone(),
        Op::MatVec(m, x) => {
            let (m, x) = (v(m), v(x));
            if m.rank() != 2 || x.rank() != 1 || m.shape()[1] != x.len() {
                return Err(shape_err(
                    idx,
                    op,
                    format!(
                        "cannot multiply {:?} matrix by {:?} vector",
                        m.shape(),
                        x.shape()
                    ),
                ));
            }
            let (rows, cols) = (m.shape()[0], m.shape()[1]);
            let md = m.data();
            let xd = x.data();
            let out = (0..rows)
                .map(|r| {
                    md[r * cols..(r + 1) * cols]
                        .iter()
                        .zip(xd)
                        .map(|(a, b)| a * b)
                        .sum()
                })
                .collect();
            Tensor::from_parts(vec![rows], out)
        }
        Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) | Op::Div(a, b) => {
            let (a, b) = (v(a), v(b));
            same_shape(idx, op, a, b)?;
            match op {
                Op::Add(..) => a.zip_map(b, |x, y| x + y),
                Op::Sub(..) => a.zip_map(b, |x, y| x - y),
                Op::Mul(..) => a.zip_map(b, |x, y| x * y),
                _ => a.zip_map(b, |x, y| x / y),
            }
        }
        Op::Scale(a, k) => v(a).map(|x| x * k),
        Op::AddScalar(a, k) => v(a).map(|x| x + k),
        Op::ClampMin(a, lo) => v(a).map(|x| x.max(*lo)),
        Op::Sigmoid(a) => v(a).map(sigmoid),
        Op::Tanh(a) => v(a).map(f64::tanh),
        Op::Softplus(a) => v(a).map(softplus),
        Op::Square(a) => v(a).map(|x| x * x),
        Op::Sqrt(a) => v(a).map(f64::sqrt),
        Op::Ln(a) => v(a).map(f64::ln),
        Op::Mean(a) => {
            let a = v(a);
            if a.is_empty() {
                return Err(shape_err(idx, op, "mean of empty tensor".into()));
            }
            Tensor::scalar(a.data().iter().sum::<f64>() / a.len() as f64)
        }
        Op::Sum(a) => Tensor::scalar(v(a).data().iter().sum()),
        Op::Concat(parts) => {
            let mut out = Vec::new();
            for p in parts {
                let t = v(p);
                if t.rank() > 1 {
                    return Err(shape_err(
                        idx,
                        op,
                        format!("concat operand has rank {}", t.rank()),
                    ));
                }
                out.extend_from_slice(t.data());
            }
            Tensor::vector(out)
        }
        Op::Slice { input, start, len } => {
            let t = v(input);
            if start + len > t.len() {
                return Err(shape_err(
                    idx,
                    op,
                    format!("slice {start}..{} of {} elements", start + len, t.len()),
                ));
            }
            Tensor::vector(t.data()[*start..start + len].to_vec())
        }
        Op::Reshape(input, shape) => {
            let t = v(input);
            let n: usize = shape.iter().product();
            if n != t.len() {
                return Err(shape_err(
                    idx,
                    op,
                    format!("cannot reshape {:?} into {shape:?}", t.shape()),
                ));
            }
            Tensor::from_parts(shape.clone(), t.data().to_vec())
        }
    })
}

/// Vector-Jacobian products of one node: the adjoint contribution it sends to
/// each of its inputs.
fn vjp(op: &Op, values: &[Tensor], out: &Tensor, g: &Tensor) -> Vec<(NodeId, Tensor)> {
    let v = |id: &NodeId| &values[id.0];
    match op {
        Op::Leaf { .. } | Op::Constant(_) => Vec::new(),
        Op::MatVec(m, x) => {
            let (mt, xt) = (v(m), v(x));
            let (rows, cols) = (mt.shape()[0], mt.shape()[1]);
            let gd = g.data();
            let xd = xt.data();
            let md = mt.data();
            let mut dm = Vec::with_capacity(rows * cols);
            for &gr in gd {
                dm.extend(xd.iter().map(|&xc| gr * xc));
            }
            let mut dx = vec![0.0; cols];
            for (r, &gr) in gd.iter().enumerate() {
                for (c, d) in dx.iter_mut().enumerate() {
                    *d += md[r * cols + c] * gr;
                }
            }
            vec![
                (*m, Tensor::from_parts(vec![rows, cols], dm)),
                (*x, Tensor::from_parts(vec![cols], dx)),
            ]
        }
        Op::Add(a, b) => vec![(*a, g.clone()), (*b, g.clone())],
        Op::Sub(a, b) => vec![(*a, g.clone()), (*b, g.map(|x| -x))],
        Op::Mul(a, b) => vec![(*a, g.zip_map(v(b), |gi, bi| gi * bi)), (*b, g.zip_map(v(a), |gi, ai| gi * ai))],
        Op::Div(a, b) => {
            let bt = v(b);
            let da = g.zip_map(bt, |gi, bi| gi / bi);
            // d(a/b)/db = -out/b
            let db_tmp = out.zip_map(bt, |oi, bi| -oi / bi);
            vec![(*a, da), (*b, g.zip_map(&db_tmp, |gi, di| gi * di))]
        }
        Op::Scale(a, k) => vec![(*a, g.map(|x| x * k))],
        Op::AddScalar(a, _) => vec![(*a, g.clone())],
        Op::ClampMin(a, lo) => vec![(*a, g.zip_map(v(a), |gi, ai| if ai > *lo { gi } else { 0.0 }))],
        Op::Sigmoid(a) => vec![(*a, g.zip_map(out, |gi, s| gi * s * (1.0 - s)))],
        Op::Tanh(a) => vec![(*a, g.zip_map(out, |gi, t| gi * (1.0 - t * t)))],
        Op::Softplus(a) => vec![(*a, g.zip_map(v(a), |gi, x| gi * sigmoid(x)))],
        Op::Square(a) => vec![(*a, g.zip_map(v(a), |gi, x| 2.0 * gi * x))],
        Op::Sqrt(a) => vec![(*a, g.zip_map(out, |gi, s| 0.5 * gi / s))],
        Op::Ln(a) => vec![(*a, g.zip_map(v(a), |gi, x| gi / x))],
        Op::Mean(a) => {
            let at = v(a);
            let share = g.data()[0] / at.len() as f64;
            vec![(*a, Tensor::from_parts(at.shape().to_vec(), vec![share; at.len()]))]
        }
        Op::Sum(a) => {
            let at = v(a);
            vec![(*a, Tensor::from_parts(at.shape().to_vec(), vec![g.data()[0]; at.len()]))]
        }
        Op::Concat(parts) => {
            let mut offset = 0;
            parts
                .iter()
                .map(|p| {
                    let t = v(p);
                    let piece = g.data()[offset..offset + t.len()].to_vec();
                    offset += t.len();
                    (*p, Tensor::from_parts(t.shape().to_vec(), piece))
                })
                .collect()
        }
        Op::Slice { input, start, len } => {
            let t = v(input);
            let mut full = vec![0.0; t.len()];
            full[*start..start + len].copy_from_slice(g.data());
            vec![(*input, Tensor::from_parts(t.shape().to_vec(), full))]
        }
        Op::Reshape(input, _) => {
            let t = v(input);
            vec![(*input, Tensor::from_parts(t.shape().to_vec(), g.data().to_vec()))]
        }
    }
}
