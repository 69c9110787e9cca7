//! Tape-based reverse-mode automatic differentiation.
//!
//! A [`Graph`] records every operation applied during a forward pass. Nodes
//! are appended in evaluation order, so the node list is already a
//! topological order and [`Graph::backward`] only needs a single reverse
//! sweep. Parameter leaves borrow their values from a [`ParamStore`]; all
//! other node values are owned by the graph.
//!
//! ```
//! use udssm::tensor::{Graph, ParamStore, Tensor};
//!
//! let mut store = ParamStore::new();
//! let x = store.add("x", Tensor::scalar(3.0)).unwrap();
//!
//! let mut g = Graph::new(&store);
//! let xv = g.param(x);
//! let y = g.mul(xv, xv).unwrap();
//! let grads = g.backward(y).unwrap();
//! assert_eq!(g.value(y).item(), 9.0);
//! assert_eq!(grads.param(x).unwrap(), &[6.0]);
//! ```

use std::borrow::Cow;
use std::collections::{BTreeMap, HashMap};

use super::{ParamId, ParamStore, Tensor};
use crate::error::{Error, Result};

/// Handle to a node in a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Unary {
    Tanh,
    Sigmoid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Binary {
    Add,
    Sub,
    Mul,
}

#[derive(Debug)]
enum Op {
    Constant,
    Input,
    Param(ParamId),
    Gather {
        table: ParamId,
        rows: Vec<usize>,
    },
    MatMul(Var, Var),
    Binary(Binary, Var, Var),
    Unary(Unary, Var),
    AddColumnBias(Var, Var),
    Concat {
        inputs: Vec<Var>,
        axis: usize,
    },
    Slice {
        input: Var,
        axis: usize,
        start: usize,
    },
    Transpose(Var),
    Reshape(Var),
    Dot(Var, Var),
    Softmax(Var),
    LogSoftmax(Var),
    Scale(Var, f64),
    Sum(Var),
}

struct Node<'s> {
    op: Op,
    value: Cow<'s, Tensor>,
    requires_grad: bool,
}

/// Gradients produced by one backward pass.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Gradients {
    params: BTreeMap<ParamId, Vec<f64>>,
    inputs: HashMap<Var, Vec<f64>>,
}

impl Gradients {
    pub fn param(&self, id: ParamId) -> Option<&[f64]> {
        self.params.get(&id).map(Vec::as_slice)
    }

    pub fn input(&self, var: Var) -> Option<&[f64]> {
        self.inputs.get(&var).map(Vec::as_slice)
    }

    /// Parameter gradients in registration order.
    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &[f64])> {
        self.params.iter().map(|(id, g)| (*id, g.as_slice()))
    }

    pub fn param_mut(&mut self, id: ParamId) -> Option<&mut Vec<f64>> {
        self.params.get_mut(&id)
    }

    pub fn scale(&mut self, factor: f64) {
        for g in self.params.values_mut() {
            g.iter_mut().for_each(|v| *v *= factor);
        }
    }
}

/// Recorded computation over tensors.
pub struct Graph<'s> {
    store: &'s ParamStore,
    nodes: Vec<Node<'s>>,
    bound: HashMap<ParamId, Var>,
}

impl<'s> Graph<'s> {
    pub fn new(store: &'s ParamStore) -> Self {
        Graph {
            store,
            nodes: Vec::new(),
            bound: HashMap::new(),
        }
    }

    pub fn store(&self) -> &'s ParamStore {
        self.store
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    fn push(&mut self, op: Op, value: Tensor, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            op,
            value: Cow::Owned(value),
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// A leaf that never receives gradients.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(Op::Constant, value, false)
    }

    /// A leaf whose gradient is reported through [`Gradients::input`].
    pub fn input(&mut self, value: Tensor) -> Var {
        self.push(Op::Input, value, true)
    }

    /// Binds a stored parameter. Repeated calls return the same node, so
    /// gradients from every use accumulate on one leaf.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.bound.get(&id) {
            return *v;
        }
        self.nodes.push(Node {
            op: Op::Param(id),
            value: Cow::Borrowed(self.store.get(id)),
            requires_grad: true,
        });
        let v = Var(self.nodes.len() - 1);
        self.bound.insert(id, v);
        v
    }

    /// Gathers rows of a `[rows, width]` parameter table into the columns of
    /// a `[width, rows.len()]` matrix.
    pub fn gather_columns(&mut self, table: ParamId, rows: &[usize]) -> Result<Var> {
        let t = self.store.get(table);
        let (n, width) = t
            .dims2()
            .ok_or_else(|| Error::dim("gather_columns", t.shape(), &[]))?;
        if rows.is_empty() {
            return Err(Error::dim("gather_columns", t.shape(), &[0]));
        }
        let cols = rows.len();
        let mut out = vec![0.0; width * cols];
        for (c, &r) in rows.iter().enumerate() {
            if r >= n {
                return Err(Error::Bounds {
                    op: "gather_columns",
                    detail: format!("row {r} of table with {n} rows"),
                });
            }
            let src = &t.data()[r * width..(r + 1) * width];
            for (k, v) in src.iter().enumerate() {
                out[k * cols + c] = *v;
            }
        }
        let value = Tensor::new(vec![width, cols], out)?;
        Ok(self.push(
            Op::Gather {
                table,
                rows: rows.to_vec(),
            },
            value,
            true,
        ))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        let (m, k) = ta
            .dims2()
            .ok_or_else(|| Error::dim("matmul", ta.shape(), tb.shape()))?;
        let (k2, n) = tb
            .dims2()
            .ok_or_else(|| Error::dim("matmul", ta.shape(), tb.shape()))?;
        if k != k2 {
            return Err(Error::dim("matmul", ta.shape(), tb.shape()));
        }
        let out = matmul_kernel(ta.data(), tb.data(), m, k, n);
        let value = Tensor::new(vec![m, n], out)?;
        let rg = self.needs(&[a, b]);
        Ok(self.push(Op::MatMul(a, b), value, rg))
    }

    pub fn binary(&mut self, kind: Binary, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(Error::dim(
                match kind {
                    Binary::Add => "add",
                    Binary::Sub => "sub",
                    Binary::Mul => "mul",
                },
                ta.shape(),
                tb.shape(),
            ));
        }
        let f: fn(f64, f64) -> f64 = match kind {
            Binary::Add => |x, y| x + y,
            Binary::Sub => |x, y| x - y,
            Binary::Mul => |x, y| x * y,
        };
        let out = ta
            .data()
            .iter()
            .zip(tb.data())
            .map(|(x, y)| f(*x, *y))
            .collect();
        let value = Tensor::new(ta.shape().to_vec(), out)?;
        let rg = self.needs(&[a, b]);
        Ok(self.push(Op::Binary(kind, a, b), value, rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(Binary::Add, a, b)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(Binary::Sub, a, b)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(Binary::Mul, a, b)
    }

    pub fn unary(&mut self, kind: Unary, a: Var) -> Var {
        let ta = self.value(a);
        let f: fn(f64) -> f64 = match kind {
            Unary::Tanh => f64::tanh,
            Unary::Sigmoid => sigmoid,
        };
        let value = Tensor::new(
            ta.shape().to_vec(),
            ta.data().iter().map(|x| f(*x)).collect(),
        )
        .expect("shape preserved");
        let rg = self.needs(&[a]);
        self.push(Op::Unary(kind, a), value, rg)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(Unary::Tanh, a)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(Unary::Sigmoid, a)
    }

    /// `m + b ⊗ 1ᵀ`: adds the length-`l` vector `b` to every column of the
    /// `l×N` matrix `m`.
    pub fn add_column_bias(&mut self, m: Var, b: Var) -> Result<Var> {
        let (tm, tb) = (self.value(m), self.value(b));
        let (rows, cols) = tm
            .dims2()
            .ok_or_else(|| Error::dim("add_column_bias", tm.shape(), tb.shape()))?;
        if tb.shape() != [rows] {
            return Err(Error::dim("add_column_bias", tm.shape(), tb.shape()));
        }
        let mut out = tm.data().to_vec();
        for r in 0..rows {
            let bias = tb.data()[r];
            out[r * cols..(r + 1) * cols]
                .iter_mut()
                .for_each(|v| *v += bias);
        }
        let value = Tensor::new(vec![rows, cols], out)?;
        let rg = self.needs(&[m, b]);
        Ok(self.push(Op::AddColumnBias(m, b), value, rg))
    }

    pub fn concat(&mut self, inputs: &[Var], axis: usize) -> Result<Var> {
        let first = inputs
            .first()
            .ok_or_else(|| Error::dim("concat", &[], &[]))?;
        let base = self.value(*first).shape().to_vec();
        if axis >= base.len() {
            return Err(Error::dim("concat", &base, &[axis]));
        }
        let mut total = 0;
        for v in inputs {
            let s = self.value(*v).shape();
            let compatible = s.len() == base.len()
                && s.iter()
                    .zip(&base)
                    .enumerate()
                    .all(|(i, (a, b))| i == axis || a == b);
            if !compatible {
                return Err(Error::dim("concat", &base, s));
            }
            total += s[axis];
        }
        if inputs.len() == 1 {
            return Ok(*first);
        }
        let outer: usize = base[..axis].iter().product();
        let inner: usize = base[axis + 1..].iter().product();
        let mut out = Vec::with_capacity(outer * total * inner);
        for o in 0..outer {
            for v in inputs {
                let t = self.value(*v);
                let chunk = t.shape()[axis] * inner;
                out.extend_from_slice(&t.data()[o * chunk..(o + 1) * chunk]);
            }
        }
        let mut shape = base;
        shape[axis] = total;
        let value = Tensor::new(shape, out)?;
        let rg = self.needs(inputs);
        Ok(self.push(
            Op::Concat {
                inputs: inputs.to_vec(),
                axis,
            },
            value,
            rg,
        ))
    }

    /// Copies `[start, end)` along `axis`.
    pub fn slice(&mut self, input: Var, axis: usize, start: usize, end: usize) -> Result<Var> {
        let t = self.value(input);
        let shape = t.shape().to_vec();
        if axis >= shape.len() || start >= end || end > shape[axis] {
            return Err(Error::Bounds {
                op: "slice",
                detail: format!("range [{start}, {end}) on axis {axis} of shape {shape:?}"),
            });
        }
        let outer: usize = shape[..axis].iter().product();
        let inner: usize = shape[axis + 1..].iter().product();
        let width = end - start;
        let mut out = Vec::with_capacity(outer * width * inner);
        for o in 0..outer {
            let base = (o * shape[axis] + start) * inner;
            out.extend_from_slice(&t.data()[base..base + width * inner]);
        }
        let mut new_shape = shape;
        new_shape[axis] = width;
        let value = Tensor::new(new_shape, out)?;
        let rg = self.needs(&[input]);
        Ok(self.push(Op::Slice { input, axis, start }, value, rg))
    }

    /// Column `col` of a matrix as a rank-1 vector.
    pub fn column(&mut self, m: Var, col: usize) -> Result<Var> {
        let s = self.slice(m, 1, col, col + 1)?;
        let rows = self.shape(s)[0];
        self.reshape(s, vec![rows])
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let t = self.value(a);
        let (r, c) = t
            .dims2()
            .ok_or_else(|| Error::dim("transpose", t.shape(), &[]))?;
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = t.data()[i * c + j];
            }
        }
        let value = Tensor::new(vec![c, r], out)?;
        let rg = self.needs(&[a]);
        Ok(self.push(Op::Transpose(a), value, rg))
    }

    pub fn reshape(&mut self, a: Var, shape: Vec<usize>) -> Result<Var> {
        let value = self.value(a).clone().reshaped(shape)?;
        let rg = self.needs(&[a]);
        Ok(self.push(Op::Reshape(a), value, rg))
    }

    /// Inner product of two tensors of identical shape.
    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(Error::dim("dot", ta.shape(), tb.shape()));
        }
        let s = ta.data().iter().zip(tb.data()).map(|(x, y)| x * y).sum();
        let rg = self.needs(&[a, b]);
        Ok(self.push(Op::Dot(a, b), Tensor::scalar(s), rg))
    }

    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        let t = self.value(a);
        if t.rank() != 1 {
            return Err(Error::dim("softmax", t.shape(), &[]));
        }
        let value = Tensor::vector(&softmax(t.data()));
        let rg = self.needs(&[a]);
        Ok(self.push(Op::Softmax(a), value, rg))
    }

    pub fn log_softmax(&mut self, a: Var) -> Result<Var> {
        let t = self.value(a);
        if t.rank() != 1 {
            return Err(Error::dim("log_softmax", t.shape(), &[]));
        }
        let value = Tensor::vector(&log_softmax(t.data()));
        let rg = self.needs(&[a]);
        Ok(self.push(Op::LogSoftmax(a), value, rg))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let t = self.value(a);
        let value = Tensor::new(
            t.shape().to_vec(),
            t.data().iter().map(|v| v * factor).collect(),
        )
        .expect("shape preserved");
        let rg = self.needs(&[a]);
        self.push(Op::Scale(a, factor), value, rg)
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().sum();
        let rg = self.needs(&[a]);
        self.push(Op::Sum(a), Tensor::scalar(s), rg)
    }

    /// Mean of a list of scalar nodes.
    pub fn mean_scalars(&mut self, xs: &[Var]) -> Result<Var> {
        let mut flat = Vec::with_capacity(xs.len());
        for &x in xs {
            if self.value(x).len() != 1 {
                return Err(Error::dim("mean_scalars", self.shape(x), &[1]));
            }
            flat.push(self.reshape(x, vec![1])?);
        }
        let joined = self.concat(&flat, 0)?;
        let total = self.sum(joined);
        Ok(self.scale(total, 1.0 / xs.len() as f64))
    }

    /// Reverse sweep from a scalar root.
    pub fn backward(&self, root: Var) -> Result<Gradients> {
        if self.value(root).len() != 1 {
            return Err(Error::Usage(format!(
                "backward needs a scalar root, got shape {:?}",
                self.shape(root)
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; root.0 + 1];
        grads[root.0] = Some(vec![1.0]);
        let mut out = Gradients::default();

        for idx in (0..=root.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            match &node.op {
                Op::Constant => {}
                Op::Input => {
                    out.inputs.insert(Var(idx), g);
                }
                Op::Param(id) => add_into(out.params.entry(*id).or_default(), &g),
                Op::Gather { table, rows } => {
                    let t = self.store.get(*table);
                    let width = t.shape()[1];
                    let cols = rows.len();
                    let acc = out.params.entry(*table).or_default();
                    if acc.is_empty() {
                        acc.resize(t.len(), 0.0);
                    }
                    for (c, &r) in rows.iter().enumerate() {
                        for k in 0..width {
                            acc[r * width + k] += g[k * cols + c];
                        }
                    }
                }
                Op::MatMul(a, b) => {
                    let (ta, tb) = (self.value(*a), self.value(*b));
                    let (m, k) = ta.dims2().unwrap();
                    let n = tb.shape()[1];
                    if self.nodes[a.0].requires_grad {
                        // dA = dC · Bᵀ
                        let mut da = vec![0.0; m * k];
                        for i in 0..m {
                            for j in 0..n {
                                let gij = g[i * n + j];
                                if gij == 0.0 {
                                    continue;
                                }
                                for t in 0..k {
                                    da[i * k + t] += gij * tb.data()[t * n + j];
                                }
                            }
                        }
                        self.acc(&mut grads, *a, da);
                    }
                    if self.nodes[b.0].requires_grad {
                        // dB = Aᵀ · dC
                        let mut db = vec![0.0; k * n];
                        for i in 0..m {
                            for t in 0..k {
                                let ait = ta.data()[i * k + t];
                                if ait == 0.0 {
                                    continue;
                                }
                                for j in 0..n {
                                    db[t * n + j] += ait * g[i * n + j];
                                }
                            }
                        }
                        self.acc(&mut grads, *b, db);
                    }
                }
                Op::Binary(kind, a, b) => match kind {
                    Binary::Add => {
                        self.acc(&mut grads, *a, g.clone());
                        self.acc(&mut grads, *b, g);
                    }
                    Binary::Sub => {
                        self.acc(&mut grads, *a, g.clone());
                        self.acc(&mut grads, *b, g.iter().map(|v| -v).collect());
                    }
                    Binary::Mul => {
                        let (ta, tb) = (self.value(*a), self.value(*b));
                        if self.nodes[a.0].requires_grad {
                            let da = g.iter().zip(tb.data()).map(|(x, y)| x * y).collect();
                            self.acc(&mut grads, *a, da);
                        }
                        if self.nodes[b.0].requires_grad {
                            let db = g.iter().zip(ta.data()).map(|(x, y)| x * y).collect();
                            self.acc(&mut grads, *b, db);
                        }
                    }
                },
                Op::Unary(kind, a) => {
                    let y = node.value.data();
                    let da = match kind {
                        Unary::Tanh => g.iter().zip(y).map(|(d, y)| d * (1.0 - y * y)).collect(),
                        Unary::Sigmoid => g.iter().zip(y).map(|(d, y)| d * y * (1.0 - y)).collect(),
                    };
                    self.acc(&mut grads, *a, da);
                }
                Op::AddColumnBias(m, b) => {
                    let (rows, cols) = node.value.dims2().unwrap();
                    if self.nodes[b.0].requires_grad {
                        let db = (0..rows)
                            .map(|r| g[r * cols..(r + 1) * cols].iter().sum())
                            .collect();
                        self.acc(&mut grads, *b, db);
                    }
                    self.acc(&mut grads, *m, g);
                }
                Op::Concat { inputs, axis } => {
                    let shape = node.value.shape();
                    let outer: usize = shape[..*axis].iter().product();
                    let inner: usize = shape[axis + 1..].iter().product();
                    let total = shape[*axis];
                    let mut offset = 0;
                    for v in inputs {
                        let width = self.shape(*v)[*axis];
                        if self.nodes[v.0].requires_grad {
                            let mut part = Vec::with_capacity(outer * width * inner);
                            for o in 0..outer {
                                let base = (o * total + offset) * inner;
                                part.extend_from_slice(&g[base..base + width * inner]);
                            }
                            self.acc(&mut grads, *v, part);
                        }
                        offset += width;
                    }
                }
                Op::Slice { input, axis, start } => {
                    let src = self.shape(*input);
                    let outer: usize = src[..*axis].iter().product();
                    let inner: usize = src[axis + 1..].iter().product();
                    let width = node.value.shape()[*axis];
                    let mut full = vec![0.0; self.value(*input).len()];
                    for o in 0..outer {
                        let dst = (o * src[*axis] + start) * inner;
                        let from = o * width * inner;
                        full[dst..dst + width * inner]
                            .copy_from_slice(&g[from..from + width * inner]);
                    }
                    self.acc(&mut grads, *input, full);
                }
                Op::Transpose(a) => {
                    let (r, c) = node.value.dims2().unwrap();
                    let mut da = vec![0.0; r * c];
                    for i in 0..r {
                        for j in 0..c {
                            da[j * r + i] = g[i * c + j];
                        }
                    }
                    self.acc(&mut grads, *a, da);
                }
                Op::Reshape(a) => self.acc(&mut grads, *a, g),
                Op::Dot(a, b) => {
                    let s = g[0];
                    let (ta, tb) = (self.value(*a), self.value(*b));
                    if self.nodes[a.0].requires_grad {
                        self.acc(&mut grads, *a, tb.data().iter().map(|v| s * v).collect());
                    }
                    if self.nodes[b.0].requires_grad {
                        self.acc(&mut grads, *b, ta.data().iter().map(|v| s * v).collect());
                    }
                }
                Op::Softmax(a) => {
                    let y = node.value.data();
                    let inner: f64 = g.iter().zip(y).map(|(d, y)| d * y).sum();
                    let da = g.iter().zip(y).map(|(d, y)| y * (d - inner)).collect();
                    self.acc(&mut grads, *a, da);
                }
                Op::LogSoftmax(a) => {
                    let p = softmax(self.value(*a).data());
                    let total: f64 = g.iter().sum();
                    let da = g.iter().zip(&p).map(|(d, p)| d - p * total).collect();
                    self.acc(&mut grads, *a, da);
                }
                Op::Scale(a, f) => self.acc(&mut grads, *a, g.iter().map(|v| v * f).collect()),
                Op::Sum(a) => {
                    let n = self.value(*a).len();
                    self.acc(&mut grads, *a, vec![g[0]; n]);
                }
            }
        }
        Ok(out)
    }

    fn acc(&self, grads: &mut [Option<Vec<f64>>], v: Var, delta: Vec<f64>) {
        if !self.nodes[v.0].requires_grad {
            return;
        }
        match &mut grads[v.0] {
            Some(existing) => add_into(existing, &delta),
            slot @ None => *slot = Some(delta),
        }
    }
}

fn add_into(acc: &mut Vec<f64>, delta: &[f64]) {
    if acc.is_empty() {
        acc.extend_from_slice(delta);
    } else {
        acc.iter_mut().zip(delta).for_each(|(a, d)| *a += d);
    }
}

fn matmul_kernel(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for t in 0..k {
            let ait = a[i * k + t];
            if ait == 0.0 {
                continue;
            }
            let brow = &b[t * n..(t + 1) * n];
            for (o, bv) in row.iter_mut().zip(brow) {
                *o += ait * bv;
            }
        }
    }
    out
}

/// Logistic function, branched on sign so `exp` never overflows.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Max-shifted softmax.
pub fn softmax(xs: &[f64]) -> Vec<f64> {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|x| (x - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

pub fn log_softmax(xs: &[f64]) -> Vec<f64> {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
    xs.iter().map(|x| x - lse).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store_with(values: &[(&str, Tensor)]) -> (ParamStore, Vec<ParamId>) {
        let mut s = ParamStore::new();
        let ids = values
            .iter()
            .map(|(n, t)| s.add(*n, t.clone()).unwrap())
            .collect();
        (s, ids)
    }

    #[test]
    fn matmul_examples() {
        let store = ParamStore::new();
        let mut g = Graph::new(&store);
        let i2 = g.constant(Tensor::identity(2));
        let col = g.constant(Tensor::matrix(&[&[3.0], &[4.0]]));
        let r = g.matmul(i2, col).unwrap();
        assert_eq!(g.value(r).data(), &[3.0, 4.0]);

        let a = g.constant(Tensor::matrix(&[&[1.0, 2.0], &[3.0, 4.0]]));
        let b = g.constant(Tensor::matrix(&[&[5.0], &[6.0]]));
        let r = g.matmul(a, b).unwrap();
        assert_eq!(g.value(r).data(), &[17.0, 39.0]);

        let z = g.constant(Tensor::zeros(&[2, 2]));
        let any = g.constant(Tensor::matrix(&[&[1.0, -2.0, 7.0], &[0.5, 9.0, 3.0]]));
        let r = g.matmul(z, any).unwrap();
        assert!(g.value(r).data().iter().all(|v| *v == 0.0));
        assert_eq!(g.shape(r), &[2, 3]);
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let store = ParamStore::new();
        let mut g = Graph::new(&store);
        let a = g.constant(Tensor::zeros(&[2, 3]));
        let b = g.constant(Tensor::zeros(&[2, 3]));
        match g.matmul(a, b) {
            Err(Error::Dimension { op, lhs, rhs }) => {
                assert_eq!(op, "matmul");
                assert_eq!(lhs, vec![2, 3]);
                assert_eq!(rhs, vec![2, 3]);
            }
            other => panic!("expected dimension error, got {other:?}"),
        }
    }

    #[test]
    fn dot_examples() {
        let (store, ids) = store_with(&[("u", Tensor::vector(&[1.0, 2.0]))]);
        let mut g = Graph::new(&store);
        let u = g.param(ids[0]);
        let v = g.constant(Tensor::vector(&[3.0, 4.0]));
        let d = g.dot(u, v).unwrap();
        assert_eq!(g.value(d).item(), 11.0);
        let grads = g.backward(d).unwrap();
        assert_eq!(grads.param(ids[0]).unwrap(), &[3.0, 4.0]);

        let zero = g.constant(Tensor::zeros(&[2]));
        let d0 = g.dot(u, zero).unwrap();
        assert_eq!(g.value(d0).item(), 0.0);

        let short = g.constant(Tensor::vector(&[1.0]));
        assert!(matches!(g.dot(u, short), Err(Error::Dimension { .. })));
    }

    #[test]
    fn elementwise_examples() {
        let store = ParamStore::new();
        let mut g = Graph::new(&store);
        let z = g.constant(Tensor::scalar(0.0));
        let s = g.sigmoid(z);
        let t = g.tanh(z);
        assert_eq!(g.value(s).item(), 0.5);
        assert_eq!(g.value(t).item(), 0.0);

        let big = g.constant(Tensor::vector(&[500.0, -500.0]));
        let s = g.sigmoid(big);
        assert_eq!(g.value(s).data()[0], 1.0);
        assert!(g.value(s).data()[1] >= 0.0 && g.value(s).data()[1] < 1e-200);
        assert!(g.value(s).is_finite());

        let a = g.constant(Tensor::vector(&[1.0, 2.0]));
        let b = g.constant(Tensor::vector(&[3.0, 4.0]));
        let c = g.add(a, b).unwrap();
        assert_eq!(g.value(c).data(), &[4.0, 6.0]);
        let three = g.constant(Tensor::vector(&[1.0, 2.0, 3.0]));
        assert!(g.add(a, three).is_err());
    }

    #[test]
    fn concat_examples() {
        let store = ParamStore::new();
        let mut g = Graph::new(&store);
        let a = g.constant(Tensor::matrix(&[&[1.0], &[2.0]]));
        let b = g.constant(Tensor::matrix(&[&[3.0], &[4.0]]));
        let c = g.concat(&[a, b], 1).unwrap();
        assert_eq!(g.shape(c), &[2, 2]);
        assert_eq!(g.value(c).data(), &[1.0, 3.0, 2.0, 4.0]);

        assert_eq!(g.concat(&[a], 1).unwrap(), a);

        let x = g.constant(Tensor::vector(&[1.0]));
        let y = g.constant(Tensor::vector(&[2.0, 3.0]));
        let xy = g.concat(&[x, y], 0).unwrap();
        assert_eq!(g.value(xy).data(), &[1.0, 2.0, 3.0]);

        assert!(g.concat(&[], 0).is_err());
        let wide = g.constant(Tensor::zeros(&[3, 1]));
        assert!(g.concat(&[a, wide], 1).is_err());
    }

    #[test]
    fn slice_examples() {
        let store = ParamStore::new();
        let mut g = Graph::new(&store);
        let v = g.constant(Tensor::vector(&[1.0, 2.0, 3.0]));
        let all = g.slice(v, 0, 0, 3).unwrap();
        assert_eq!(g.value(all).data(), &[1.0, 2.0, 3.0]);
        let mid = g.slice(v, 0, 1, 2).unwrap();
        assert_eq!(g.value(mid).data(), &[2.0]);
        let left = g.slice(v, 0, 0, 1).unwrap();
        let right = g.slice(v, 0, 1, 3).unwrap();
        let back = g.concat(&[left, right], 0).unwrap();
        assert_eq!(g.value(back), g.value(v));

        match g.slice(v, 0, 2, 4) {
            Err(Error::Bounds { detail, .. }) => assert!(detail.contains("[2, 4)")),
            other => panic!("expected bounds error, got {other:?}"),
        }
        assert!(g.slice(v, 0, 2, 2).is_err());
    }

    #[test]
    fn softmax_examples() {
        assert_eq!(softmax(&[0.0, 0.0]), vec![0.5, 0.5]);
        let p = softmax(&[2f64.ln(), 0.0]);
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p[1] - 1.0 / 3.0).abs() < 1e-15);

        let store = ParamStore::new();
        let mut g = Graph::new(&store);
        let scalar = g.constant(Tensor::scalar(1.0));
        assert!(g.softmax(scalar).is_err());
    }

    #[test]
    fn backward_examples() {
        let (store, ids) = store_with(&[("x", Tensor::scalar(3.0))]);
        let mut g = Graph::new(&store);
        let x = g.param(ids[0]);
        let sq = g.mul(x, x).unwrap();
        let grads = g.backward(sq).unwrap();
        assert_eq!(grads.param(ids[0]).unwrap(), &[6.0]);

        // x used on two separate paths: d/dx (x·x + 5x) = 2x + 5
        let five = g.constant(Tensor::scalar(5.0));
        let lin = g.mul(five, x).unwrap();
        let both = g.add(sq, lin).unwrap();
        let grads = g.backward(both).unwrap();
        assert_eq!(grads.param(ids[0]).unwrap(), &[11.0]);

        let v = g.constant(Tensor::vector(&[1.0, 2.0]));
        assert!(matches!(g.backward(v), Err(Error::Usage(_))));
    }

    #[test]
    fn gather_scatters_gradient_rows() {
        let table = Tensor::matrix(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        let (store, ids) = store_with(&[("emb", table)]);
        let mut g = Graph::new(&store);
        let cols = g.gather_columns(ids[0], &[2, 0, 2]).unwrap();
        assert_eq!(g.shape(cols), &[2, 3]);
        assert_eq!(g.value(cols).data(), &[5.0, 1.0, 5.0, 6.0, 2.0, 6.0]);
        let s = g.sum(cols);
        let grads = g.backward(s).unwrap();
        assert_eq!(
            grads.param(ids[0]).unwrap(),
            &[1.0, 1.0, 0.0, 0.0, 2.0, 2.0]
        );
        assert!(g.gather_columns(ids[0], &[3]).is_err());
    }
}
