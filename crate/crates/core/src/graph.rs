//! Reverse-mode automatic differentiation over a per-sentence tape.
//!
//! A [`Graph`] is built fresh for every forward pass. Nodes are appended in
//! evaluation order, so the node vector is already a topological order and
//! the backward sweep is a single reverse scan.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::params::{ParamId, ParamStore};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Floor added inside `-log(p)` so a zero probability yields a finite loss.
pub const LOG_EPS: f64 = 1e-12;

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Clone, Debug)]
enum Op {
    Input,
    Param(ParamId),
    MatVec(Var, Var),
    Add(Var, Var),
    Mul(Var, Var),
    Sigmoid(Var),
    Tanh(Var),
    Concat(Vec<Var>),
    Row(Var, usize),
    Softmax(Var),
    CrossEntropy(Var, usize),
    Sum(Var),
    Mean(Vec<Var>),
    WeightedSum(Var, Vec<Var>),
}

/// Kind tag of a recorded node, exposed for inspection and tests.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpKind {
    Input,
    Param,
    MatVec,
    Add,
    Mul,
    Sigmoid,
    Tanh,
    Concat,
    Row,
    Softmax,
    CrossEntropy,
    Sum,
    Mean,
    WeightedSum,
}

struct Node<T> {
    op: Op,
    shape: Vec<usize>,
    /// Empty for `Param` nodes, which read through to the store.
    value: Vec<T>,
    requires_grad: bool,
}

pub struct Graph<'p, T> {
    store: &'p ParamStore<T>,
    nodes: Vec<Node<T>>,
    param_nodes: HashMap<ParamId, Var>,
}

/// Gradient of a scalar root with respect to every parameter of a store.
///
/// Parameters the root does not reach have no entry and read as zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn empty(n_params: usize) -> Self {
        Gradients {
            grads: vec![None; n_params],
        }
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn get(&self, id: ParamId) -> Option<&Tensor<T>> {
        self.grads[id.index()].as_ref()
    }

    /// Dense gradient, zero-filled where the parameter was unreachable.
    pub fn dense(&self, id: ParamId, store: &ParamStore<T>) -> Tensor<T> {
        match &self.grads[id.index()] {
            Some(g) => g.clone(),
            None => Tensor::zeros(store.get(id).shape()),
        }
    }

    pub fn is_touched(&self, id: ParamId) -> bool {
        self.grads[id.index()].is_some()
    }

    pub fn accumulate(&mut self, other: &Gradients<T>) {
        for (mine, theirs) in self.grads.iter_mut().zip(&other.grads) {
            if let Some(t) = theirs {
                match mine {
                    Some(m) => {
                        for (a, &b) in m.data_mut().iter_mut().zip(t.data()) {
                            *a += b;
                        }
                    }
                    None => *mine = Some(t.clone()),
                }
            }
        }
    }

    pub fn scale(&mut self, factor: T) {
        for g in self.grads.iter_mut().flatten() {
            for v in g.data_mut() {
                *v *= factor;
            }
        }
    }

    pub fn global_norm(&self) -> T {
        self.grads
            .iter()
            .flatten()
            .map(|g| g.squared_norm())
            .sum::<T>()
            .sqrt()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Tensor<T>)> {
        self.grads
            .iter()
            .enumerate()
            .filter_map(|(i, g)| g.as_ref().map(|g| (ParamId(i), g)))
    }
}

fn add_into<T: Scalar>(slot: &mut Option<Vec<T>>, len: usize) -> &mut Vec<T> {
    slot.get_or_insert_with(|| vec![T::zero(); len])
}

impl<'p, T: Scalar> Graph<'p, T> {
    pub fn new(store: &'p ParamStore<T>) -> Self {
        Graph {
            store,
            nodes: Vec::new(),
            param_nodes: HashMap::new(),
        }
    }

    pub fn store(&self) -> &'p ParamStore<T> {
        self.store
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &[T] {
        let node = &self.nodes[v.0];
        match node.op {
            Op::Param(id) => self.store.get(id).data(),
            _ => &node.value,
        }
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].shape
    }

    pub fn tensor(&self, v: Var) -> Tensor<T> {
        Tensor::new(self.shape(v).to_vec(), self.value(v).to_vec()).expect("node shape is valid")
    }

    /// Value of a single-element node.
    pub fn scalar(&self, v: Var) -> T {
        self.value(v)[0]
    }

    pub fn kind(&self, v: Var) -> OpKind {
        match self.nodes[v.0].op {
            Op::Input => OpKind::Input,
            Op::Param(_) => OpKind::Param,
            Op::MatVec(..) => OpKind::MatVec,
            Op::Add(..) => OpKind::Add,
            Op::Mul(..) => OpKind::Mul,
            Op::Sigmoid(_) => OpKind::Sigmoid,
            Op::Tanh(_) => OpKind::Tanh,
            Op::Concat(_) => OpKind::Concat,
            Op::Row(..) => OpKind::Row,
            Op::Softmax(_) => OpKind::Softmax,
            Op::CrossEntropy(..) => OpKind::CrossEntropy,
            Op::Sum(_) => OpKind::Sum,
            Op::Mean(_) => OpKind::Mean,
            Op::WeightedSum(..) => OpKind::WeightedSum,
        }
    }

    fn push(&mut self, op: Op, shape: Vec<usize>, value: Vec<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            op,
            shape,
            value,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Constant leaf; receives no gradient.
    pub fn input(&mut self, t: Tensor<T>) -> Var {
        let shape = t.shape().to_vec();
        self.push(Op::Input, shape, t.into_data(), false)
    }

    pub fn input_vector(&mut self, data: &[T]) -> Var {
        self.push(Op::Input, vec![data.len()], data.to_vec(), false)
    }

    /// Leaf bound to a stored parameter. Repeated calls return the same node
    /// so that every use accumulates into one gradient.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(&v) = self.param_nodes.get(&id) {
            return v;
        }
        let shape = self.store.get(id).shape().to_vec();
        let v = self.push(Op::Param(id), shape, Vec::new(), true);
        self.param_nodes.insert(id, v);
        v
    }

    /// Matrix-vector product `w · x` for `w: [m, n]`, `x: [n]`.
    pub fn matvec(&mut self, w: Var, x: Var) -> Result<Var> {
        let ws = self.shape(w).to_vec();
        let xs = self.shape(x).to_vec();
        if ws.len() != 2 || xs.len() != 1 || ws[1] != xs[0] {
            return Err(Error::Shape {
                op: "matvec",
                left: ws,
                right: xs,
            });
        }
        let (m, n) = (ws[0], ws[1]);
        let wv = self.value(w);
        let xv = self.value(x);
        let out: Vec<T> = (0..m)
            .map(|i| {
                wv[i * n..(i + 1) * n]
                    .iter()
                    .zip(xv)
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect();
        let rg = self.rg(w) || self.rg(x);
        Ok(self.push(Op::MatVec(w, x), vec![m], out, rg))
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::Shape {
                op,
                left: self.shape(a).to_vec(),
                right: self.shape(b).to_vec(),
            });
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let out = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(&x, &y)| x + y)
            .collect();
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Op::Add(a, b), self.shape(a).to_vec(), out, rg))
    }

    /// Element-wise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let out = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(&x, &y)| x * y)
            .collect();
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Op::Mul(a, b), self.shape(a).to_vec(), out, rg))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.value(a).iter().map(|&x| sigmoid(x)).collect();
        let rg = self.rg(a);
        self.push(Op::Sigmoid(a), self.shape(a).to_vec(), out, rg)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.value(a).iter().map(|&x| x.tanh()).collect();
        let rg = self.rg(a);
        self.push(Op::Tanh(a), self.shape(a).to_vec(), out, rg)
    }

    /// Concatenation of vectors.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let mut out = Vec::new();
        for &p in parts {
            if self.shape(p).len() != 1 {
                return Err(Error::Shape {
                    op: "concat",
                    left: self.shape(p).to_vec(),
                    right: vec![],
                });
            }
            out.extend_from_slice(self.value(p));
        }
        let rg = parts.iter().any(|&p| self.rg(p));
        let n = out.len();
        Ok(self.push(Op::Concat(parts.to_vec()), vec![n], out, rg))
    }

    /// Row `index` of a matrix, as a vector.
    pub fn row(&mut self, m: Var, index: usize) -> Result<Var> {
        let s = self.shape(m).to_vec();
        if s.len() != 2 {
            return Err(Error::Shape {
                op: "row",
                left: s,
                right: vec![index],
            });
        }
        if index >= s[0] {
            return Err(Error::Index {
                what: "matrix rows",
                index,
                len: s[0],
            });
        }
        let cols = s[1];
        let out = self.value(m)[index * cols..(index + 1) * cols].to_vec();
        let rg = self.rg(m);
        Ok(self.push(Op::Row(m, index), vec![cols], out, rg))
    }

    pub fn softmax(&mut self, z: Var) -> Result<Var> {
        let out = softmax_values(self.value(z))?;
        let rg = self.rg(z);
        Ok(self.push(Op::Softmax(z), self.shape(z).to_vec(), out, rg))
    }

    /// `-ln(probs[gold] + LOG_EPS)`, a scalar.
    pub fn cross_entropy(&mut self, probs: Var, gold: usize) -> Result<Var> {
        let p = self.value(probs);
        if gold >= p.len() {
            return Err(Error::Index {
                what: "class distribution",
                index: gold,
                len: p.len(),
            });
        }
        let loss = -(p[gold] + T::of(LOG_EPS)).ln();
        let rg = self.rg(probs);
        Ok(self.push(Op::CrossEntropy(probs, gold), Vec::new(), vec![loss], rg))
    }

    /// Sum of all entries, a scalar.
    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).iter().copied().sum();
        let rg = self.rg(a);
        self.push(Op::Sum(a), Vec::new(), vec![s], rg)
    }

    /// Arithmetic mean of single-element nodes.
    pub fn mean(&mut self, items: &[Var]) -> Result<Var> {
        if items.is_empty() {
            return Err(Error::Contract("mean of zero terms".into()));
        }
        let mut total = T::zero();
        for &v in items {
            if self.value(v).len() != 1 {
                return Err(Error::Shape {
                    op: "mean",
                    left: self.shape(v).to_vec(),
                    right: vec![],
                });
            }
            total += self.value(v)[0];
        }
        let out = total / T::of(items.len() as f64);
        let rg = items.iter().any(|&v| self.rg(v));
        Ok(self.push(Op::Mean(items.to_vec()), Vec::new(), vec![out], rg))
    }

    /// `Σ_i weights[i] · items[i]` over equally-shaped vectors.
    pub fn weighted_sum(&mut self, weights: Var, items: &[Var]) -> Result<Var> {
        let k = self.value(weights).len();
        if k != items.len() || items.is_empty() {
            return Err(Error::Shape {
                op: "weighted_sum",
                left: self.shape(weights).to_vec(),
                right: vec![items.len()],
            });
        }
        for &it in &items[1..] {
            self.same_shape("weighted_sum", items[0], it)?;
        }
        let d = self.value(items[0]).len();
        let mut out = vec![T::zero(); d];
        for (i, &it) in items.iter().enumerate() {
            let w = self.value(weights)[i];
            for (o, &x) in out.iter_mut().zip(self.value(it)) {
                *o += w * x;
            }
        }
        let rg = self.rg(weights) || items.iter().any(|&v| self.rg(v));
        let shape = self.shape(items[0]).to_vec();
        Ok(self.push(Op::WeightedSum(weights, items.to_vec()), shape, out, rg))
    }

    /// Reverse sweep from a scalar root.
    pub fn backward(&self, root: Var) -> Result<Gradients<T>> {
        if self.value(root).len() != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar root, got shape {:?}",
                self.shape(root)
            )));
        }
        let mut grads: Vec<Option<Vec<T>>> = vec![None; root.0 + 1];
        grads[root.0] = Some(vec![T::one()]);

        for idx in (0..=root.0).rev() {
            let Some(dy) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            match &node.op {
                Op::Input => {}
                Op::Param(_) => {
                    grads[idx] = Some(dy);
                    continue;
                }
                Op::MatVec(w, x) => {
                    let (m, n) = (self.shape(*w)[0], self.shape(*w)[1]);
                    let wv = self.value(*w);
                    let xv = self.value(*x);
                    if self.rg(*w) {
                        let g = add_into(&mut grads[w.0], m * n);
                        for i in 0..m {
                            let d = dy[i];
                            if d == T::zero() {
                                continue;
                            }
                            for (gij, &xj) in g[i * n..(i + 1) * n].iter_mut().zip(xv) {
                                *gij += d * xj;
                            }
                        }
                    }
                    if self.rg(*x) {
                        let g = add_into(&mut grads[x.0], n);
                        for i in 0..m {
                            let d = dy[i];
                            for (gj, &wij) in g.iter_mut().zip(&wv[i * n..(i + 1) * n]) {
                                *gj += d * wij;
                            }
                        }
                    }
                }
                Op::Add(a, b) => {
                    for v in [*a, *b] {
                        if self.rg(v) {
                            let g = add_into(&mut grads[v.0], dy.len());
                            for (gi, &d) in g.iter_mut().zip(&dy) {
                                *gi += d;
                            }
                        }
                    }
                }
                Op::Mul(a, b) => {
                    for (v, other) in [(*a, *b), (*b, *a)] {
                        if self.rg(v) {
                            let ov = self.value(other);
                            let g = add_into(&mut grads[v.0], dy.len());
                            for ((gi, &d), &o) in g.iter_mut().zip(&dy).zip(ov) {
                                *gi += d * o;
                            }
                        }
                    }
                }
                Op::Sigmoid(a) => {
                    let g = add_into(&mut grads[a.0], dy.len());
                    for ((gi, &d), &y) in g.iter_mut().zip(&dy).zip(&node.value) {
                        *gi += d * y * (T::one() - y);
                    }
                }
                Op::Tanh(a) => {
                    let g = add_into(&mut grads[a.0], dy.len());
                    for ((gi, &d), &y) in g.iter_mut().zip(&dy).zip(&node.value) {
                        *gi += d * (T::one() - y * y);
                    }
                }
                Op::Concat(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let len = self.value(p).len();
                        if self.rg(p) {
                            let g = add_into(&mut grads[p.0], len);
                            for (gi, &d) in g.iter_mut().zip(&dy[off..off + len]) {
                                *gi += d;
                            }
                        }
                        off += len;
                    }
                }
                Op::Row(m, r) => {
                    let s = self.shape(*m);
                    let (rows, cols) = (s[0], s[1]);
                    let g = add_into(&mut grads[m.0], rows * cols);
                    for (gi, &d) in g[r * cols..(r + 1) * cols].iter_mut().zip(&dy) {
                        *gi += d;
                    }
                }
                Op::Softmax(z) => {
                    let y = &node.value;
                    let dot: T = dy.iter().zip(y).map(|(&d, &p)| d * p).sum();
                    let g = add_into(&mut grads[z.0], y.len());
                    for ((gi, &d), &p) in g.iter_mut().zip(&dy).zip(y) {
                        *gi += p * (d - dot);
                    }
                }
                Op::CrossEntropy(p, gold) => {
                    let pv = self.value(*p);
                    let len = pv.len();
                    let denom = pv[*gold] + T::of(LOG_EPS);
                    let g = add_into(&mut grads[p.0], len);
                    g[*gold] -= dy[0] / denom;
                }
                Op::Sum(a) => {
                    let len = self.value(*a).len();
                    let g = add_into(&mut grads[a.0], len);
                    for gi in g.iter_mut() {
                        *gi += dy[0];
                    }
                }
                Op::Mean(items) => {
                    let share = dy[0] / T::of(items.len() as f64);
                    for &v in items {
                        if self.rg(v) {
                            add_into(&mut grads[v.0], 1)[0] += share;
                        }
                    }
                }
                Op::WeightedSum(w, items) => {
                    let wv = self.value(*w);
                    if self.rg(*w) {
                        let partial: Vec<T> = items
                            .iter()
                            .map(|&it| self.value(it).iter().zip(&dy).map(|(&x, &d)| x * d).sum())
                            .collect();
                        let g = add_into(&mut grads[w.0], wv.len());
                        for (gi, p) in g.iter_mut().zip(partial) {
                            *gi += p;
                        }
                    }
                    for (i, &it) in items.iter().enumerate() {
                        if self.rg(it) {
                            let wi = wv[i];
                            let g = add_into(&mut grads[it.0], dy.len());
                            for (gi, &d) in g.iter_mut().zip(&dy) {
                                *gi += wi * d;
                            }
                        }
                    }
                }
            }
        }

        let mut out = Gradients::empty(self.store.len());
        for (&id, &v) in &self.param_nodes {
            if let Some(g) = grads.get_mut(v.0).and_then(Option::take) {
                out.grads[id.index()] = Some(
                    Tensor::new(self.store.get(id).shape().to_vec(), g).expect("gradient shape"),
                );
            }
        }
        Ok(out)
    }
}

pub(crate) fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Max-shifted softmax over a slice; rejects non-finite logits.
pub fn softmax_values<T: Scalar>(z: &[T]) -> Result<Vec<T>> {
    if z.is_empty() {
        return Err(Error::Contract("softmax over an empty vector".into()));
    }
    if let Some(index) = z.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "softmax input".into(),
            index,
        });
    }
    let max = z.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = z.iter().map(|&v| (v - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}
