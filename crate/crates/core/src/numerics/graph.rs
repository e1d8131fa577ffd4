use crate::numerics::{GradientMap, NumericsError, ParamId, ParamStore, Tensor};
use crate::scalar::Scalar;

/// Handle of a node in a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op<T> {
    Constant,
    Param(ParamId),
    MatMul(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    AddBias(Var, Var),
    Mul(Var, Var),
    Scale(Var, T),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    SliceCols(Var, usize),
    Reshape(Var),
    GatherRows(Var, Vec<usize>),
    Tanh(Var),
    Sigmoid(Var),
    LeakyRelu(Var, T),
    RowSoftmax(Var),
    AppendOnes(Var),
    Dropout(Var, Tensor<T>),
    /// Softmax of the logits is cached for the backward pass.
    CrossEntropy(Var, Vec<usize>, Tensor<T>),
    Sum(Var),
    StackColumns(Vec<Var>),
}

#[derive(Debug)]
struct Node<T> {
    op: Op<T>,
    /// `None` for parameter leaves, which read through to the store.
    value: Option<Tensor<T>>,
    needs_grad: bool,
}

/// Single-owner computation trace over a borrowed parameter store.
///
/// All operations work on rank-2 tensors except [`Graph::reshape`], which
/// accepts any rank. Scalars are `[1, 1]`.
pub struct Graph<'p, T: Scalar> {
    params: &'p ParamStore<T>,
    nodes: Vec<Node<T>>,
    param_nodes: Vec<Option<Var>>,
}

fn require_rank2<T: Scalar>(op: &'static str, t: &Tensor<T>) -> Result<(), NumericsError> {
    if t.rank() == 2 {
        Ok(())
    } else {
        Err(NumericsError::shapes(op, &[t.shape()]))
    }
}

impl<'p, T: Scalar> Graph<'p, T> {
    pub fn new(params: &'p ParamStore<T>) -> Self {
        Graph {
            params,
            nodes: Vec::new(),
            param_nodes: vec![None; params.len()],
        }
    }

    pub fn params(&self) -> &'p ParamStore<T> {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, var: Var) -> &Tensor<T> {
        let node = &self.nodes[var.0];
        match (&node.value, &node.op) {
            (Some(v), _) => v,
            (None, Op::Param(id)) => self.params.get(*id),
            (None, _) => unreachable!("only parameter leaves are stored by reference"),
        }
    }

    pub fn shape(&self, var: Var) -> &[usize] {
        self.value(var).shape()
    }

    fn push(&mut self, op: &'static str, kind: Op<T>, value: Tensor<T>, inputs: &[Var]) -> Result<Var, NumericsError> {
        if !value.is_finite() {
            return Err(NumericsError::NonFinite { op });
        }
        let needs_grad = inputs.iter().any(|v| self.nodes[v.0].needs_grad);
        self.nodes.push(Node {
            op: kind,
            value: Some(value),
            needs_grad,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    /// Non-trainable input.
    pub fn constant(&mut self, value: Tensor<T>) -> Result<Var, NumericsError> {
        self.push("constant", Op::Constant, value, &[])
    }

    /// Leaf for a registered parameter. Repeated calls return the same node.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(var) = self.param_nodes[id.0] {
            return var;
        }
        self.nodes.push(Node {
            op: Op::Param(id),
            value: None,
            needs_grad: true,
        });
        let var = Var(self.nodes.len() - 1);
        self.param_nodes[id.0] = Some(var);
        var
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, NumericsError> {
        let (x, y) = (self.value(a), self.value(b));
        if x.rank() != 2 || y.rank() != 2 || x.cols() != y.rows() {
            return Err(NumericsError::shapes("matmul", &[x.shape(), y.shape()]));
        }
        let out = x.matmul_unchecked(y);
        self.push("matmul", Op::MatMul(a, b), out, &[a, b])
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var, NumericsError> {
        let x = self.value(a);
        require_rank2("transpose", x)?;
        let out = x.transpose();
        self.push("transpose", Op::Transpose(a), out, &[a])
    }

    fn zip_same(&self, op: &'static str, a: Var, b: Var, f: impl Fn(T, T) -> T) -> Result<Tensor<T>, NumericsError> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape() != y.shape() {
            return Err(NumericsError::shapes(op, &[x.shape(), y.shape()]));
        }
        let data = x.data().iter().zip(y.data()).map(|(&p, &q)| f(p, q)).collect();
        Tensor::new(x.shape().to_vec(), data)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NumericsError> {
        let out = self.zip_same("add", a, b, |p, q| p + q)?;
        self.push("add", Op::Add(a, b), out, &[a, b])
    }

    /// Adds a `[1, k]` row to every row of an `[m, k]` matrix.
    pub fn add_bias(&mut self, a: Var, bias: Var) -> Result<Var, NumericsError> {
        let (x, b) = (self.value(a), self.value(bias));
        if x.rank() != 2 || b.shape() != [1, x.cols()] {
            return Err(NumericsError::shapes("add_bias", &[x.shape(), b.shape()]));
        }
        let k = x.cols();
        let data = x.data().iter().enumerate().map(|(i, &v)| v + b.data()[i % k]).collect();
        let out = Tensor::new(x.shape().to_vec(), data)?;
        self.push("add_bias", Op::AddBias(a, bias), out, &[a, bias])
    }

    /// Element-wise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, NumericsError> {
        let out = self.zip_same("mul", a, b, |p, q| p * q)?;
        self.push("mul", Op::Mul(a, b), out, &[a, b])
    }

    pub fn scale(&mut self, a: Var, factor: T) -> Result<Var, NumericsError> {
        let out = self.value(a).map(|x| x * factor);
        self.push("scale", Op::Scale(a, factor), out, &[a])
    }

    /// Concatenation along columns; all parts need the same row count.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var, NumericsError> {
        let shapes: Vec<&[usize]> = parts.iter().map(|&v| self.shape(v)).collect();
        let rows = match shapes.first() {
            Some(s) => s.first().copied().unwrap_or(0),
            None => return Err(NumericsError::shapes("concat_cols", &[])),
        };
        if shapes.iter().any(|s| s.len() != 2 || s[0] != rows) {
            return Err(NumericsError::shapes("concat_cols", &shapes));
        }
        let cols: usize = shapes.iter().map(|s| s[1]).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for &p in parts {
                data.extend_from_slice(self.value(p).row(i));
            }
        }
        let out = Tensor::new(vec![rows, cols], data)?;
        self.push("concat_cols", Op::ConcatCols(parts.to_vec()), out, parts)
    }

    /// Concatenation along rows; all parts need the same column count.
    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var, NumericsError> {
        let shapes: Vec<&[usize]> = parts.iter().map(|&v| self.shape(v)).collect();
        let cols = match shapes.first() {
            Some(s) if s.len() == 2 => s[1],
            _ => return Err(NumericsError::shapes("concat_rows", &shapes)),
        };
        if shapes.iter().any(|s| s.len() != 2 || s[1] != cols) {
            return Err(NumericsError::shapes("concat_rows", &shapes));
        }
        let rows: usize = shapes.iter().map(|s| s[0]).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for &p in parts {
            data.extend_from_slice(self.value(p).data());
        }
        let out = Tensor::new(vec![rows, cols], data)?;
        self.push("concat_rows", Op::ConcatRows(parts.to_vec()), out, parts)
    }

    /// Columns `start..end`.
    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Result<Var, NumericsError> {
        let x = self.value(a);
        require_rank2("slice_cols", x)?;
        if start >= end || end > x.cols() {
            return Err(NumericsError::shapes("slice_cols", &[x.shape(), &[start, end]]));
        }
        let out = Tensor::from_fn(x.rows(), end - start, |i, j| x.at(i, start + j));
        self.push("slice_cols", Op::SliceCols(a, start), out, &[a])
    }

    pub fn reshape(&mut self, a: Var, shape: Vec<usize>) -> Result<Var, NumericsError> {
        let x = self.value(a);
        if shape.iter().product::<usize>() != x.len() {
            return Err(NumericsError::shapes("reshape", &[x.shape(), &shape]));
        }
        let out = x.reshaped(shape)?;
        self.push("reshape", Op::Reshape(a), out, &[a])
    }

    /// Selects rows by index (embedding lookup); indices may repeat.
    pub fn gather_rows(&mut self, a: Var, indices: &[usize]) -> Result<Var, NumericsError> {
        let x = self.value(a);
        require_rank2("gather_rows", x)?;
        let cols = x.cols();
        let mut data = Vec::with_capacity(indices.len() * cols);
        for &i in indices {
            if i >= x.rows() {
                return Err(NumericsError::IndexOutOfRange {
                    op: "gather_rows",
                    index: i,
                    bound: x.rows(),
                });
            }
            data.extend_from_slice(x.row(i));
        }
        let out = Tensor::new(vec![indices.len(), cols], data)?;
        self.push("gather_rows", Op::GatherRows(a, indices.to_vec()), out, &[a])
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var, NumericsError> {
        let out = self.value(a).map(T::tanh);
        self.push("tanh", Op::Tanh(a), out, &[a])
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var, NumericsError> {
        let out = self.value(a).map(sigmoid);
        self.push("sigmoid", Op::Sigmoid(a), out, &[a])
    }

    pub fn leaky_relu(&mut self, a: Var, slope: T) -> Result<Var, NumericsError> {
        let out = self.value(a).map(|x| if x > T::zero() { x } else { x * slope });
        self.push("leaky_relu", Op::LeakyRelu(a, slope), out, &[a])
    }

    pub fn row_softmax(&mut self, a: Var) -> Result<Var, NumericsError> {
        let x = self.value(a);
        require_rank2("row_softmax", x)?;
        let out = softmax_rows(x);
        self.push("row_softmax", Op::RowSoftmax(a), out, &[a])
    }

    /// `[m, k]` to `[m, k + 1]` with a trailing column of ones.
    pub fn append_ones_column(&mut self, a: Var) -> Result<Var, NumericsError> {
        let x = self.value(a);
        require_rank2("append_ones_column", x)?;
        let k = x.cols();
        let out = Tensor::from_fn(x.rows(), k + 1, |i, j| if j < k { x.at(i, j) } else { T::one() });
        self.push("append_ones_column", Op::AppendOnes(a), out, &[a])
    }

    /// Multiplies by a fixed mask, typically of entries `0` and `1 / keep`.
    pub fn dropout(&mut self, a: Var, mask: Tensor<T>) -> Result<Var, NumericsError> {
        let x = self.value(a);
        if x.shape() != mask.shape() {
            return Err(NumericsError::shapes("dropout", &[x.shape(), mask.shape()]));
        }
        let data = x.data().iter().zip(mask.data()).map(|(&p, &q)| p * q).collect();
        let out = Tensor::new(x.shape().to_vec(), data)?;
        self.push("dropout", Op::Dropout(a, mask), out, &[a])
    }

    /// Sum over rows of `-log softmax(row)[target]`, as a `[1, 1]` tensor.
    pub fn cross_entropy(&mut self, logits: Var, targets: &[usize]) -> Result<Var, NumericsError> {
        let x = self.value(logits);
        require_rank2("cross_entropy", x)?;
        if targets.len() != x.rows() {
            return Err(NumericsError::shapes("cross_entropy", &[x.shape(), &[targets.len()]]));
        }
        let mut total = T::zero();
        for (i, &t) in targets.iter().enumerate() {
            if t >= x.cols() {
                return Err(NumericsError::IndexOutOfRange {
                    op: "cross_entropy",
                    index: t,
                    bound: x.cols(),
                });
            }
            total += log_sum_exp(x.row(i)) - x.at(i, t);
        }
        let probs = softmax_rows(x);
        self.push(
            "cross_entropy",
            Op::CrossEntropy(logits, targets.to_vec(), probs),
            Tensor::scalar(total),
            &[logits],
        )
    }

    pub fn sum(&mut self, a: Var) -> Result<Var, NumericsError> {
        let total = self.value(a).sum();
        self.push("sum", Op::Sum(a), Tensor::scalar(total), &[a])
    }

    /// Stacks `k` equally shaped `[a, b]` matrices into `[a * b, k]`, so that
    /// `out[i * b + j][l] = parts[l][i][j]`.
    pub fn stack_columns(&mut self, parts: &[Var]) -> Result<Var, NumericsError> {
        let shapes: Vec<&[usize]> = parts.iter().map(|&v| self.shape(v)).collect();
        let first = match shapes.first() {
            Some(s) if s.len() == 2 => s.to_vec(),
            _ => return Err(NumericsError::shapes("stack_columns", &shapes)),
        };
        if shapes.iter().any(|s| *s != first.as_slice()) {
            return Err(NumericsError::shapes("stack_columns", &shapes));
        }
        let cells = first[0] * first[1];
        let k = parts.len();
        let mut data = vec![T::zero(); cells * k];
        for (l, &p) in parts.iter().enumerate() {
            for (c, &v) in self.value(p).data().iter().enumerate() {
                data[c * k + l] = v;
            }
        }
        let out = Tensor::new(vec![cells, k], data)?;
        self.push("stack_columns", Op::StackColumns(parts.to_vec()), out, parts)
    }

    /// Reverse accumulation from a single-element node. Every parameter of
    /// the store receives an entry; unreachable ones stay zero.
    pub fn backward(&self, loss: Var) -> Result<GradientMap<T>, NumericsError> {
        let loss_value = self.value(loss);
        if loss_value.len() != 1 {
            return Err(NumericsError::NonScalarLoss {
                shape: loss_value.shape().to_vec(),
            });
        }
        let mut out = self.params.zero_gradients();
        let mut grads: Vec<Option<Tensor<T>>> = (0..=loss.0).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::ones(loss_value.shape().to_vec()));

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            match &node.op {
                Op::Constant => {}
                Op::Param(id) => out.grads[id.0].add_assign(&g),
                Op::MatMul(a, b) => {
                    let (x, y) = (self.value(*a), self.value(*b));
                    if self.wants(*a) {
                        let da = g.matmul_unchecked(&y.transpose());
                        self.acc(&mut grads, *a, da);
                    }
                    if self.wants(*b) {
                        let db = x.transpose().matmul_unchecked(&g);
                        self.acc(&mut grads, *b, db);
                    }
                }
                Op::Transpose(a) => self.acc(&mut grads, *a, g.transpose()),
                Op::Add(a, b) => {
                    self.acc(&mut grads, *b, g.clone());
                    self.acc(&mut grads, *a, g);
                }
                Op::AddBias(a, b) => {
                    if self.wants(*b) {
                        let k = g.cols();
                        let mut db = Tensor::zeros(vec![1, k]);
                        for (i, &v) in g.data().iter().enumerate() {
                            db.data_mut()[i % k] += v;
                        }
                        self.acc(&mut grads, *b, db);
                    }
                    self.acc(&mut grads, *a, g);
                }
                Op::Mul(a, b) => {
                    let (x, y) = (self.value(*a), self.value(*b));
                    if self.wants(*a) {
                        let da = hadamard(&g, y);
                        self.acc(&mut grads, *a, da);
                    }
                    if self.wants(*b) {
                        let db = hadamard(&g, x);
                        self.acc(&mut grads, *b, db);
                    }
                }
                Op::Scale(a, c) => {
                    let c = *c;
                    self.acc(&mut grads, *a, g.map(|v| v * c));
                }
                Op::ConcatCols(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let w = self.shape(p)[1];
                        if self.wants(p) {
                            let dp = Tensor::from_fn(g.rows(), w, |i, j| g.at(i, offset + j));
                            self.acc(&mut grads, p, dp);
                        }
                        offset += w;
                    }
                }
                Op::ConcatRows(parts) => {
                    let cols = g.cols();
                    let mut offset = 0;
                    for &p in parts {
                        let h = self.shape(p)[0];
                        if self.wants(p) {
                            let data = g.data()[offset * cols..(offset + h) * cols].to_vec();
                            let dp = Tensor::new(vec![h, cols], data)?;
                            self.acc(&mut grads, p, dp);
                        }
                        offset += h;
                    }
                }
                Op::SliceCols(a, start) => {
                    let shape = self.shape(*a);
                    let mut da = Tensor::zeros(shape.to_vec());
                    for i in 0..g.rows() {
                        for j in 0..g.cols() {
                            da.set(i, start + j, g.at(i, j));
                        }
                    }
                    self.acc(&mut grads, *a, da);
                }
                Op::Reshape(a) => {
                    let da = g.reshaped(self.shape(*a).to_vec())?;
                    self.acc(&mut grads, *a, da);
                }
                Op::GatherRows(a, indices) => {
                    let mut da = Tensor::zeros(self.shape(*a).to_vec());
                    let cols = da.cols();
                    for (r, &i) in indices.iter().enumerate() {
                        let dst = &mut da.data_mut()[i * cols..(i + 1) * cols];
                        for (d, &v) in dst.iter_mut().zip(g.row(r)) {
                            *d += v;
                        }
                    }
                    self.acc(&mut grads, *a, da);
                }
                Op::Tanh(a) => {
                    let y = node.value.as_ref().expect("computed");
                    let da = zip_map(&g, y, |gv, yv| gv * (T::one() - yv * yv));
                    self.acc(&mut grads, *a, da);
                }
                Op::Sigmoid(a) => {
                    let y = node.value.as_ref().expect("computed");
                    let da = zip_map(&g, y, |gv, yv| gv * yv * (T::one() - yv));
                    self.acc(&mut grads, *a, da);
                }
                Op::LeakyRelu(a, slope) => {
                    let slope = *slope;
                    let x = self.value(*a);
                    let da = zip_map(&g, x, |gv, xv| if xv > T::zero() { gv } else { gv * slope });
                    self.acc(&mut grads, *a, da);
                }
                Op::RowSoftmax(a) => {
                    let y = node.value.as_ref().expect("computed");
                    let mut da = Tensor::zeros(y.shape().to_vec());
                    for i in 0..y.rows() {
                        let dot: T = g.row(i).iter().zip(y.row(i)).map(|(&p, &q)| p * q).sum();
                        for j in 0..y.cols() {
                            da.set(i, j, y.at(i, j) * (g.at(i, j) - dot));
                        }
                    }
                    self.acc(&mut grads, *a, da);
                }
                Op::AppendOnes(a) => {
                    let k = self.shape(*a)[1];
                    let da = Tensor::from_fn(g.rows(), k, |i, j| g.at(i, j));
                    self.acc(&mut grads, *a, da);
                }
                Op::Dropout(a, mask) => self.acc(&mut grads, *a, hadamard(&g, mask)),
                Op::CrossEntropy(a, targets, probs) => {
                    let scale = g.item();
                    let mut da = probs.map(|p| p * scale);
                    for (i, &t) in targets.iter().enumerate() {
                        let v = da.at(i, t) - scale;
                        da.set(i, t, v);
                    }
                    self.acc(&mut grads, *a, da);
                }
                Op::Sum(a) => {
                    let da = Tensor::filled(self.shape(*a).to_vec(), g.item());
                    self.acc(&mut grads, *a, da);
                }
                Op::StackColumns(parts) => {
                    let k = parts.len();
                    for (l, &p) in parts.iter().enumerate() {
                        if !self.wants(p) {
                            continue;
                        }
                        let shape = self.shape(p).to_vec();
                        let cells = shape[0] * shape[1];
                        let data = (0..cells).map(|c| g.data()[c * k + l]).collect();
                        self.acc(&mut grads, p, Tensor::new(shape, data)?);
                    }
                }
            }
        }
        Ok(out)
    }

    fn wants(&self, var: Var) -> bool {
        self.nodes[var.0].needs_grad
    }

    fn acc(&self, grads: &mut [Option<Tensor<T>>], var: Var, delta: Tensor<T>) {
        if !self.wants(var) {
            return;
        }
        match &mut grads[var.0] {
            Some(existing) => existing.add_assign(&delta),
            slot => *slot = Some(delta),
        }
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

pub(crate) fn log_sum_exp<T: Scalar>(row: &[T]) -> T {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let s: T = row.iter().map(|&v| (v - max).exp()).sum();
    max + s.ln()
}

fn softmax_rows<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let mut out = Tensor::zeros(x.shape().to_vec());
    for i in 0..x.rows() {
        let row = x.row(i);
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let exps: Vec<T> = row.iter().map(|&v| (v - max).exp()).collect();
        let total: T = exps.iter().copied().sum();
        for (j, e) in exps.into_iter().enumerate() {
            out.set(i, j, e / total);
        }
    }
    out
}

fn zip_map<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>, f: impl Fn(T, T) -> T) -> Tensor<T> {
    let data = a.data().iter().zip(b.data()).map(|(&p, &q)| f(p, q)).collect();
    Tensor::new(a.shape().to_vec(), data).expect("same shape")
}

fn hadamard<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    zip_map(a, b, |p, q| p * q)
}
