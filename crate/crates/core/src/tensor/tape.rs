use std::borrow::Cow;

use super::array::{matmul_nt_acc, matmul_tn_acc};
use super::{Array, TensorError};
use crate::Scalar;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op<T> {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    AddScalar(Var, Var),
    Mul(Var, Var),
    Scale(Var, T),
    Relu(Var),
    Exp(Var),
    Log(Var),
    Neg(Var),
    Sum(Var),
    ClampMin(Var, T),
    Reshape(Var),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    GatherRows(Var, Vec<usize>),
    SegmentSum(Var, Vec<usize>),
    SegmentMean(Var, Vec<usize>, Vec<usize>),
    SegmentLogSumExp(Var, Vec<usize>),
    LogSoftmax(Var, Option<Vec<bool>>),
}

struct Node<'a, T: Scalar> {
    value: Cow<'a, Array<T>>,
    op: Op<T>,
    needs_grad: bool,
}

/// Records array operations for reverse-mode differentiation.
///
/// Leaves may borrow their values, so parameters are not copied per pass.
pub struct Tape<'a, T: Scalar> {
    nodes: Vec<Node<'a, T>>,
}

impl<T: Scalar> Default for Tape<'_, T> {
    fn default() -> Self {
        Tape { nodes: Vec::new() }
    }
}

/// Gradients indexed by [`Var`]; `None` where no gradient reached the node.
#[derive(Debug)]
pub struct Gradients<T: Scalar> {
    grads: Vec<Option<Array<T>>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn get(&self, v: Var) -> Option<&Array<T>> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    /// Gradient for `v`, or zeros shaped like `like` when unreachable.
    pub fn get_or_zeros(&self, v: Var, like: &Array<T>) -> Array<T> {
        self.get(v).cloned().unwrap_or_else(|| Array::zeros(like.rows(), like.cols()))
    }

    pub fn take(&mut self, v: Var) -> Option<Array<T>> {
        self.grads.get_mut(v.0).and_then(|g| g.take())
    }
}

fn same_shape<T: Scalar>(op: &'static str, a: &Array<T>, b: &Array<T>) -> Result<(), TensorError> {
    if a.shape() != b.shape() {
        return Err(TensorError::shape(op, format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(())
}

fn check_segments(op: &'static str, rows: usize, seg: &[usize], n: usize) -> Result<(), TensorError> {
    if seg.len() != rows {
        return Err(TensorError::shape(op, format!("{rows} rows but {} segment ids", seg.len())));
    }
    if let Some(&bad) = seg.iter().find(|&&s| s >= n) {
        return Err(TensorError::shape(op, format!("segment id {bad} >= {n}")));
    }
    Ok(())
}

impl<'a, T: Scalar> Tape<'a, T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Array<T> {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Array<T>, op: Op<T>, inputs: &[Var]) -> Var {
        let needs_grad = inputs.iter().any(|v| self.nodes[v.0].needs_grad);
        self.nodes.push(Node { value: Cow::Owned(value), op, needs_grad });
        Var(self.nodes.len() - 1)
    }

    /// Differentiable leaf borrowing its value.
    pub fn param(&mut self, value: &'a Array<T>) -> Var {
        self.nodes.push(Node { value: Cow::Borrowed(value), op: Op::Leaf, needs_grad: true });
        Var(self.nodes.len() - 1)
    }

    /// Differentiable leaf owning its value.
    pub fn param_owned(&mut self, value: Array<T>) -> Var {
        self.nodes.push(Node { value: Cow::Owned(value), op: Op::Leaf, needs_grad: true });
        Var(self.nodes.len() - 1)
    }

    /// Leaf that never receives a gradient.
    pub fn constant(&mut self, value: Array<T>) -> Var {
        self.nodes.push(Node { value: Cow::Owned(value), op: Op::Leaf, needs_grad: false });
        Var(self.nodes.len() - 1)
    }

    pub fn constant_ref(&mut self, value: &'a Array<T>) -> Var {
        self.nodes.push(Node { value: Cow::Borrowed(value), op: Op::Leaf, needs_grad: false });
        Var(self.nodes.len() - 1)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let out = self.value(a).matmul(self.value(b))?;
        Ok(self.push(out, Op::MatMul(a, b), &[a, b]))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (x, y) = (self.value(a), self.value(b));
        same_shape("add", x, y)?;
        let mut out = x.clone();
        out.add_assign(y)?;
        Ok(self.push(out, Op::Add(a, b), &[a, b]))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let nb = self.neg(b);
        self.add(a, nb)
    }

    /// Adds a `1 x cols` row to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var, TensorError> {
        let (x, r) = (self.value(a), self.value(row));
        if r.rows() != 1 || r.cols() != x.cols() {
            return Err(TensorError::shape("add_row", format!("{:?} + {:?}", x.shape(), r.shape())));
        }
        let mut out = x.clone();
        for i in 0..out.rows() {
            for (o, &b) in out.row_mut(i).iter_mut().zip(r.data()) {
                *o += b;
            }
        }
        Ok(self.push(out, Op::AddRow(a, row), &[a, row]))
    }

    /// Adds a `1 x 1` value to every entry of `a`.
    pub fn add_scalar(&mut self, a: Var, s: Var) -> Result<Var, TensorError> {
        let (x, sv) = (self.value(a), self.value(s));
        let Some(c) = sv.item() else {
            return Err(TensorError::shape("add_scalar", format!("{:?} + {:?}", x.shape(), sv.shape())));
        };
        let out = x.map(|v| v + c);
        Ok(self.push(out, Op::AddScalar(a, s), &[a, s]))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (x, y) = (self.value(a), self.value(b));
        same_shape("mul", x, y)?;
        let data = x.data().iter().zip(y.data()).map(|(&p, &q)| p * q).collect();
        let out = Array::new(x.rows(), x.cols(), data)?;
        Ok(self.push(out, Op::Mul(a, b), &[a, b]))
    }

    pub fn scale(&mut self, a: Var, c: T) -> Var {
        let out = self.value(a).map(|v| v * c);
        self.push(out, Op::Scale(a, c), &[a])
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|v| if v > T::zero() { v } else { T::zero() });
        self.push(out, Op::Relu(a), &[a])
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|v| v.exp());
        self.push(out, Op::Exp(a), &[a])
    }

    pub fn log(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|v| v.ln());
        self.push(out, Op::Log(a), &[a])
    }

    pub fn neg(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|v| -v);
        self.push(out, Op::Neg(a), &[a])
    }

    /// Sum of all entries as a `1 x 1` array.
    pub fn sum(&mut self, a: Var) -> Var {
        let out = Array::scalar(self.value(a).sum());
        self.push(out, Op::Sum(a), &[a])
    }

    /// `max(a, floor)`; entries below the floor get zero gradient.
    pub fn clamp_min(&mut self, a: Var, floor: T) -> Var {
        let out = self.value(a).map(|v| if v < floor { floor } else { v });
        self.push(out, Op::ClampMin(a, floor), &[a])
    }

    pub fn reshape(&mut self, a: Var, rows: usize, cols: usize) -> Result<Var, TensorError> {
        let out = self.value(a).clone().reshaped(rows, cols)?;
        Ok(self.push(out, Op::Reshape(a), &[a]))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        let Some(&first) = parts.first() else {
            return Err(TensorError::shape("concat_cols", "no inputs".to_string()));
        };
        let rows = self.value(first).rows();
        let mut cols = 0;
        for &p in parts {
            let v = self.value(p);
            if v.rows() != rows {
                return Err(TensorError::shape("concat_cols", format!("row counts {rows} vs {}", v.rows())));
            }
            cols += v.cols();
        }
        let mut out = Array::zeros(rows, cols);
        let mut offset = 0;
        for &p in parts {
            let v = self.value(p);
            for r in 0..rows {
                out.row_mut(r)[offset..offset + v.cols()].copy_from_slice(v.row(r));
            }
            offset += v.cols();
        }
        Ok(self.push(out, Op::ConcatCols(parts.to_vec()), parts))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        let Some(&first) = parts.first() else {
            return Err(TensorError::shape("concat_rows", "no inputs".to_string()));
        };
        let cols = self.value(first).cols();
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let v = self.value(p);
            if v.cols() != cols {
                return Err(TensorError::shape("concat_rows", format!("column counts {cols} vs {}", v.cols())));
            }
            data.extend_from_slice(v.data());
            rows += v.rows();
        }
        let out = Array::new(rows, cols, data)?;
        Ok(self.push(out, Op::ConcatRows(parts.to_vec()), parts))
    }

    /// Row `r` of the output is row `idx[r]` of `a`.
    pub fn gather_rows(&mut self, a: Var, idx: Vec<usize>) -> Result<Var, TensorError> {
        let x = self.value(a);
        if let Some(&bad) = idx.iter().find(|&&i| i >= x.rows()) {
            return Err(TensorError::shape("gather_rows", format!("index {bad} out of {} rows", x.rows())));
        }
        let mut data = Vec::with_capacity(idx.len() * x.cols());
        for &i in &idx {
            data.extend_from_slice(x.row(i));
        }
        let out = Array::new(idx.len(), x.cols(), data)?;
        Ok(self.push(out, Op::GatherRows(a, idx), &[a]))
    }

    /// Sums rows of `a` into `n` segments; `seg[r]` is the segment of row `r`.
    pub fn segment_sum(&mut self, a: Var, seg: Vec<usize>, n: usize) -> Result<Var, TensorError> {
        let x = self.value(a);
        check_segments("segment_sum", x.rows(), &seg, n)?;
        let mut out = Array::zeros(n, x.cols());
        for (r, &s) in seg.iter().enumerate() {
            for (o, &v) in out.row_mut(s).iter_mut().zip(x.row(r)) {
                *o += v;
            }
        }
        Ok(self.push(out, Op::SegmentSum(a, seg), &[a]))
    }

    /// Mean of rows per segment; empty segments are zero.
    pub fn segment_mean(&mut self, a: Var, seg: Vec<usize>, n: usize) -> Result<Var, TensorError> {
        let x = self.value(a);
        check_segments("segment_mean", x.rows(), &seg, n)?;
        let mut counts = vec![0usize; n];
        let mut out = Array::zeros(n, x.cols());
        for (r, &s) in seg.iter().enumerate() {
            counts[s] += 1;
            for (o, &v) in out.row_mut(s).iter_mut().zip(x.row(r)) {
                *o += v;
            }
        }
        for (s, &c) in counts.iter().enumerate() {
            if c > 0 {
                let inv = T::one() / T::lit(c as f64);
                for o in out.row_mut(s) {
                    *o *= inv;
                }
            }
        }
        Ok(self.push(out, Op::SegmentMean(a, seg, counts), &[a]))
    }

    /// Column-wise log-sum-exp of rows per segment; empty segments are -inf.
    pub fn segment_logsumexp(&mut self, a: Var, seg: Vec<usize>, n: usize) -> Result<Var, TensorError> {
        let x = self.value(a);
        check_segments("segment_logsumexp", x.rows(), &seg, n)?;
        let cols = x.cols();
        let mut max = Array::full(n, cols, T::neg_infinity());
        for (r, &s) in seg.iter().enumerate() {
            for (m, &v) in max.row_mut(s).iter_mut().zip(x.row(r)) {
                if v > *m {
                    *m = v;
                }
            }
        }
        let mut acc: Array<T> = Array::zeros(n, cols);
        for (r, &s) in seg.iter().enumerate() {
            for c in 0..cols {
                let m = max.get(s, c);
                if m.is_finite() {
                    let e = (x.get(r, c) - m).exp();
                    acc.set(s, c, acc.get(s, c) + e);
                }
            }
        }
        let mut out = max.clone();
        for (o, &s) in out.data_mut().iter_mut().zip(acc.data()) {
            if o.is_finite() {
                *o += s.ln();
            }
        }
        Ok(self.push(out, Op::SegmentLogSumExp(a, seg), &[a]))
    }

    /// Row-wise log-softmax. Entries with `valid[i] == false` get an additive
    /// -inf before normalization, so their probability is exactly zero.
    pub fn log_softmax(&mut self, a: Var, valid: Option<Vec<bool>>) -> Result<Var, TensorError> {
        let x = self.value(a);
        if let Some(v) = &valid {
            if v.len() != x.len() {
                return Err(TensorError::shape("log_softmax", format!("mask of {} for {:?}", v.len(), x.shape())));
            }
        }
        let cols = x.cols();
        let mut out = x.clone();
        for r in 0..x.rows() {
            let row = out.row_mut(r);
            if let Some(v) = &valid {
                for (c, o) in row.iter_mut().enumerate() {
                    if !v[r * cols + c] {
                        *o = T::neg_infinity();
                    }
                }
            }
            let m = row.iter().copied().fold(T::neg_infinity(), T::max);
            if !m.is_finite() {
                return Err(TensorError::AllMasked { row: r });
            }
            let mut s = T::zero();
            for &o in row.iter() {
                s += (o - m).exp();
            }
            let lse = m + s.ln();
            for o in row.iter_mut() {
                *o -= lse;
            }
        }
        Ok(self.push(out, Op::LogSoftmax(a, valid), &[a]))
    }

    /// Reverse pass from a `1 x 1` loss.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>, TensorError> {
        let lv = self.value(loss);
        let Some(l) = lv.item() else {
            return Err(TensorError::NonScalarLoss { rows: lv.rows(), cols: lv.cols() });
        };
        if !l.is_finite() {
            return Err(TensorError::NonFinite("loss".to_string()));
        }
        let mut grads: Vec<Option<Array<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Array::scalar(T::one()));
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            if !self.nodes[i].needs_grad {
                continue;
            }
            self.backprop(i, &g, &mut grads);
            grads[i] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn wants(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    fn backprop(&self, i: usize, g: &Array<T>, grads: &mut [Option<Array<T>>]) {
        let out = &self.nodes[i].value;
        let mut acc = |v: Var, f: &dyn Fn(&mut Array<T>)| {
            if !self.nodes[v.0].needs_grad {
                return;
            }
            let shape = self.value(v).shape();
            let slot = grads[v.0].get_or_insert_with(|| Array::zeros(shape.0, shape.1));
            f(slot);
        };
        let zip_add = |dst: &mut Array<T>, src: &Array<T>| {
            for (d, &s) in dst.data_mut().iter_mut().zip(src.data()) {
                *d += s;
            }
        };
        match &self.nodes[i].op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (x, y) = (self.value(*a), self.value(*b));
                let (m, k, n) = (x.rows(), x.cols(), y.cols());
                if self.wants(*a) {
                    acc(*a, &|d| matmul_nt_acc(g.data(), y.data(), d.data_mut(), m, n, k));
                }
                if self.wants(*b) {
                    acc(*b, &|d| matmul_tn_acc(x.data(), g.data(), d.data_mut(), m, k, n));
                }
            }
            Op::Add(a, b) => {
                acc(*a, &|d| zip_add(d, g));
                acc(*b, &|d| zip_add(d, g));
            }
            Op::AddRow(a, row) => {
                acc(*a, &|d| zip_add(d, g));
                acc(*row, &|d| {
                    for r in 0..g.rows() {
                        for (o, &v) in d.data_mut().iter_mut().zip(g.row(r)) {
                            *o += v;
                        }
                    }
                });
            }
            Op::AddScalar(a, s) => {
                acc(*a, &|d| zip_add(d, g));
                acc(*s, &|d| d.data_mut()[0] += g.sum());
            }
            Op::Mul(a, b) => {
                let (x, y) = (self.value(*a), self.value(*b));
                acc(*a, &|d| {
                    for ((o, &gv), &yv) in d.data_mut().iter_mut().zip(g.data()).zip(y.data()) {
                        *o += gv * yv;
                    }
                });
                acc(*b, &|d| {
                    for ((o, &gv), &xv) in d.data_mut().iter_mut().zip(g.data()).zip(x.data()) {
                        *o += gv * xv;
                    }
                });
            }
            Op::Scale(a, c) => acc(*a, &|d| {
                for (o, &gv) in d.data_mut().iter_mut().zip(g.data()) {
                    *o += gv * *c;
                }
            }),
            Op::Relu(a) => acc(*a, &|d| {
                for ((o, &gv), &y) in d.data_mut().iter_mut().zip(g.data()).zip(out.data()) {
                    if y > T::zero() {
                        *o += gv;
                    }
                }
            }),
            Op::Exp(a) => acc(*a, &|d| {
                for ((o, &gv), &y) in d.data_mut().iter_mut().zip(g.data()).zip(out.data()) {
                    *o += gv * y;
                }
            }),
            Op::Log(a) => {
                let x = self.value(*a);
                acc(*a, &|d| {
                    for ((o, &gv), &xv) in d.data_mut().iter_mut().zip(g.data()).zip(x.data()) {
                        *o += gv / xv;
                    }
                });
            }
            Op::Neg(a) => acc(*a, &|d| {
                for (o, &gv) in d.data_mut().iter_mut().zip(g.data()) {
                    *o -= gv;
                }
            }),
            Op::Sum(a) => {
                let gv = g.data()[0];
                acc(*a, &|d| {
                    for o in d.data_mut() {
                        *o += gv;
                    }
                });
            }
            Op::ClampMin(a, floor) => {
                let x = self.value(*a);
                acc(*a, &|d| {
                    for ((o, &gv), &xv) in d.data_mut().iter_mut().zip(g.data()).zip(x.data()) {
                        if xv >= *floor {
                            *o += gv;
                        }
                    }
                });
            }
            Op::Reshape(a) => acc(*a, &|d| {
                for (o, &gv) in d.data_mut().iter_mut().zip(g.data()) {
                    *o += gv;
                }
            }),
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let w = self.value(p).cols();
                    acc(p, &|d| {
                        for r in 0..g.rows() {
                            for (o, &gv) in d.row_mut(r).iter_mut().zip(&g.row(r)[offset..offset + w]) {
                                *o += gv;
                            }
                        }
                    });
                    offset += w;
                }
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let n = self.value(p).len();
                    acc(p, &|d| {
                        for (o, &gv) in d.data_mut().iter_mut().zip(&g.data()[offset..offset + n]) {
                            *o += gv;
                        }
                    });
                    offset += n;
                }
            }
            Op::GatherRows(a, idx) => acc(*a, &|d| {
                for (r, &src) in idx.iter().enumerate() {
                    for (o, &gv) in d.row_mut(src).iter_mut().zip(g.row(r)) {
                        *o += gv;
                    }
                }
            }),
            Op::SegmentSum(a, seg) => acc(*a, &|d| {
                for (r, &s) in seg.iter().enumerate() {
                    for (o, &gv) in d.row_mut(r).iter_mut().zip(g.row(s)) {
                        *o += gv;
                    }
                }
            }),
            Op::SegmentMean(a, seg, counts) => acc(*a, &|d| {
                for (r, &s) in seg.iter().enumerate() {
                    let inv = T::one() / T::lit(counts[s] as f64);
                    for (o, &gv) in d.row_mut(r).iter_mut().zip(g.row(s)) {
                        *o += gv * inv;
                    }
                }
            }),
            Op::SegmentLogSumExp(a, seg) => {
                let x = self.value(*a);
                acc(*a, &|d| {
                    for (r, &s) in seg.iter().enumerate() {
                        for c in 0..x.cols() {
                            let (xv, lse) = (x.get(r, c), out.get(s, c));
                            if xv.is_finite() && lse.is_finite() {
                                let w = (xv - lse).exp();
                                d.set(r, c, d.get(r, c) + g.get(s, c) * w);
                            }
                        }
                    }
                });
            }
            Op::LogSoftmax(a, valid) => acc(*a, &|d| {
                let cols = out.cols();
                for r in 0..out.rows() {
                    let mut gsum = T::zero();
                    for c in 0..cols {
                        if valid.as_ref().is_none_or(|v| v[r * cols + c]) {
                            gsum += g.get(r, c);
                        }
                    }
                    for c in 0..cols {
                        if valid.as_ref().is_none_or(|v| v[r * cols + c]) {
                            let p = out.get(r, c).exp();
                            d.set(r, c, d.get(r, c) + g.get(r, c) - p * gsum);
                        }
                    }
                }
            }),
        }
    }
}
