//! Reverse-mode differentiation over dense matrices.
//!
//! Every primitive evaluates eagerly and appends a node recording its inputs.
//! [`Tape::backward`] walks the nodes in exact reverse order, applying each
//! primitive's adjoint, and accumulates parameter gradients into the
//! [`ParameterStore`]. A tape is single-use: build a fresh one (or call
//! [`Tape::clear`]) for every forward pass.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numcore::params::{ParamId, ParameterStore};
use crate::numcore::tensor::Tensor;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Constant,
    Param(ParamId),
    ParamRows(ParamId, Vec<usize>),
    MatMul(Var, Var),
    MatMulT(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    Sub(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    ConcatCols(Vec<Var>),
    StackRows(Vec<Var>),
    SliceRows(Var, usize),
    GatherRows(Var, Vec<usize>),
    MaskedSoftmaxRows(Var),
    OuterSum(Var, Var),
    Mask(Var, Arc<Vec<bool>>),
    LeakyRelu(Var, f64),
    Tanh(Var),
    MeanRows(Var, Vec<usize>),
    Dot(Var, Var),
    SumSq(Var),
    SumSqRows(Var),
    Sum(Var),
    Hinge(Var),
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    op: Op,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn shape_err(op: &'static str, lhs: (usize, usize), rhs: (usize, usize)) -> Error {
    Error::Shape { op, lhs, rhs }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(&mut self) {
        self.nodes.clear();
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

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Constant)
    }

    /// Leaf reading the full value of a parameter.
    pub fn param(&mut self, store: &ParameterStore, id: ParamId) -> Var {
        self.push(store.value(id).clone(), Op::Param(id))
    }

    /// Leaf reading selected rows of a parameter (an embedding lookup).
    pub fn param_rows(&mut self, store: &ParameterStore, id: ParamId, rows: &[usize]) -> Result<Var> {
        let src = store.value(id);
        let value = gather(src, rows, "param_rows")?;
        Ok(self.push(value, Op::ParamRows(id, rows.to_vec())))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).matmul(self.value(b))?;
        Ok(self.push(v, Op::MatMul(a, b)))
    }

    /// `a · bᵀ`.
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).matmul_t(self.value(b))?;
        Ok(self.push(v, Op::MatMulT(a, b)))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let v = self.value(a).transpose();
        self.push(v, Op::Transpose(a))
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(shape_err(op, self.shape(a), self.shape(b)));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x + y);
        Ok(self.push(v, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x - y);
        Ok(self.push(v, Op::Sub(a, b)))
    }

    /// Adds the `1 × m` row `row` to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let (r, c) = self.shape(row);
        if r != 1 || c != self.shape(a).1 {
            return Err(shape_err("add_row", self.shape(a), (r, c)));
        }
        let mut v = self.value(a).clone();
        let rv = self.value(row).data().to_vec();
        for i in 0..v.rows() {
            for (x, y) in v.row_mut(i).iter_mut().zip(&rv) {
                *x += y;
            }
        }
        Ok(self.push(v, Op::AddRow(a, row)))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a).map(|x| c * x);
        self.push(v, Op::Scale(a, c))
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a).map(|x| x + c);
        self.push(v, Op::AddScalar(a))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts.first().ok_or(Error::Empty("concat_cols inputs"))?;
        let rows = self.shape(first).0;
        for &p in parts {
            if self.shape(p).0 != rows {
                return Err(shape_err("concat_cols", self.shape(first), self.shape(p)));
            }
        }
        let cols: usize = parts.iter().map(|&p| self.shape(p).1).sum();
        let mut v = Tensor::zeros(rows, cols);
        for i in 0..rows {
            let mut off = 0;
            for &p in parts {
                let src = self.value(p).row(i);
                v.row_mut(i)[off..off + src.len()].copy_from_slice(src);
                off += src.len();
            }
        }
        Ok(self.push(v, Op::ConcatCols(parts.to_vec())))
    }

    pub fn stack_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts.first().ok_or(Error::Empty("stack_rows inputs"))?;
        let cols = self.shape(first).1;
        for &p in parts {
            if self.shape(p).1 != cols {
                return Err(shape_err("stack_rows", self.shape(first), self.shape(p)));
            }
        }
        let mut data = Vec::new();
        for &p in parts {
            data.extend_from_slice(self.value(p).data());
        }
        let rows = data.len() / cols.max(1);
        let v = Tensor::from_vec(rows, cols, data)?;
        Ok(self.push(v, Op::StackRows(parts.to_vec())))
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let (r, c) = self.shape(a);
        if start + len > r {
            return Err(shape_err("slice_rows", (r, c), (start + len, c)));
        }
        let v = Tensor::from_vec(len, c, self.value(a).data()[start * c..(start + len) * c].to_vec())?;
        Ok(self.push(v, Op::SliceRows(a, start)))
    }

    pub fn gather_rows(&mut self, a: Var, rows: &[usize]) -> Result<Var> {
        let v = gather(self.value(a), rows, "gather_rows")?;
        Ok(self.push(v, Op::GatherRows(a, rows.to_vec())))
    }

    /// Row-wise softmax where `-∞` entries receive weight exactly 0. A row
    /// with no finite entry is an error.
    pub fn masked_softmax_rows(&mut self, a: Var) -> Result<Var> {
        let x = self.value(a);
        let mut out = Tensor::zeros(x.rows(), x.cols());
        for i in 0..x.rows() {
            let row = x.row(i);
            if row.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
                return Err(Error::Numeric(format!("softmax row {i} contains NaN or +inf")));
            }
            let max = row
                .iter()
                .copied()
                .filter(|v| v.is_finite())
                .fold(f64::NEG_INFINITY, f64::max);
            if max == f64::NEG_INFINITY {
                return Err(Error::Numeric(format!("softmax row {i} is fully masked")));
            }
            let o = out.row_mut(i);
            let mut z = 0.0;
            for (oj, &xj) in o.iter_mut().zip(row) {
                if xj.is_finite() {
                    *oj = (xj - max).exp();
                    z += *oj;
                }
            }
            o.iter_mut().for_each(|v| *v /= z);
        }
        Ok(self.push(out, Op::MaskedSoftmaxRows(a)))
    }

    /// `out[u][v] = s[u] + t[v]` for `n × 1` columns `s` and `t`.
    pub fn outer_sum(&mut self, s: Var, t: Var) -> Result<Var> {
        let (n, c) = self.shape(s);
        let (m, ct) = self.shape(t);
        if c != 1 || ct != 1 {
            return Err(shape_err("outer_sum", (n, c), (m, ct)));
        }
        let sv = self.value(s).data();
        let tv = self.value(t).data();
        let mut out = Tensor::zeros(n, m);
        for u in 0..n {
            for v in 0..m {
                out[(u, v)] = sv[u] + tv[v];
            }
        }
        Ok(self.push(out, Op::OuterSum(s, t)))
    }

    /// Replaces entries where `keep` is false with the `-∞` sentinel.
    pub fn mask(&mut self, a: Var, keep: Arc<Vec<bool>>) -> Result<Var> {
        let x = self.value(a);
        if keep.len() != x.len() {
            return Err(shape_err("mask", x.shape(), (keep.len(), 1)));
        }
        let mut out = x.clone();
        for (o, &k) in out.data_mut().iter_mut().zip(keep.iter()) {
            if !k {
                *o = f64::NEG_INFINITY;
            }
        }
        Ok(self.push(out, Op::Mask(a, keep)))
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Var {
        let v = self.value(a).map(|x| if x > 0.0 { x } else { slope * x });
        self.push(v, Op::LeakyRelu(a, slope))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.value(a).map(f64::tanh);
        self.push(v, Op::Tanh(a))
    }

    /// Mean of the selected rows, as a `1 × m` row.
    pub fn mean_rows(&mut self, a: Var, rows: &[usize]) -> Result<Var> {
        if rows.is_empty() {
            return Err(Error::Empty("mean_rows selection"));
        }
        let x = self.value(a);
        let mut out = Tensor::zeros(1, x.cols());
        for &r in rows {
            if r >= x.rows() {
                return Err(shape_err("mean_rows", x.shape(), (r + 1, x.cols())));
            }
            for (o, v) in out.row_mut(0).iter_mut().zip(x.row(r)) {
                *o += v;
            }
        }
        let k = rows.len() as f64;
        out.data_mut().iter_mut().for_each(|v| *v /= k);
        Ok(self.push(out, Op::MeanRows(a, rows.to_vec())))
    }

    /// Frobenius inner product, `1 × 1`.
    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("dot", a, b)?;
        let v = crate::numcore::tensor::dot(self.value(a).data(), self.value(b).data());
        Ok(self.push(Tensor::scalar(v), Op::Dot(a, b)))
    }

    /// Squared L2 norm, `1 × 1`.
    pub fn sum_sq(&mut self, a: Var) -> Var {
        let v = self.value(a).sum_sq();
        self.push(Tensor::scalar(v), Op::SumSq(a))
    }

    /// Per-row squared L2 norm, `n × 1`.
    pub fn sum_sq_rows(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let data = (0..x.rows()).map(|i| x.row(i).iter().map(|v| v * v).sum()).collect();
        let v = Tensor::from_vec(x.rows(), 1, data).expect("one entry per row");
        self.push(v, Op::SumSqRows(a))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let v = self.value(a).sum();
        self.push(Tensor::scalar(v), Op::Sum(a))
    }

    /// Elementwise `max(0, x)`.
    pub fn hinge(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| x.max(0.0));
        self.push(v, Op::Hinge(a))
    }

    /// Back-propagates from the `1 × 1` node `root`, adding parameter
    /// gradients into `store`.
    pub fn backward(&self, root: Var, store: &mut ParameterStore) -> Result<()> {
        if self.shape(root) != (1, 1) {
            return Err(shape_err("backward", self.shape(root), (1, 1)));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; root.0 + 1];
        grads[root.0] = Some(Tensor::scalar(1.0));

        fn acc(grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
            match &mut grads[v.0] {
                Some(t) => t.add_assign(&g),
                slot @ None => *slot = Some(g),
            }
        }

        for idx in (0..=root.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Constant => {}
                Op::Param(id) => store.grad_mut(*id).add_assign(&g),
                Op::ParamRows(id, rows) => {
                    let dst = store.grad_mut(*id);
                    for (k, &r) in rows.iter().enumerate() {
                        for (d, s) in dst.row_mut(r).iter_mut().zip(g.row(k)) {
                            *d += s;
                        }
                    }
                }
                Op::MatMul(a, b) => {
                    let ga = g.matmul_t(self.value(*b))?;
                    let gb = self.value(*a).t_matmul(&g)?;
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::MatMulT(a, b) => {
                    let ga = g.matmul(self.value(*b))?;
                    let gb = g.t_matmul(self.value(*a))?;
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::Transpose(a) => acc(&mut grads, *a, g.transpose()),
                Op::Add(a, b) => {
                    acc(&mut grads, *b, g.clone());
                    acc(&mut grads, *a, g);
                }
                Op::Sub(a, b) => {
                    acc(&mut grads, *b, g.map(|x| -x));
                    acc(&mut grads, *a, g);
                }
                Op::AddRow(a, row) => {
                    let mut gr = Tensor::zeros(1, g.cols());
                    for i in 0..g.rows() {
                        for (d, s) in gr.row_mut(0).iter_mut().zip(g.row(i)) {
                            *d += s;
                        }
                    }
                    acc(&mut grads, *row, gr);
                    acc(&mut grads, *a, g);
                }
                Op::Scale(a, c) => acc(&mut grads, *a, g.map(|x| c * x)),
                Op::AddScalar(a) => acc(&mut grads, *a, g),
                Op::ConcatCols(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let (r, c) = self.shape(p);
                        let mut gp = Tensor::zeros(r, c);
                        for i in 0..r {
                            gp.row_mut(i).copy_from_slice(&g.row(i)[off..off + c]);
                        }
                        off += c;
                        acc(&mut grads, p, gp);
                    }
                }
                Op::StackRows(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let (r, c) = self.shape(p);
                        let gp = Tensor::from_vec(r, c, g.data()[off * c..(off + r) * c].to_vec())?;
                        off += r;
                        acc(&mut grads, p, gp);
                    }
                }
                Op::SliceRows(a, start) => {
                    let (r, c) = self.shape(*a);
                    let mut ga = Tensor::zeros(r, c);
                    ga.data_mut()[start * c..start * c + g.len()].copy_from_slice(g.data());
                    acc(&mut grads, *a, ga);
                }
                Op::GatherRows(a, rows) => {
                    let (r, c) = self.shape(*a);
                    let mut ga = Tensor::zeros(r, c);
                    for (k, &src) in rows.iter().enumerate() {
                        for (d, s) in ga.row_mut(src).iter_mut().zip(g.row(k)) {
                            *d += s;
                        }
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::MaskedSoftmaxRows(a) => {
                    let y = &node.value;
                    let mut ga = Tensor::zeros(y.rows(), y.cols());
                    for i in 0..y.rows() {
                        let yr = y.row(i);
                        let gr = g.row(i);
                        let inner: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                        for (o, (&yj, &gj)) in ga.row_mut(i).iter_mut().zip(yr.iter().zip(gr)) {
                            *o = yj * (gj - inner);
                        }
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::OuterSum(s, t) => {
                    let mut gs = Tensor::zeros(g.rows(), 1);
                    let mut gt = Tensor::zeros(g.cols(), 1);
                    for u in 0..g.rows() {
                        for (v, &x) in g.row(u).iter().enumerate() {
                            gs.data_mut()[u] += x;
                            gt.data_mut()[v] += x;
                        }
                    }
                    acc(&mut grads, *s, gs);
                    acc(&mut grads, *t, gt);
                }
                Op::Mask(a, keep) => {
                    let mut ga = g;
                    for (o, &k) in ga.data_mut().iter_mut().zip(keep.iter()) {
                        if !k {
                            *o = 0.0;
                        }
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::LeakyRelu(a, slope) => {
                    let ga = g.zip_map(self.value(*a), |gv, x| if x > 0.0 { gv } else { slope * gv });
                    acc(&mut grads, *a, ga);
                }
                Op::Tanh(a) => {
                    let ga = g.zip_map(&node.value, |gv, y| gv * (1.0 - y * y));
                    acc(&mut grads, *a, ga);
                }
                Op::MeanRows(a, rows) => {
                    let (r, c) = self.shape(*a);
                    let mut ga = Tensor::zeros(r, c);
                    let k = rows.len() as f64;
                    for &src in rows {
                        for (d, s) in ga.row_mut(src).iter_mut().zip(g.row(0)) {
                            *d += s / k;
                        }
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::Dot(a, b) => {
                    let gv = g.item();
                    let ga = self.value(*b).map(|x| gv * x);
                    let gb = self.value(*a).map(|x| gv * x);
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::SumSq(a) => {
                    let gv = g.item();
                    acc(&mut grads, *a, self.value(*a).map(|x| 2.0 * gv * x));
                }
                Op::SumSqRows(a) => {
                    let x = self.value(*a);
                    let mut ga = x.clone();
                    for i in 0..x.rows() {
                        let gi = g.data()[i];
                        ga.row_mut(i).iter_mut().for_each(|v| *v *= 2.0 * gi);
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::Sum(a) => {
                    let (r, c) = self.shape(*a);
                    acc(&mut grads, *a, Tensor::filled(r, c, g.item()));
                }
                Op::Hinge(a) => {
                    let ga = g.zip_map(self.value(*a), |gv, x| if x > 0.0 { gv } else { 0.0 });
                    acc(&mut grads, *a, ga);
                }
            }
        }
        Ok(())
    }
}

fn gather(src: &Tensor, rows: &[usize], op: &'static str) -> Result<Tensor> {
    let c = src.cols();
    let mut data = Vec::with_capacity(rows.len() * c);
    for &r in rows {
        if r >= src.rows() {
            return Err(shape_err(op, src.shape(), (r + 1, c)));
        }
        data.extend_from_slice(src.row(r));
    }
    Tensor::from_vec(rows.len(), c, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masked_softmax_annihilates_masked_entries() {
        let mut tape = Tape::new();
        for x in [-3.0, 0.0, 17.5] {
            let a = tape.constant(Tensor::row_vector(vec![x, f64::NEG_INFINITY]));
            let y = tape.masked_softmax_rows(a).unwrap();
            assert_eq!(tape.value(y).data(), &[1.0, 0.0]);
        }
        let a = tape.constant(Tensor::row_vector(vec![2.5; 3]));
        let y = tape.masked_softmax_rows(a).unwrap();
        for &w in tape.value(y).data() {
            assert!((w - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn fully_masked_row_is_rejected() {
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::row_vector(vec![f64::NEG_INFINITY; 2]));
        assert!(tape.masked_softmax_rows(a).is_err());
    }

    #[test]
    fn shape_errors_name_the_op() {
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::zeros(2, 3));
        let b = tape.constant(Tensor::zeros(2, 3));
        let err = tape.matmul(a, b).unwrap_err();
        assert_eq!(err.to_string(), "shape mismatch in matmul: (2, 3) vs (2, 3)");
        let one = tape.constant(Tensor::scalar(1.0));
        assert!(tape.add(a, one).is_err());
    }

    #[test]
    fn backward_accumulates_param_rows() {
        let mut store = ParameterStore::new();
        let id = store.add("emb", Tensor::from_vec(3, 2, vec![1., 2., 3., 4., 5., 6.]).unwrap()).unwrap();
        let mut tape = Tape::new();
        let rows = tape.param_rows(&store, id, &[2, 0, 2]).unwrap();
        let s = tape.sum(rows);
        tape.backward(s, &mut store).unwrap();
        assert_eq!(store.grad(id).data(), &[1., 1., 0., 0., 2., 2.]);
    }
}
