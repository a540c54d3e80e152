use std::sync::Arc;

use ndarray::{Array2, Axis, Zip};
use rand::Rng;

use super::sparse::SparseRows;
use crate::error::{Error, Result};
use crate::scalar::{c, Scalar};

pub type Matrix<T> = Array2<T>;

/// Directed `(row, col)` pairs shared between the tape and its callers.
pub type EdgeList = Arc<[(usize, usize)]>;

/// Handle to a tensor recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op<T> {
    Leaf,
    MatMul(Var, Var),
    SparseMatMul(Arc<SparseRows<T>>, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    AddScalar(Var, Var),
    Scale(Var, T),
    ScaleBy(Var, Var),
    Mul(Var, Var),
    MulCol(Var, Var),
    Transpose(Var),
    Pick(Var, usize),
    Sum(Var),
    RowSoftmax(Var),
    Elu(Var),
    Softplus(Var),
    ClampMin0(Var),
    ClampMax0(Var),
    Dropout(Var, Array2<T>),
    CosineRows(Var, Var),
    EdgeCosine(Var, EdgeList),
    Propagate {
        weights: Var,
        h: Var,
        edges: EdgeList,
    },
    CrossEntropy {
        logits: Var,
        probs: Array2<T>,
        labels: Arc<[usize]>,
        rows: Arc<[usize]>,
    },
}

#[derive(Debug)]
struct Node<T> {
    value: Array2<T>,
    op: Op<T>,
    requires_grad: bool,
}

/// Records the forward computation so that [`Tape::backward`] can replay it
/// in reverse.
///
/// Inputs always precede outputs, so reverse insertion order is a reverse
/// topological order and each node is visited once.
#[derive(Debug, Default)]
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
}

/// Gradients of a scalar loss, indexed by the [`Var`] handles of the tape
/// that produced them.
#[derive(Debug, Clone)]
pub struct Gradients<T> {
    grads: Vec<Option<Array2<T>>>,
    shapes: Vec<(usize, usize)>,
}

impl<T: Scalar> Gradients<T> {
    pub fn get(&self, v: Var) -> Option<&Array2<T>> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    /// Gradient for `v`, or zeros of the right shape when no path reaches it.
    pub fn get_or_zero(&self, v: Var) -> Array2<T> {
        match self.get(v) {
            Some(g) => g.clone(),
            None => Array2::zeros(self.shapes[v.0]),
        }
    }
}

fn shape<T>(a: &Array2<T>) -> (usize, usize) {
    a.dim()
}

fn check(op: &'static str, ok: bool, lhs: (usize, usize), rhs: (usize, usize)) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Shape { op, lhs, rhs })
    }
}

fn accumulate<T: Scalar>(slot: &mut Option<Array2<T>>, delta: Array2<T>) {
    match slot {
        Some(g) => g.zip_mut_with(&delta, |x, &y| *x = *x + y),
        None => *slot = Some(delta),
    }
}

fn elu<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x
    } else {
        x.exp_m1()
    }
}

fn softplus<T: Scalar>(x: T) -> T {
    x.max(T::zero()) + (-x.abs()).exp().ln_1p()
}

fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        (T::one() + (-x).exp()).recip()
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

fn softmax_rows<T: Scalar>(a: &Array2<T>) -> Result<Array2<T>> {
    let mut out = a.clone();
    for (r, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        if !max.is_finite() {
            return Err(Error::DegenerateSoftmax(r));
        }
        row.mapv_inplace(|x| (x - max).exp());
        let s = row.sum();
        row.mapv_inplace(|x| x / s);
    }
    Ok(out)
}

fn cosine_eps<T: Scalar>() -> T {
    c(1e-12)
}

fn row_norms<T: Scalar>(a: &Array2<T>) -> Vec<T> {
    a.axis_iter(Axis(0))
        .map(|r| r.iter().fold(T::zero(), |s, &x| s + x * x).sqrt())
        .collect()
}

fn dot_rows<T: Scalar>(a: &Array2<T>, i: usize, b: &Array2<T>, j: usize) -> T {
    a.row(i)
        .iter()
        .zip(b.row(j).iter())
        .fold(T::zero(), |s, (&x, &y)| s + x * y)
}

/// Gradient of `cos(a, b) = a·b / (|a||b| + ε)` with respect to `a`,
/// scaled by `g` and accumulated into `out`.
#[allow(clippy::too_many_arguments)]
fn cosine_grad_into<T: Scalar>(
    out: &mut ndarray::ArrayViewMut1<T>,
    a: ndarray::ArrayView1<T>,
    b: ndarray::ArrayView1<T>,
    na: T,
    nb: T,
    dot: T,
    g: T,
) {
    let denom = na * nb + cosine_eps();
    let first = g / denom;
    let second = if na > T::zero() {
        g * dot * nb / (denom * denom * na)
    } else {
        T::zero()
    };
    Zip::from(out).and(&a).and(&b).for_each(|o, &ai, &bi| {
        *o = *o + first * bi - second * ai;
    });
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Array2<T> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.dim()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn push(&mut self, value: Array2<T>, op: Op<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// A trainable input.
    pub fn param(&mut self, value: Array2<T>) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// A non-differentiable input.
    pub fn constant(&mut self, value: Array2<T>) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        check("matmul", va.ncols() == vb.nrows(), shape(va), shape(vb))?;
        let out = va.dot(vb);
        let rg = self.rg(&[a, b]);
        Ok(self.push(out, Op::MatMul(a, b), rg))
    }

    /// `x · w` for a constant sparse `x`.
    pub fn sparse_matmul(&mut self, x: Arc<SparseRows<T>>, w: Var) -> Result<Var> {
        let vw = self.value(w);
        check("sparse_matmul", x.dim().1 == vw.nrows(), x.dim(), shape(vw))?;
        let out = x.dot(vw);
        let rg = self.rg(&[w]);
        Ok(self.push(out, Op::SparseMatMul(x, w), rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        check("add", va.dim() == vb.dim(), shape(va), shape(vb))?;
        let out = va + vb;
        let rg = self.rg(&[a, b]);
        Ok(self.push(out, Op::Add(a, b), rg))
    }

    /// `a + 1 bᵀ`: adds the `1 x F` row `b` to every row of `a`.
    pub fn add_row(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        check(
            "add_row",
            vb.nrows() == 1 && vb.ncols() == va.ncols(),
            shape(va),
            shape(vb),
        )?;
        let out = va + vb;
        let rg = self.rg(&[a, b]);
        Ok(self.push(out, Op::AddRow(a, b), rg))
    }

    /// Adds the `1 x 1` tensor `s` to every entry of `a`.
    pub fn add_scalar(&mut self, a: Var, s: Var) -> Result<Var> {
        let (va, vs) = (self.value(a), self.value(s));
        check("add_scalar", vs.dim() == (1, 1), shape(va), shape(vs))?;
        let k = vs[[0, 0]];
        let out = va.mapv(|x| x + k);
        let rg = self.rg(&[a, s]);
        Ok(self.push(out, Op::AddScalar(a, s), rg))
    }

    /// Adds a constant matrix; gradient passes through to `a` only.
    pub fn add_const(&mut self, a: Var, k: &Array2<T>) -> Result<Var> {
        let shift = self.constant(k.clone());
        self.add(a, shift)
    }

    pub fn scale(&mut self, a: Var, k: T) -> Var {
        let out = self.value(a).mapv(|x| x * k);
        let rg = self.rg(&[a]);
        self.push(out, Op::Scale(a, k), rg)
    }

    /// Multiplies every entry of `a` by the `1 x 1` tensor `s`.
    pub fn scale_by(&mut self, a: Var, s: Var) -> Result<Var> {
        let (va, vs) = (self.value(a), self.value(s));
        check("scale_by", vs.dim() == (1, 1), shape(va), shape(vs))?;
        let k = vs[[0, 0]];
        let out = va.mapv(|x| x * k);
        let rg = self.rg(&[a, s]);
        Ok(self.push(out, Op::ScaleBy(a, s), rg))
    }

    /// Hadamard product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        check("mul", va.dim() == vb.dim(), shape(va), shape(vb))?;
        let out = va * vb;
        let rg = self.rg(&[a, b]);
        Ok(self.push(out, Op::Mul(a, b), rg))
    }

    /// Scales row `i` of `a` by `v[i]`, with `v` an `N x 1` column.
    pub fn mul_col(&mut self, a: Var, v: Var) -> Result<Var> {
        let (va, vv) = (self.value(a), self.value(v));
        check(
            "mul_col",
            vv.ncols() == 1 && vv.nrows() == va.nrows(),
            shape(va),
            shape(vv),
        )?;
        let out = va * vv;
        let rg = self.rg(&[a, v]);
        Ok(self.push(out, Op::MulCol(a, v), rg))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let out = self.value(a).t().to_owned();
        let rg = self.rg(&[a]);
        self.push(out, Op::Transpose(a), rg)
    }

    /// Entry `j` of a `1 x k` row, as a `1 x 1` tensor.
    pub fn pick(&mut self, a: Var, j: usize) -> Result<Var> {
        let va = self.value(a);
        check("pick", va.nrows() == 1 && j < va.ncols(), shape(va), (1, j))?;
        let out = Array2::from_elem((1, 1), va[[0, j]]);
        let rg = self.rg(&[a]);
        Ok(self.push(out, Op::Pick(a, j), rg))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let out = Array2::from_elem((1, 1), self.value(a).sum());
        let rg = self.rg(&[a]);
        self.push(out, Op::Sum(a), rg)
    }

    /// Softmax along each row, max-subtracted.
    pub fn row_softmax(&mut self, a: Var) -> Result<Var> {
        let out = softmax_rows(self.value(a))?;
        let rg = self.rg(&[a]);
        Ok(self.push(out, Op::RowSoftmax(a), rg))
    }

    /// ELU with α = 1.
    pub fn elu(&mut self, a: Var) -> Var {
        let out = self.value(a).mapv(elu);
        let rg = self.rg(&[a]);
        self.push(out, Op::Elu(a), rg)
    }

    pub fn softplus(&mut self, a: Var) -> Var {
        let out = self.value(a).mapv(softplus);
        let rg = self.rg(&[a]);
        self.push(out, Op::Softplus(a), rg)
    }

    /// `max(a, 0)` elementwise.
    pub fn clamp_min0(&mut self, a: Var) -> Var {
        let out = self.value(a).mapv(|x| x.max(T::zero()));
        let rg = self.rg(&[a]);
        self.push(out, Op::ClampMin0(a), rg)
    }

    /// `min(a, 0)` elementwise.
    pub fn clamp_max0(&mut self, a: Var) -> Var {
        let out = self.value(a).mapv(|x| x.min(T::zero()));
        let rg = self.rg(&[a]);
        self.push(out, Op::ClampMax0(a), rg)
    }

    /// Inverted dropout. Identity (same handle) when not training or when
    /// `rate` is zero.
    pub fn dropout<R: Rng + ?Sized>(
        &mut self,
        a: Var,
        rate: f64,
        training: bool,
        rng: &mut R,
    ) -> Result<Var> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Config(format!("dropout rate {rate} outside [0, 1)")));
        }
        if !training || rate == 0.0 {
            return Ok(a);
        }
        let keep: T = c(1.0 / (1.0 - rate));
        let mask = self
            .value(a)
            .mapv(|_| if rng.random::<f64>() < rate { T::zero() } else { keep });
        let out = self.value(a) * &mask;
        let rg = self.rg(&[a]);
        Ok(self.push(out, Op::Dropout(a, mask), rg))
    }

    /// Pairwise cosine similarity between the rows of `a` (`N x F`) and the
    /// rows of `b` (`M x F`). A zero row has similarity 0 with everything.
    pub fn cosine_rows(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        check("cosine_rows", va.ncols() == vb.ncols(), shape(va), shape(vb))?;
        let (na, nb) = (row_norms(va), row_norms(vb));
        let dots = va.dot(&vb.t());
        let mut out = dots;
        for ((i, j), x) in out.indexed_iter_mut() {
            *x = *x / (na[i] * nb[j] + cosine_eps());
        }
        let rg = self.rg(&[a, b]);
        Ok(self.push(out, Op::CosineRows(a, b), rg))
    }

    /// Cosine similarity of the endpoint rows of each edge, as an `E x 1`
    /// column. Self-pairs `(i, i)` are forced to 0.
    pub fn edge_cosine(&mut self, h: Var, edges: EdgeList) -> Result<Var> {
        let vh = self.value(h);
        let n = vh.nrows();
        for &(i, j) in edges.iter() {
            if i >= n || j >= n {
                return Err(Error::NodeOutOfRange(i.max(j), n));
            }
        }
        let norms = row_norms(vh);
        let mut out = Array2::zeros((edges.len(), 1));
        for (e, &(i, j)) in edges.iter().enumerate() {
            if i != j {
                out[[e, 0]] = dot_rows(vh, i, vh, j) / (norms[i] * norms[j] + cosine_eps());
            }
        }
        let rg = self.rg(&[h]);
        Ok(self.push(out, Op::EdgeCosine(h, edges), rg))
    }

    /// Sparse propagation: `out[i] = Σ_{e=(i,j)} w[e] · h[j]`, with `w` an
    /// `E x 1` column aligned with `edges`.
    pub fn propagate(&mut self, weights: Var, h: Var, edges: EdgeList) -> Result<Var> {
        let (vw, vh) = (self.value(weights), self.value(h));
        check(
            "propagate",
            vw.ncols() == 1 && vw.nrows() == edges.len(),
            shape(vw),
            (edges.len(), 1),
        )?;
        let n = vh.nrows();
        let mut out = Array2::zeros(vh.raw_dim());
        for (e, &(i, j)) in edges.iter().enumerate() {
            if i >= n || j >= n {
                return Err(Error::NodeOutOfRange(i.max(j), n));
            }
            let w = vw[[e, 0]];
            if w != T::zero() {
                out.row_mut(i).scaled_add(w, &vh.row(j));
            }
        }
        let rg = self.rg(&[weights, h]);
        Ok(self.push(out, Op::Propagate { weights, h, edges }, rg))
    }

    /// Mean negative log-likelihood of `labels` under `softmax(logits)` over
    /// the rows listed in `rows`. Returns a `1 x 1` tensor.
    pub fn cross_entropy_masked(
        &mut self,
        logits: Var,
        labels: Arc<[usize]>,
        rows: Arc<[usize]>,
    ) -> Result<Var> {
        if rows.is_empty() {
            return Err(Error::EmptyMask);
        }
        let vl = self.value(logits);
        check(
            "cross_entropy_masked",
            labels.len() == vl.nrows(),
            shape(vl),
            (labels.len(), 1),
        )?;
        let probs = softmax_rows(vl)?;
        let mut total = T::zero();
        for &r in rows.iter() {
            let l = labels[r];
            if l >= vl.ncols() {
                return Err(Error::Config(format!(
                    "label {l} of node {r} exceeds {} classes",
                    vl.ncols()
                )));
            }
            let max = vl.row(r).iter().copied().fold(T::neg_infinity(), T::max);
            let lse = vl.row(r).iter().fold(T::zero(), |s, &x| s + (x - max).exp()).ln() + max;
            total = total + lse - vl[[r, l]];
        }
        let out = Array2::from_elem((1, 1), total / T::from_usize_lossy(rows.len()));
        let rg = self.rg(&[logits]);
        Ok(self.push(
            out,
            Op::CrossEntropy {
                logits,
                probs,
                labels,
                rows,
            },
            rg,
        ))
    }

    /// Reverse sweep from a `1 x 1` loss. The tape is cleared afterwards.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients<T>> {
        let ls = self.shape(loss);
        if ls != (1, 1) {
            return Err(Error::NonScalarLoss(ls));
        }
        let nodes = std::mem::take(&mut self.nodes);
        let shapes: Vec<_> = nodes.iter().map(|n| n.value.dim()).collect();
        let mut grads: Vec<Option<Array2<T>>> = (0..nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Array2::ones((1, 1)));

        for idx in (0..=loss.0).rev() {
            let node = &nodes[idx];
            if !node.requires_grad {
                continue;
            }
            let g = match &node.op {
                Op::Leaf => continue,
                _ => match grads[idx].take() {
                    Some(g) => g,
                    None => continue,
                },
            };
            let val = |v: Var| &nodes[v.0].value;
            let wants = |v: Var| nodes[v.0].requires_grad;
            let mut send = |v: Var, delta: Array2<T>| {
                if nodes[v.0].requires_grad {
                    accumulate(&mut grads[v.0], delta);
                }
            };
            match &node.op {
                Op::Leaf => unreachable!(),
                Op::MatMul(a, b) => {
                    if wants(*a) {
                        send(*a, g.dot(&val(*b).t()));
                    }
                    if wants(*b) {
                        send(*b, val(*a).t().dot(&g));
                    }
                }
                Op::SparseMatMul(x, w) => send(*w, x.t_dot(&g)),
                Op::Add(a, b) => {
                    send(*b, g.clone());
                    send(*a, g);
                }
                Op::AddRow(a, b) => {
                    send(*b, g.sum_axis(Axis(0)).insert_axis(Axis(0)));
                    send(*a, g);
                }
                Op::AddScalar(a, s) => {
                    send(*s, Array2::from_elem((1, 1), g.sum()));
                    send(*a, g);
                }
                Op::Scale(a, k) => send(*a, g.mapv(|x| x * *k)),
                Op::ScaleBy(a, s) => {
                    let k = val(*s)[[0, 0]];
                    if wants(*s) {
                        send(*s, Array2::from_elem((1, 1), (&g * val(*a)).sum()));
                    }
                    send(*a, g.mapv(|x| x * k));
                }
                Op::Mul(a, b) => {
                    if wants(*a) {
                        send(*a, &g * val(*b));
                    }
                    if wants(*b) {
                        send(*b, &g * val(*a));
                    }
                }
                Op::MulCol(a, v) => {
                    if wants(*v) {
                        let dv = (&g * val(*a)).sum_axis(Axis(1)).insert_axis(Axis(1));
                        send(*v, dv);
                    }
                    if wants(*a) {
                        send(*a, &g * val(*v));
                    }
                }
                Op::Transpose(a) => send(*a, g.t().to_owned()),
                Op::Pick(a, j) => {
                    let mut d = Array2::zeros(shapes[a.0]);
                    d[[0, *j]] = g[[0, 0]];
                    send(*a, d);
                }
                Op::Sum(a) => send(*a, Array2::from_elem(shapes[a.0], g[[0, 0]])),
                Op::RowSoftmax(a) => {
                    let y = &node.value;
                    let mut d = &g * y;
                    for (mut row, yrow) in d.axis_iter_mut(Axis(0)).zip(y.axis_iter(Axis(0))) {
                        let s = row.sum();
                        Zip::from(&mut row).and(&yrow).for_each(|r, &yi| *r = *r - yi * s);
                    }
                    send(*a, d);
                }
                Op::Elu(a) => {
                    let mut d = g;
                    Zip::from(&mut d).and(val(*a)).for_each(|d, &x| {
                        if x <= T::zero() {
                            *d = *d * x.exp();
                        }
                    });
                    send(*a, d);
                }
                Op::Softplus(a) => {
                    let mut d = g;
                    Zip::from(&mut d)
                        .and(val(*a))
                        .for_each(|d, &x| *d = *d * sigmoid(x));
                    send(*a, d);
                }
                Op::ClampMin0(a) => {
                    let mut d = g;
                    Zip::from(&mut d).and(val(*a)).for_each(|d, &x| {
                        if x <= T::zero() {
                            *d = T::zero();
                        }
                    });
                    send(*a, d);
                }
                Op::ClampMax0(a) => {
                    let mut d = g;
                    Zip::from(&mut d).and(val(*a)).for_each(|d, &x| {
                        if x >= T::zero() {
                            *d = T::zero();
                        }
                    });
                    send(*a, d);
                }
                Op::Dropout(a, mask) => send(*a, &g * mask),
                Op::CosineRows(a, b) => {
                    let (va, vb) = (val(*a), val(*b));
                    let (na, nb) = (row_norms(va), row_norms(vb));
                    let dots = va.dot(&vb.t());
                    let mut da = Array2::zeros(va.raw_dim());
                    let mut db = Array2::zeros(vb.raw_dim());
                    for i in 0..va.nrows() {
                        for j in 0..vb.nrows() {
                            let gij = g[[i, j]];
                            if gij == T::zero() {
                                continue;
                            }
                            let d = dots[[i, j]];
                            cosine_grad_into(&mut da.row_mut(i), va.row(i), vb.row(j), na[i], nb[j], d, gij);
                            cosine_grad_into(&mut db.row_mut(j), vb.row(j), va.row(i), nb[j], na[i], d, gij);
                        }
                    }
                    send(*a, da);
                    send(*b, db);
                }
                Op::EdgeCosine(h, edges) => {
                    let vh = val(*h);
                    let norms = row_norms(vh);
                    let mut dh = Array2::zeros(vh.raw_dim());
                    for (e, &(i, j)) in edges.iter().enumerate() {
                        let ge = g[[e, 0]];
                        if i == j || ge == T::zero() {
                            continue;
                        }
                        let d = dot_rows(vh, i, vh, j);
                        cosine_grad_into(&mut dh.row_mut(i), vh.row(i), vh.row(j), norms[i], norms[j], d, ge);
                        cosine_grad_into(&mut dh.row_mut(j), vh.row(j), vh.row(i), norms[j], norms[i], d, ge);
                    }
                    send(*h, dh);
                }
                Op::Propagate { weights, h, edges } => {
                    let (vw, vh) = (val(*weights), val(*h));
                    if wants(*weights) {
                        let mut dw = Array2::zeros(vw.raw_dim());
                        for (e, &(i, j)) in edges.iter().enumerate() {
                            dw[[e, 0]] = dot_rows(&g, i, vh, j);
                        }
                        send(*weights, dw);
                    }
                    if wants(*h) {
                        let mut dh = Array2::zeros(vh.raw_dim());
                        for (e, &(i, j)) in edges.iter().enumerate() {
                            let w = vw[[e, 0]];
                            if w != T::zero() {
                                dh.row_mut(j).scaled_add(w, &g.row(i));
                            }
                        }
                        send(*h, dh);
                    }
                }
                Op::CrossEntropy {
                    logits,
                    probs,
                    labels,
                    rows,
                } => {
                    let scale = g[[0, 0]] / T::from_usize_lossy(rows.len());
                    let mut d = Array2::zeros(probs.raw_dim());
                    for &r in rows.iter() {
                        let mut row = d.row_mut(r);
                        row.assign(&probs.row(r));
                        row[labels[r]] = row[labels[r]] - T::one();
                        row.mapv_inplace(|x| x * scale);
                    }
                    send(*logits, d);
                }
            }
        }
        Ok(Gradients { grads, shapes })
    }
}
