use std::cell::RefCell;

use rand::RngCore;

use crate::{Matrix, TensorError};

const LN_EPS: f64 = 1e-5;
const BCE_EPS: f64 = 1e-12;

/// Handle to a node in a [`Graph`]. Cheap to copy; only meaningful for the
/// graph that created it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tensor {
    id: usize,
}

#[derive(Debug)]
enum Op {
    Leaf,
    Matmul(usize, usize),
    Transpose(usize),
    Add(usize, usize),
    AddBias { src: usize, bias: usize },
    Mul(usize, usize),
    Affine { src: usize, mul: f64 },
    ScaleBy { src: usize, scalar: usize },
    SoftmaxRows(usize),
    Sigmoid(usize),
    Gelu(usize),
    LayerNorm { src: usize, gain: usize, bias: usize },
    Embed { table: usize, ids: Vec<usize> },
    ConcatRows(Vec<usize>),
    ConcatCols(Vec<usize>),
    SliceRows { src: usize, start: usize },
    SliceCols { src: usize, start: usize },
    MeanRows(usize),
    SumAll(usize),
    CrossEntropy { logits: usize, targets: Vec<usize> },
    BinaryCrossEntropy { prob: usize, label: f64 },
    Dropout { src: usize, mask: Vec<f64> },
}

struct Node {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    requires_grad: bool,
    op: Op,
}

#[derive(Default)]
struct Inner {
    nodes: Vec<Node>,
    grads: Vec<Option<Vec<f64>>>,
    backward_done: bool,
}

/// A single forward pass recorded as a tape of matrix operations.
#[derive(Default)]
pub struct Graph {
    inner: RefCell<Inner>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of nodes recorded so far.
    pub fn num_nodes(&self) -> usize {
        self.inner.borrow().nodes.len()
    }

    fn push(&self, rows: usize, cols: usize, data: Vec<f64>, requires_grad: bool, op: Op) -> Tensor {
        debug_assert_eq!(data.len(), rows * cols);
        let mut inner = self.inner.borrow_mut();
        let id = inner.nodes.len();
        inner.nodes.push(Node { rows, cols, data, requires_grad, op });
        Tensor { id }
    }

    fn requires(&self, t: Tensor) -> bool {
        self.inner.borrow().nodes[t.id].requires_grad
    }

    pub fn shape(&self, t: Tensor) -> (usize, usize) {
        let inner = self.inner.borrow();
        let n = &inner.nodes[t.id];
        (n.rows, n.cols)
    }

    /// Copy of the node's value.
    pub fn value(&self, t: Tensor) -> Matrix {
        let inner = self.inner.borrow();
        let n = &inner.nodes[t.id];
        Matrix::from_vec(n.rows, n.cols, n.data.clone()).expect("node shape is consistent")
    }

    /// Gradient of the loss with respect to `t`, if backward ran and the node
    /// participated in the differentiated subgraph.
    pub fn grad(&self, t: Tensor) -> Option<Matrix> {
        let inner = self.inner.borrow();
        let n = &inner.nodes[t.id];
        inner.grads.get(t.id)?.as_ref().map(|g| {
            Matrix::from_vec(n.rows, n.cols, g.clone()).expect("grad shape matches node")
        })
    }

    // ---- leaf constructors ----

    /// Insert a value; `requires_grad` marks it as a differentiation target.
    pub fn leaf(&self, value: &Matrix, requires_grad: bool) -> Tensor {
        self.push(value.rows(), value.cols(), value.data().to_vec(), requires_grad, Op::Leaf)
    }

    /// Insert a value that never receives gradient.
    pub fn constant(&self, value: &Matrix) -> Tensor {
        self.leaf(value, false)
    }

    pub fn scalar(&self, value: f64) -> Tensor {
        self.push(1, 1, vec![value], false, Op::Leaf)
    }

    /// Copy `t`'s value into a fresh leaf, cutting the gradient path.
    pub fn detach(&self, t: Tensor) -> Tensor {
        let (rows, cols, data) = {
            let inner = self.inner.borrow();
            let n = &inner.nodes[t.id];
            (n.rows, n.cols, n.data.clone())
        };
        self.push(rows, cols, data, false, Op::Leaf)
    }

    // ---- ops ----

    pub fn matmul(&self, a: Tensor, b: Tensor) -> Result<Tensor, TensorError> {
        let (ar, ac) = self.shape(a);
        let (br, bc) = self.shape(b);
        if ac != br {
            return Err(TensorError::ShapeMismatch {
                op: "matmul",
                lhs_rows: ar,
                lhs_cols: ac,
                rhs_rows: br,
                rhs_cols: bc,
            });
        }
        let mut out = vec![0.0; ar * bc];
        {
            let inner = self.inner.borrow();
            let ad = &inner.nodes[a.id].data;
            let bd = &inner.nodes[b.id].data;
            matmul_into(ad, ar, ac, bd, bc, &mut out);
        }
        let rg = self.requires(a) || self.requires(b);
        Ok(self.push(ar, bc, out, rg, Op::Matmul(a.id, b.id)))
    }

    pub fn transpose(&self, a: Tensor) -> Tensor {
        let (r, c) = self.shape(a);
        let mut out = vec![0.0; r * c];
        {
            let inner = self.inner.borrow();
            let ad = &inner.nodes[a.id].data;
            for i in 0..r {
                for j in 0..c {
                    out[j * r + i] = ad[i * c + j];
                }
            }
        }
        let rg = self.requires(a);
        self.push(c, r, out, rg, Op::Transpose(a.id))
    }

    pub fn add(&self, a: Tensor, b: Tensor) -> Result<Tensor, TensorError> {
        let (ar, ac) = self.shape(a);
        let (br, bc) = self.shape(b);
        if (ar, ac) != (br, bc) {
            return Err(TensorError::ShapeMismatch {
                op: "add",
                lhs_rows: ar,
                lhs_cols: ac,
                rhs_rows: br,
                rhs_cols: bc,
            });
        }
        let out = {
            let inner = self.inner.borrow();
            let ad = &inner.nodes[a.id].data;
            let bd = &inner.nodes[b.id].data;
            ad.iter().zip(bd).map(|(x, y)| x + y).collect()
        };
        let rg = self.requires(a) || self.requires(b);
        Ok(self.push(ar, ac, out, rg, Op::Add(a.id, b.id)))
    }

    /// Add a `1 x C` bias row to every row of `a`.
    pub fn add_bias(&self, a: Tensor, bias: Tensor) -> Result<Tensor, TensorError> {
        let (ar, ac) = self.shape(a);
        let (br, bc) = self.shape(bias);
        if br != 1 || bc != ac {
            return Err(TensorError::ShapeMismatch {
                op: "add_bias",
                lhs_rows: ar,
                lhs_cols: ac,
                rhs_rows: br,
                rhs_cols: bc,
            });
        }
        let out = {
            let inner = self.inner.borrow();
            let ad = &inner.nodes[a.id].data;
            let bd = &inner.nodes[bias.id].data;
            let mut out = ad.to_vec();
            for row in out.chunks_mut(ac) {
                for (x, b) in row.iter_mut().zip(bd) {
                    *x += b;
                }
            }
            out
        };
        let rg = self.requires(a) || self.requires(bias);
        Ok(self.push(ar, ac, out, rg, Op::AddBias { src: a.id, bias: bias.id }))
    }

    /// Elementwise product.
    pub fn mul(&self, a: Tensor, b: Tensor) -> Result<Tensor, TensorError> {
        let (ar, ac) = self.shape(a);
        let (br, bc) = self.shape(b);
        if (ar, ac) != (br, bc) {
            return Err(TensorError::ShapeMismatch {
                op: "mul",
                lhs_rows: ar,
                lhs_cols: ac,
                rhs_rows: br,
                rhs_cols: bc,
            });
        }
        let out = {
            let inner = self.inner.borrow();
            let ad = &inner.nodes[a.id].data;
            let bd = &inner.nodes[b.id].data;
            ad.iter().zip(bd).map(|(x, y)| x * y).collect()
        };
        let rg = self.requires(a) || self.requires(b);
        Ok(self.push(ar, ac, out, rg, Op::Mul(a.id, b.id)))
    }

    /// `a * mul + add` with scalar constants.
    pub fn affine(&self, a: Tensor, mul: f64, add: f64) -> Tensor {
        let (r, c) = self.shape(a);
        let out = {
            let inner = self.inner.borrow();
            inner.nodes[a.id].data.iter().map(|x| x * mul + add).collect()
        };
        let rg = self.requires(a);
        self.push(r, c, out, rg, Op::Affine { src: a.id, mul })
    }

    /// Multiply every entry of `a` by a differentiable `1 x 1` scalar.
    pub fn scale_by(&self, a: Tensor, scalar: Tensor) -> Result<Tensor, TensorError> {
        let (sr, sc) = self.shape(scalar);
        if (sr, sc) != (1, 1) {
            return Err(TensorError::BadShape { op: "scale_by", rows: sr, cols: sc });
        }
        let (r, c) = self.shape(a);
        let out = {
            let inner = self.inner.borrow();
            let s = inner.nodes[scalar.id].data[0];
            inner.nodes[a.id].data.iter().map(|x| x * s).collect()
        };
        let rg = self.requires(a) || self.requires(scalar);
        Ok(self.push(r, c, out, rg, Op::ScaleBy { src: a.id, scalar: scalar.id }))
    }

    /// Row-wise softmax with max subtraction. Rejects NaN inputs.
    pub fn softmax_rows(&self, a: Tensor) -> Result<Tensor, TensorError> {
        let (r, c) = self.shape(a);
        if c == 0 {
            return Err(TensorError::BadShape { op: "softmax_rows", rows: r, cols: c });
        }
        let out = {
            let inner = self.inner.borrow();
            let ad = &inner.nodes[a.id].data;
            if ad.iter().any(|x| x.is_nan()) {
                return Err(TensorError::NanInput);
            }
            let mut out = vec![0.0; r * c];
            for (orow, arow) in out.chunks_mut(c).zip(ad.chunks(c)) {
                let max = arow.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut sum = 0.0;
                for (o, &x) in orow.iter_mut().zip(arow) {
                    *o = (x - max).exp();
                    sum += *o;
                }
                for o in orow.iter_mut() {
                    *o /= sum;
                }
            }
            out
        };
        let rg = self.requires(a);
        Ok(self.push(r, c, out, rg, Op::SoftmaxRows(a.id)))
    }

    pub fn sigmoid(&self, a: Tensor) -> Tensor {
        let (r, c) = self.shape(a);
        let out = {
            let inner = self.inner.borrow();
            inner.nodes[a.id].data.iter().map(|&x| stable_sigmoid(x)).collect()
        };
        let rg = self.requires(a);
        self.push(r, c, out, rg, Op::Sigmoid(a.id))
    }

    /// Tanh-approximation GELU; smooth everywhere, which keeps finite
    /// differences well behaved.
    pub fn gelu(&self, a: Tensor) -> Tensor {
        let (r, c) = self.shape(a);
        let out = {
            let inner = self.inner.borrow();
            inner.nodes[a.id].data.iter().map(|&x| gelu_with_deriv(x).0).collect()
        };
        let rg = self.requires(a);
        self.push(r, c, out, rg, Op::Gelu(a.id))
    }

    /// Row-wise layer normalization with learned `1 x C` gain and bias.
    pub fn layer_norm(&self, a: Tensor, gain: Tensor, bias: Tensor) -> Result<Tensor, TensorError> {
        let (r, c) = self.shape(a);
        for (name, t) in [("gain", gain), ("bias", bias)] {
            let (tr, tc) = self.shape(t);
            if tr != 1 || tc != c {
                let _ = name;
                return Err(TensorError::ShapeMismatch {
                    op: "layer_norm",
                    lhs_rows: r,
                    lhs_cols: c,
                    rhs_rows: tr,
                    rhs_cols: tc,
                });
            }
        }
        let out = {
            let inner = self.inner.borrow();
            let ad = &inner.nodes[a.id].data;
            let gd = &inner.nodes[gain.id].data;
            let bd = &inner.nodes[bias.id].data;
            let mut out = vec![0.0; r * c];
            for (orow, arow) in out.chunks_mut(c).zip(ad.chunks(c)) {
                let (mean, inv_std) = row_norm_stats(arow);
                for j in 0..c {
                    orow[j] = ((arow[j] - mean) * inv_std) * gd[j] + bd[j];
                }
            }
            out
        };
        let rg = self.requires(a) || self.requires(gain) || self.requires(bias);
        Ok(self.push(r, c, out, rg, Op::LayerNorm { src: a.id, gain: gain.id, bias: bias.id }))
    }

    /// Gather rows of `table` by id; output row `i` is `table[ids[i]]`.
    pub fn embed(&self, table: Tensor, ids: &[usize]) -> Result<Tensor, TensorError> {
        let (tr, tc) = self.shape(table);
        for &id in ids {
            if id >= tr {
                return Err(TensorError::IndexOutOfRange { op: "embed", index: id, size: tr });
            }
        }
        let out = {
            let inner = self.inner.borrow();
            let td = &inner.nodes[table.id].data;
            let mut out = Vec::with_capacity(ids.len() * tc);
            for &id in ids {
                out.extend_from_slice(&td[id * tc..(id + 1) * tc]);
            }
            out
        };
        let rg = self.requires(table);
        Ok(self.push(ids.len(), tc, out, rg, Op::Embed { table: table.id, ids: ids.to_vec() }))
    }

    /// Stack matrices with equal column counts vertically.
    pub fn concat_rows(&self, parts: &[Tensor]) -> Result<Tensor, TensorError> {
        if parts.is_empty() {
            return Err(TensorError::BadShape { op: "concat_rows", rows: 0, cols: 0 });
        }
        let (_, c) = self.shape(parts[0]);
        let mut rows = 0;
        for &p in parts {
            let (pr, pc) = self.shape(p);
            if pc != c {
                return Err(TensorError::ShapeMismatch {
                    op: "concat_rows",
                    lhs_rows: rows,
                    lhs_cols: c,
                    rhs_rows: pr,
                    rhs_cols: pc,
                });
            }
            rows += pr;
        }
        let out = {
            let inner = self.inner.borrow();
            let mut out = Vec::with_capacity(rows * c);
            for &p in parts {
                out.extend_from_slice(&inner.nodes[p.id].data);
            }
            out
        };
        let rg = parts.iter().any(|&p| self.requires(p));
        Ok(self.push(rows, c, out, rg, Op::ConcatRows(parts.iter().map(|p| p.id).collect())))
    }

    /// Join matrices with equal row counts side by side.
    pub fn concat_cols(&self, parts: &[Tensor]) -> Result<Tensor, TensorError> {
        if parts.is_empty() {
            return Err(TensorError::BadShape { op: "concat_cols", rows: 0, cols: 0 });
        }
        let (r, _) = self.shape(parts[0]);
        let mut cols = 0;
        for &p in parts {
            let (pr, pc) = self.shape(p);
            if pr != r {
                return Err(TensorError::ShapeMismatch {
                    op: "concat_cols",
                    lhs_rows: r,
                    lhs_cols: cols,
                    rhs_rows: pr,
                    rhs_cols: pc,
                });
            }
            cols += pc;
        }
        let out = {
            let inner = self.inner.borrow();
            let mut out = Vec::with_capacity(r * cols);
            for i in 0..r {
                for &p in parts {
                    let n = &inner.nodes[p.id];
                    out.extend_from_slice(&n.data[i * n.cols..(i + 1) * n.cols]);
                }
            }
            out
        };
        let rg = parts.iter().any(|&p| self.requires(p));
        Ok(self.push(r, cols, out, rg, Op::ConcatCols(parts.iter().map(|p| p.id).collect())))
    }

    pub fn slice_rows(&self, a: Tensor, start: usize, end: usize) -> Result<Tensor, TensorError> {
        let (r, c) = self.shape(a);
        if start > end || end > r {
            return Err(TensorError::RangeOutOfBounds { op: "slice_rows", start, end, len: r });
        }
        let out = {
            let inner = self.inner.borrow();
            inner.nodes[a.id].data[start * c..end * c].to_vec()
        };
        let rg = self.requires(a);
        Ok(self.push(end - start, c, out, rg, Op::SliceRows { src: a.id, start }))
    }

    pub fn slice_cols(&self, a: Tensor, start: usize, end: usize) -> Result<Tensor, TensorError> {
        let (r, c) = self.shape(a);
        if start > end || end > c {
            return Err(TensorError::RangeOutOfBounds { op: "slice_cols", start, end, len: c });
        }
        let width = end - start;
        let out = {
            let inner = self.inner.borrow();
            let ad = &inner.nodes[a.id].data;
            let mut out = Vec::with_capacity(r * width);
            for i in 0..r {
                out.extend_from_slice(&ad[i * c + start..i * c + end]);
            }
            out
        };
        let rg = self.requires(a);
        Ok(self.push(r, width, out, rg, Op::SliceCols { src: a.id, start }))
    }

    /// Column means: `R x C -> 1 x C`.
    pub fn mean_rows(&self, a: Tensor) -> Result<Tensor, TensorError> {
        let (r, c) = self.shape(a);
        if r == 0 {
            return Err(TensorError::BadShape { op: "mean_rows", rows: r, cols: c });
        }
        let out = {
            let inner = self.inner.borrow();
            let ad = &inner.nodes[a.id].data;
            let mut out = vec![0.0; c];
            for row in ad.chunks(c) {
                for (o, &x) in out.iter_mut().zip(row) {
                    *o += x;
                }
            }
            for o in &mut out {
                *o /= r as f64;
            }
            out
        };
        let rg = self.requires(a);
        Ok(self.push(1, c, out, rg, Op::MeanRows(a.id)))
    }

    pub fn sum_all(&self, a: Tensor) -> Tensor {
        let total = {
            let inner = self.inner.borrow();
            inner.nodes[a.id].data.iter().sum()
        };
        let rg = self.requires(a);
        self.push(1, 1, vec![total], rg, Op::SumAll(a.id))
    }

    /// Mean token-level cross entropy of row-wise logits against integer
    /// targets, computed through a log-sum-exp.
    pub fn cross_entropy(&self, logits: Tensor, targets: &[usize]) -> Result<Tensor, TensorError> {
        let (r, c) = self.shape(logits);
        if targets.len() != r {
            return Err(TensorError::ShapeMismatch {
                op: "cross_entropy",
                lhs_rows: r,
                lhs_cols: c,
                rhs_rows: targets.len(),
                rhs_cols: 1,
            });
        }
        for &t in targets {
            if t >= c {
                return Err(TensorError::IndexOutOfRange {
                    op: "cross_entropy",
                    index: t,
                    size: c,
                });
            }
        }
        let loss = {
            let inner = self.inner.borrow();
            let ld = &inner.nodes[logits.id].data;
            let mut total = 0.0;
            for (row, &t) in ld.chunks(c).zip(targets) {
                total += log_sum_exp(row) - row[t];
            }
            total / r as f64
        };
        let rg = self.requires(logits);
        Ok(self.push(
            1,
            1,
            vec![loss],
            rg,
            Op::CrossEntropy { logits: logits.id, targets: targets.to_vec() },
        ))
    }

    /// Binary cross entropy of a `1 x 1` probability against a 0/1 label.
    pub fn binary_cross_entropy(&self, prob: Tensor, label: f64) -> Result<Tensor, TensorError> {
        let (r, c) = self.shape(prob);
        if (r, c) != (1, 1) {
            return Err(TensorError::BadShape { op: "binary_cross_entropy", rows: r, cols: c });
        }
        let loss = {
            let inner = self.inner.borrow();
            let p = inner.nodes[prob.id].data[0].clamp(BCE_EPS, 1.0 - BCE_EPS);
            -(label * p.ln() + (1.0 - label) * (1.0 - p).ln())
        };
        let rg = self.requires(prob);
        Ok(self.push(1, 1, vec![loss], rg, Op::BinaryCrossEntropy { prob: prob.id, label }))
    }

    /// Inverted dropout: keeps entries with probability `1 - rate`, scaling
    /// the kept ones by `1 / (1 - rate)`. `rate = 0` is the identity mask.
    pub fn dropout(&self, a: Tensor, rate: f64, rng: &mut dyn RngCore) -> Result<Tensor, TensorError> {
        if !(0.0..1.0).contains(&rate) {
            return Err(TensorError::BadShape { op: "dropout", rows: 0, cols: 0 });
        }
        let (r, c) = self.shape(a);
        let keep = 1.0 - rate;
        let scale = 1.0 / keep;
        let mask: Vec<f64> = (0..r * c)
            .map(|_| {
                let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
                if u < keep { scale } else { 0.0 }
            })
            .collect();
        let out = {
            let inner = self.inner.borrow();
            inner.nodes[a.id].data.iter().zip(&mask).map(|(x, m)| x * m).collect()
        };
        let rg = self.requires(a);
        Ok(self.push(r, c, out, rg, Op::Dropout { src: a.id, mask }))
    }

    // ---- backward ----

    /// Reverse sweep from a scalar loss. Runs at most once per graph.
    pub fn backward(&self, loss: Tensor) -> Result<(), TensorError> {
        let mut inner = self.inner.borrow_mut();
        if inner.backward_done {
            return Err(TensorError::BackwardAlreadyRun);
        }
        {
            let n = &inner.nodes[loss.id];
            if (n.rows, n.cols) != (1, 1) {
                return Err(TensorError::NonScalarLoss { rows: n.rows, cols: n.cols });
            }
        }
        inner.backward_done = true;

        let count = inner.nodes.len();
        let mut active = vec![false; count];
        let mut stack = vec![loss.id];
        while let Some(id) = stack.pop() {
            if active[id] || !inner.nodes[id].requires_grad {
                continue;
            }
            active[id] = true;
            for_each_parent(&inner.nodes[id].op, |p| stack.push(p));
        }

        let mut grads: Vec<Option<Vec<f64>>> = vec![None; count];
        if active[loss.id] {
            grads[loss.id] = Some(vec![1.0]);
        }

        let Inner { nodes, .. } = &mut *inner;
        for id in (0..=loss.id).rev() {
            if !active[id] || grads[id].is_none() {
                continue;
            }
            let g = grads[id].take().expect("checked above");
            propagate(nodes, id, &g, &active, &mut grads);
            grads[id] = Some(g);
        }
        inner.grads = grads;
        Ok(())
    }
}

fn stable_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Tanh-approximation GELU and its derivative.
fn gelu_with_deriv(x: f64) -> (f64, f64) {
    const C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)
    const A: f64 = 0.044_715;
    let u = C * (x + A * x * x * x);
    let t = u.tanh();
    let y = 0.5 * x * (1.0 + t);
    let dy = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * C * (1.0 + 3.0 * A * x * x);
    (y, dy)
}

fn row_norm_stats(row: &[f64]) -> (f64, f64) {
    let c = row.len() as f64;
    let mean = row.iter().sum::<f64>() / c;
    let var = row.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / c;
    (mean, 1.0 / (var + LN_EPS).sqrt())
}

fn log_sum_exp(row: &[f64]) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + row.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn matmul_into(a: &[f64], ar: usize, ac: usize, b: &[f64], bc: usize, out: &mut [f64]) {
    for i in 0..ar {
        let arow = &a[i * ac..(i + 1) * ac];
        let orow = &mut out[i * bc..(i + 1) * bc];
        for (k, &aik) in arow.iter().enumerate() {
            let brow = &b[k * bc..(k + 1) * bc];
            for (o, &bkj) in orow.iter_mut().zip(brow) {
                *o += aik * bkj;
            }
        }
    }
}

fn for_each_parent(op: &Op, mut f: impl FnMut(usize)) {
    match op {
        Op::Leaf => {}
        Op::Matmul(a, b) | Op::Add(a, b) | Op::Mul(a, b) => {
            f(*a);
            f(*b);
        }
        Op::AddBias { src, bias } => {
            f(*src);
            f(*bias);
        }
        Op::ScaleBy { src, scalar } => {
            f(*src);
            f(*scalar);
        }
        Op::LayerNorm { src, gain, bias } => {
            f(*src);
            f(*gain);
            f(*bias);
        }
        Op::Transpose(a)
        | Op::SoftmaxRows(a)
        | Op::Sigmoid(a)
        | Op::Gelu(a)
        | Op::MeanRows(a)
        | Op::SumAll(a) => f(*a),
        Op::Affine { src, .. }
        | Op::SliceRows { src, .. }
        | Op::SliceCols { src, .. }
        | Op::Dropout { src, .. } => f(*src),
        Op::Embed { table, .. } => f(*table),
        Op::ConcatRows(parts) | Op::ConcatCols(parts) => parts.iter().copied().for_each(f),
        Op::CrossEntropy { logits, .. } => f(*logits),
        Op::BinaryCrossEntropy { prob, .. } => f(*prob),
    }
}

fn accumulate<'a>(grads: &'a mut [Option<Vec<f64>>], active: &[bool], id: usize, len: usize) -> Option<&'a mut Vec<f64>> {
    if !active[id] {
        return None;
    }
    Some(grads[id].get_or_insert_with(|| vec![0.0; len]))
}

fn propagate(nodes: &[Node], id: usize, g: &[f64], active: &[bool], grads: &mut [Option<Vec<f64>>]) {
    let node = &nodes[id];
    let (rows, cols) = (node.rows, node.cols);
    match &node.op {
        Op::Leaf => {}
        Op::Matmul(a, b) => {
            let an = &nodes[*a];
            let bn = &nodes[*b];
            let (m, k, n) = (an.rows, an.cols, bn.cols);
            if let Some(da) = accumulate(grads, active, *a, m * k) {
                // dA[i,l] = <G row i, B row l>
                for i in 0..m {
                    let grow = &g[i * n..(i + 1) * n];
                    let darow = &mut da[i * k..(i + 1) * k];
                    for (l, d) in darow.iter_mut().enumerate() {
                        let brow = &bn.data[l * n..(l + 1) * n];
                        let mut acc = 0.0;
                        for (x, y) in grow.iter().zip(brow) {
                            acc += x * y;
                        }
                        *d += acc;
                    }
                }
            }
            if let Some(db) = accumulate(grads, active, *b, k * n) {
                // dB[l,j] += A[i,l] * G[i,j]
                for i in 0..m {
                    let grow = &g[i * n..(i + 1) * n];
                    let arow = &an.data[i * k..(i + 1) * k];
                    for (l, &ail) in arow.iter().enumerate() {
                        let dbrow = &mut db[l * n..(l + 1) * n];
                        for (d, &gij) in dbrow.iter_mut().zip(grow) {
                            *d += ail * gij;
                        }
                    }
                }
            }
        }
        Op::Transpose(a) => {
            let an = &nodes[*a];
            let (ar, ac) = (an.rows, an.cols);
            if let Some(da) = accumulate(grads, active, *a, ar * ac) {
                for i in 0..rows {
                    for j in 0..cols {
                        da[j * ac + i] += g[i * cols + j];
                    }
                }
            }
        }
        Op::Add(a, b) => {
            for &p in [a, b] {
                if let Some(dp) = accumulate(grads, active, p, rows * cols) {
                    for (d, &x) in dp.iter_mut().zip(g) {
                        *d += x;
                    }
                }
            }
        }
        Op::AddBias { src, bias } => {
            if let Some(ds) = accumulate(grads, active, *src, rows * cols) {
                for (d, &x) in ds.iter_mut().zip(g) {
                    *d += x;
                }
            }
            if let Some(db) = accumulate(grads, active, *bias, cols) {
                for grow in g.chunks(cols) {
                    for (d, &x) in db.iter_mut().zip(grow) {
                        *d += x;
                    }
                }
            }
        }
        Op::Mul(a, b) => {
            let (ad, bd) = (&nodes[*a].data, &nodes[*b].data);
            if let Some(da) = accumulate(grads, active, *a, rows * cols) {
                for ((d, &x), &y) in da.iter_mut().zip(g).zip(bd) {
                    *d += x * y;
                }
            }
            if let Some(db) = accumulate(grads, active, *b, rows * cols) {
                for ((d, &x), &y) in db.iter_mut().zip(g).zip(ad) {
                    *d += x * y;
                }
            }
        }
        Op::Affine { src, mul } => {
            if let Some(ds) = accumulate(grads, active, *src, rows * cols) {
                for (d, &x) in ds.iter_mut().zip(g) {
                    *d += x * mul;
                }
            }
        }
        Op::ScaleBy { src, scalar } => {
            let s = nodes[*scalar].data[0];
            let sd = &nodes[*src].data;
            if let Some(ds) = accumulate(grads, active, *src, rows * cols) {
                for (d, &x) in ds.iter_mut().zip(g) {
                    *d += x * s;
                }
            }
            if let Some(dsc) = accumulate(grads, active, *scalar, 1) {
                let mut acc = 0.0;
                for (&x, &v) in g.iter().zip(sd) {
                    acc += x * v;
                }
                dsc[0] += acc;
            }
        }
        Op::SoftmaxRows(a) => {
            if let Some(da) = accumulate(grads, active, *a, rows * cols) {
                for i in 0..rows {
                    let yrow = &node.data[i * cols..(i + 1) * cols];
                    let grow = &g[i * cols..(i + 1) * cols];
                    let dot: f64 = yrow.iter().zip(grow).map(|(y, x)| y * x).sum();
                    let darow = &mut da[i * cols..(i + 1) * cols];
                    for j in 0..cols {
                        darow[j] += yrow[j] * (grow[j] - dot);
                    }
                }
            }
        }
        Op::Sigmoid(a) => {
            if let Some(da) = accumulate(grads, active, *a, rows * cols) {
                for ((d, &x), &y) in da.iter_mut().zip(g).zip(&node.data) {
                    *d += x * y * (1.0 - y);
                }
            }
        }
        Op::Gelu(a) => {
            let ad = &nodes[*a].data;
            if let Some(da) = accumulate(grads, active, *a, rows * cols) {
                for ((d, &x), &v) in da.iter_mut().zip(g).zip(ad) {
                    *d += x * gelu_with_deriv(v).1;
                }
            }
        }
        Op::LayerNorm { src, gain, bias } => {
            let sd = &nodes[*src].data;
            let gd = &nodes[*gain].data;
            if let Some(dg) = accumulate(grads, active, *gain, cols) {
                for (srow, grow) in sd.chunks(cols).zip(g.chunks(cols)) {
                    let (mean, inv_std) = row_norm_stats(srow);
                    for j in 0..cols {
                        dg[j] += grow[j] * (srow[j] - mean) * inv_std;
                    }
                }
            }
            if let Some(db) = accumulate(grads, active, *bias, cols) {
                for grow in g.chunks(cols) {
                    for (d, &x) in db.iter_mut().zip(grow) {
                        *d += x;
                    }
                }
            }
            if let Some(ds) = accumulate(grads, active, *src, rows * cols) {
                let cf = cols as f64;
                for i in 0..rows {
                    let srow = &sd[i * cols..(i + 1) * cols];
                    let grow = &g[i * cols..(i + 1) * cols];
                    let (mean, inv_std) = row_norm_stats(srow);
                    let mut mean_h = 0.0;
                    let mut mean_hx = 0.0;
                    for j in 0..cols {
                        let h = grow[j] * gd[j];
                        let xh = (srow[j] - mean) * inv_std;
                        mean_h += h;
                        mean_hx += h * xh;
                    }
                    mean_h /= cf;
                    mean_hx /= cf;
                    let dsrow = &mut ds[i * cols..(i + 1) * cols];
                    for j in 0..cols {
                        let h = grow[j] * gd[j];
                        let xh = (srow[j] - mean) * inv_std;
                        dsrow[j] += inv_std * (h - mean_h - xh * mean_hx);
                    }
                }
            }
        }
        Op::Embed { table, ids } => {
            let tn = &nodes[*table];
            if let Some(dt) = accumulate(grads, active, *table, tn.rows * tn.cols) {
                for (i, &id) in ids.iter().enumerate() {
                    let grow = &g[i * cols..(i + 1) * cols];
                    let drow = &mut dt[id * cols..(id + 1) * cols];
                    for (d, &x) in drow.iter_mut().zip(grow) {
                        *d += x;
                    }
                }
            }
        }
        Op::ConcatRows(parts) => {
            let mut offset = 0;
            for &p in parts {
                let pn = &nodes[p];
                let len = pn.rows * pn.cols;
                if let Some(dp) = accumulate(grads, active, p, len) {
                    for (d, &x) in dp.iter_mut().zip(&g[offset..offset + len]) {
                        *d += x;
                    }
                }
                offset += len;
            }
        }
        Op::ConcatCols(parts) => {
            let mut col_offset = 0;
            for &p in parts {
                let pn = &nodes[p];
                let pc = pn.cols;
                if let Some(dp) = accumulate(grads, active, p, pn.rows * pc) {
                    for i in 0..rows {
                        let grow = &g[i * cols + col_offset..i * cols + col_offset + pc];
                        let drow = &mut dp[i * pc..(i + 1) * pc];
                        for (d, &x) in drow.iter_mut().zip(grow) {
                            *d += x;
                        }
                    }
                }
                col_offset += pc;
            }
        }
        Op::SliceRows { src, start } => {
            let sn = &nodes[*src];
            if let Some(ds) = accumulate(grads, active, *src, sn.rows * sn.cols) {
                let base = start * cols;
                for (d, &x) in ds[base..base + rows * cols].iter_mut().zip(g) {
                    *d += x;
                }
            }
        }
        Op::SliceCols { src, start } => {
            let sn = &nodes[*src];
            let sc = sn.cols;
            if let Some(ds) = accumulate(grads, active, *src, sn.rows * sc) {
                for i in 0..rows {
                    let grow = &g[i * cols..(i + 1) * cols];
                    let drow = &mut ds[i * sc + start..i * sc + start + cols];
                    for (d, &x) in drow.iter_mut().zip(grow) {
                        *d += x;
                    }
                }
            }
        }
        Op::MeanRows(a) => {
            let an = &nodes[*a];
            if let Some(da) = accumulate(grads, active, *a, an.rows * an.cols) {
                let scale = 1.0 / an.rows as f64;
                for drow in da.chunks_mut(an.cols) {
                    for (d, &x) in drow.iter_mut().zip(g) {
                        *d += x * scale;
                    }
                }
            }
        }
        Op::SumAll(a) => {
            let an = &nodes[*a];
            if let Some(da) = accumulate(grads, active, *a, an.rows * an.cols) {
                for d in da.iter_mut() {
                    *d += g[0];
                }
            }
        }
        Op::CrossEntropy { logits, targets } => {
            let ln = &nodes[*logits];
            let (r, c) = (ln.rows, ln.cols);
            if let Some(dl) = accumulate(grads, active, *logits, r * c) {
                let upstream = g[0] / r as f64;
                for (i, &t) in targets.iter().enumerate() {
                    let lrow = &ln.data[i * c..(i + 1) * c];
                    let max = lrow.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let sum: f64 = lrow.iter().map(|x| (x - max).exp()).sum();
                    let drow = &mut dl[i * c..(i + 1) * c];
                    for j in 0..c {
                        let p = (lrow[j] - max).exp() / sum;
                        let indicator = f64::from(j == t);
                        drow[j] += upstream * (p - indicator);
                    }
                }
            }
        }
        Op::BinaryCrossEntropy { prob, label } => {
            let p = nodes[*prob].data[0];
            if let Some(dp) = accumulate(grads, active, *prob, 1) {
                if p > BCE_EPS && p < 1.0 - BCE_EPS {
                    dp[0] += g[0] * (p - label) / (p * (1.0 - p));
                }
            }
        }
        Op::Dropout { src, mask } => {
            if let Some(ds) = accumulate(grads, active, *src, rows * cols) {
                for ((d, &x), &m) in ds.iter_mut().zip(g).zip(mask) {
                    *d += x * m;
                }
            }
        }
    }
}
