//! Reverse-mode automatic differentiation over a dynamically recorded
//! computation graph.
//!
//! Only the operations this crate's models need are implemented: matrix ×
//! vector, add, Hadamard product, constant scale, sigmoid/tanh/PReLU,
//! vector concat and narrow, column gather (embedding lookup), and fused
//! softmax cross-entropy. Nodes are appended in topological order, so one
//! reverse sweep propagates gradients.

use super::tensor::{softmax_slice, Tensor};
use crate::error::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone, Copy)]
enum Op {
    Leaf,
    /// `[m, n] x [n] -> [m]`
    MatVec { w: Var, v: Var },
    Add { a: Var, b: Var },
    Mul { a: Var, b: Var },
    Scale { x: Var, c: f64 },
    Sigmoid { x: Var },
    Tanh { x: Var },
    Prelu { x: Var, slope: Var },
    Concat { a: Var, b: Var },
    Narrow { x: Var, start: usize },
    GatherCol { m: Var, col: usize },
    /// `-log softmax(logits)[target]`, a scalar.
    CrossEntropyLogits { logits: Var, target: usize },
    // Column-batched variants: the second dimension indexes batch lanes.
    /// `[m, n] x [n, B] -> [m, B]`
    MatMul { w: Var, x: Var },
    /// `[m, B] + bias[m]` broadcast over lanes.
    AddRowBroadcast { x: Var, bias: Var },
    /// PReLU on `[m, B]` with per-row slope `[m]`.
    PreluRows { x: Var, slope: Var },
    /// Vertical stack `[da, B]; [db, B] -> [da + db, B]`.
    ConcatRows { a: Var, b: Var },
    /// Row slice of a `[m, B]` matrix.
    NarrowRows { x: Var, start: usize },
    /// Lane-wise embedding lookup: `[rows, K]` gathered at one column
    /// index per lane `-> [rows, B]`.
    GatherColsIdx { m: Var, cols: usize },
    /// Coefficient-weighted sum of per-lane cross-entropies, a scalar.
    WeightedCrossEntropyCols { logits: Var, meta: usize },
}

/// Side tables for batched ops whose payloads don't fit in a small enum.
#[derive(Default)]
struct BatchedMeta {
    gathers: Vec<Vec<usize>>,
    ce: Vec<(Vec<usize>, Vec<f64>)>,
}

struct Node {
    value: Tensor,
    op: Op,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    grads: Vec<Option<Tensor>>,
    meta: BatchedMeta,
}

/// Sixteen-accumulator dot product: four independent 4-lane chains, so
/// vector add latency never serializes the reduction. Lane-to-chain
/// assignment is fixed, making results identical across SIMD widths.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 16];
    for (ca, cb) in a.chunks_exact(16).zip(b.chunks_exact(16)) {
        for j in 0..16 {
            acc[j] += ca[j] * cb[j];
        }
    }
    let rem = a.len() - a.len() % 16;
    let mut rest = 0.0;
    for (x, y) in a[rem..].iter().zip(&b[rem..]) {
        rest += x * y;
    }
    let mut total = 0.0;
    for pair in acc.chunks_exact(4) {
        total += (pair[0] + pair[1]) + (pair[2] + pair[3]);
    }
    total + rest
}

/// Lazily materialized gradient slot.
fn slot<'a>(grads: &'a mut [Option<Tensor>], nodes: &[Node], id: usize) -> &'a mut [f64] {
    let entry = &mut grads[id];
    if entry.is_none() {
        *entry = Some(Tensor::zeros(nodes[id].value.shape()));
    }
    entry.as_mut().unwrap().data_mut()
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        self.grads.push(None);
        Var(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Gradient accumulated at `v` by the last [`Tape::backward`] call.
    /// `None` means the node does not influence the differentiated output
    /// (its gradient is identically zero).
    pub fn grad(&self, v: Var) -> Option<&Tensor> {
        self.grads[v.0].as_ref()
    }

    pub fn matvec(&mut self, w: Var, v: Var) -> Result<Var> {
        let (ws, vs) = (self.value(w).shape(), self.value(v).shape());
        if ws.len() != 2 || vs.len() != 1 || ws[1] != vs[0] {
            return Err(Error::ShapeMismatch {
                op: "matvec",
                expected: format!("[m, n] x [n], got matrix {ws:?}"),
                got: format!("vector {vs:?}"),
            });
        }
        let (m, n) = (ws[0], ws[1]);
        let wd = self.value(w).data();
        let vd = self.value(v).data();
        let mut out = vec![0.0; m];
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(&wd[i * n..(i + 1) * n], vd);
        }
        Ok(self.push(Tensor::vector(out), Op::MatVec { w, v }))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        if !self.value(a).same_shape(self.value(b)) {
            return Err(Error::ShapeMismatch {
                op: "add",
                expected: format!("{:?}", self.value(a).shape()),
                got: format!("{:?}", self.value(b).shape()),
            });
        }
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(x, y)| x + y)
            .collect();
        let shape = self.value(a).shape().to_vec();
        Ok(self.push(Tensor::from_vec(&shape, data)?, Op::Add { a, b }))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        if !self.value(a).same_shape(self.value(b)) {
            return Err(Error::ShapeMismatch {
                op: "mul",
                expected: format!("{:?}", self.value(a).shape()),
                got: format!("{:?}", self.value(b).shape()),
            });
        }
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(x, y)| x * y)
            .collect();
        let shape = self.value(a).shape().to_vec();
        Ok(self.push(Tensor::from_vec(&shape, data)?, Op::Mul { a, b }))
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        let mut t = self.value(x).clone();
        t.data_mut().iter_mut().for_each(|v| *v *= c);
        self.push(t, Op::Scale { x, c })
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let mut t = self.value(x).clone();
        t.data_mut()
            .iter_mut()
            .for_each(|v| *v = super::tensor::sigmoid(*v));
        self.push(t, Op::Sigmoid { x })
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let mut t = self.value(x).clone();
        t.data_mut().iter_mut().for_each(|v| *v = v.tanh());
        self.push(t, Op::Tanh { x })
    }

    pub fn prelu(&mut self, x: Var, slope: Var) -> Result<Var> {
        let sl = self.value(slope).len();
        let xl = self.value(x).len();
        if sl != 1 && sl != xl {
            return Err(Error::ShapeMismatch {
                op: "prelu",
                expected: format!("slope of length 1 or {xl}"),
                got: format!("length {sl}"),
            });
        }
        let out = super::tensor::prelu(self.value(x), self.value(slope))?;
        Ok(self.push(out, Op::Prelu { x, slope }))
    }

    pub fn concat(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa.len() != 1 || sb.len() != 1 {
            return Err(Error::ShapeMismatch {
                op: "concat",
                expected: "two 1-D tensors".to_string(),
                got: format!("{sa:?} and {sb:?}"),
            });
        }
        let mut data = self.value(a).data().to_vec();
        data.extend_from_slice(self.value(b).data());
        Ok(self.push(Tensor::vector(data), Op::Concat { a, b }))
    }

    pub fn narrow(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let xl = self.value(x).len();
        if self.value(x).shape().len() != 1 || start + len > xl {
            return Err(Error::ShapeMismatch {
                op: "narrow",
                expected: format!("1-D tensor covering [{start}, {})", start + len),
                got: format!("{:?}", self.value(x).shape()),
            });
        }
        let data = self.value(x).data()[start..start + len].to_vec();
        Ok(self.push(Tensor::vector(data), Op::Narrow { x, start }))
    }

    /// Column `col` of a `[rows, cols]` matrix, as a vector of length `rows`.
    pub fn gather_col(&mut self, m: Var, col: usize) -> Result<Var> {
        let ms = self.value(m).shape();
        if ms.len() != 2 || col >= ms[1] {
            return Err(Error::ShapeMismatch {
                op: "gather_col",
                expected: format!("matrix with more than {col} columns"),
                got: format!("{ms:?}"),
            });
        }
        let (rows, cols) = (ms[0], ms[1]);
        let md = self.value(m).data();
        let data = (0..rows).map(|r| md[r * cols + col]).collect();
        Ok(self.push(Tensor::vector(data), Op::GatherCol { m, col }))
    }

    /// Fused `-log softmax(logits)[target]`, numerically stable.
    pub fn cross_entropy_logits(&mut self, logits: Var, target: usize) -> Result<Var> {
        let l = self.value(logits);
        if l.shape().len() != 1 || target >= l.len() {
            return Err(Error::ShapeMismatch {
                op: "cross_entropy_logits",
                expected: format!("1-D logits with more than {target} entries"),
                got: format!("{:?}", l.shape()),
            });
        }
        let nll = -super::tensor::log_softmax_at(l.data(), target);
        Ok(self.push(Tensor::scalar(nll), Op::CrossEntropyLogits { logits, target }))
    }

    fn lanes_of(&self, x: Var, op: &'static str) -> Result<(usize, usize)> {
        let s = self.value(x).shape();
        if s.len() != 2 {
            return Err(Error::ShapeMismatch {
                op,
                expected: "a [rows, lanes] matrix".to_string(),
                got: format!("{s:?}"),
            });
        }
        Ok((s[0], s[1]))
    }

    /// `[m, n] x [n, B] -> [m, B]`: every lane multiplied by the same
    /// matrix. The weight streams once per call instead of once per lane.
    pub fn matmul(&mut self, w: Var, x: Var) -> Result<Var> {
        let ws = self.value(w).shape().to_vec();
        let (n, lanes) = self.lanes_of(x, "matmul")?;
        if ws.len() != 2 || ws[1] != n {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                expected: format!("[m, {n}] matrix"),
                got: format!("{ws:?}"),
            });
        }
        let m = ws[0];
        let wd = self.value(w).data();
        let xd = self.value(x).data();
        let mut out = vec![0.0; m * lanes];
        // two weight rows per pass over x: doubles the independent
        // accumulator chains and halves x traffic
        let mut i = 0;
        while i + 1 < m {
            let (head, tail) = out.split_at_mut((i + 1) * lanes);
            let row_a = &mut head[i * lanes..];
            let row_b = &mut tail[..lanes];
            let wa = &wd[i * n..(i + 1) * n];
            let wb = &wd[(i + 1) * n..(i + 2) * n];
            for k in 0..n {
                let (ca, cb) = (wa[k], wb[k]);
                let x_row = &xd[k * lanes..(k + 1) * lanes];
                for ((a, b), &xv) in row_a.iter_mut().zip(row_b.iter_mut()).zip(x_row) {
                    *a += ca * xv;
                    *b += cb * xv;
                }
            }
            i += 2;
        }
        if i < m {
            let row = &mut out[i * lanes..(i + 1) * lanes];
            let w_row = &wd[i * n..(i + 1) * n];
            for (k, &wik) in w_row.iter().enumerate() {
                let x_row = &xd[k * lanes..(k + 1) * lanes];
                for (o, &xv) in row.iter_mut().zip(x_row) {
                    *o += wik * xv;
                }
            }
        }
        Ok(self.push(
            Tensor::from_vec(&[m, lanes], out)?,
            Op::MatMul { w, x },
        ))
    }

    /// Adds `bias[i]` to every lane of row `i`.
    pub fn add_row_broadcast(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (m, lanes) = self.lanes_of(x, "add_row_broadcast")?;
        if self.value(bias).len() != m {
            return Err(Error::ShapeMismatch {
                op: "add_row_broadcast",
                expected: format!("bias of length {m}"),
                got: format!("{:?}", self.value(bias).shape()),
            });
        }
        let bd = self.value(bias).data();
        let mut out = self.value(x).data().to_vec();
        for i in 0..m {
            let b = bd[i];
            for o in &mut out[i * lanes..(i + 1) * lanes] {
                *o += b;
            }
        }
        Ok(self.push(
            Tensor::from_vec(&[m, lanes], out)?,
            Op::AddRowBroadcast { x, bias },
        ))
    }

    /// PReLU over a `[m, B]` matrix with a per-row (or scalar) slope.
    pub fn prelu_rows(&mut self, x: Var, slope: Var) -> Result<Var> {
        let (m, lanes) = self.lanes_of(x, "prelu_rows")?;
        let sl = self.value(slope).len();
        if sl != 1 && sl != m {
            return Err(Error::ShapeMismatch {
                op: "prelu_rows",
                expected: format!("slope of length 1 or {m}"),
                got: format!("length {sl}"),
            });
        }
        let sd = self.value(slope).data();
        let mut out = self.value(x).data().to_vec();
        for i in 0..m {
            let s = if sl == 1 { sd[0] } else { sd[i] };
            for o in &mut out[i * lanes..(i + 1) * lanes] {
                *o = o.max(0.0) + s * o.min(0.0);
            }
        }
        Ok(self.push(
            Tensor::from_vec(&[m, lanes], out)?,
            Op::PreluRows { x, slope },
        ))
    }

    /// Vertical stack of two lane matrices.
    pub fn concat_rows(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ma, la) = self.lanes_of(a, "concat_rows")?;
        let (mb, lb) = self.lanes_of(b, "concat_rows")?;
        if la != lb {
            return Err(Error::ShapeMismatch {
                op: "concat_rows",
                expected: format!("{la} lanes"),
                got: format!("{lb} lanes"),
            });
        }
        let mut data = self.value(a).data().to_vec();
        data.extend_from_slice(self.value(b).data());
        Ok(self.push(
            Tensor::from_vec(&[ma + mb, la], data)?,
            Op::ConcatRows { a, b },
        ))
    }

    /// Rows `[start, start + rows)` of a lane matrix.
    pub fn narrow_rows(&mut self, x: Var, start: usize, rows: usize) -> Result<Var> {
        let (m, lanes) = self.lanes_of(x, "narrow_rows")?;
        if start + rows > m {
            return Err(Error::ShapeMismatch {
                op: "narrow_rows",
                expected: format!("matrix with at least {} rows", start + rows),
                got: format!("[{m}, {lanes}]"),
            });
        }
        let data = self.value(x).data()[start * lanes..(start + rows) * lanes].to_vec();
        Ok(self.push(
            Tensor::from_vec(&[rows, lanes], data)?,
            Op::NarrowRows { x, start },
        ))
    }

    /// Lane-wise column gather: lane `b` of the output is column
    /// `cols[b]` of the matrix (embedding lookup for a batch of tokens).
    pub fn gather_cols(&mut self, m: Var, cols: Vec<usize>) -> Result<Var> {
        let ms = self.value(m).shape();
        if ms.len() != 2 {
            return Err(Error::ShapeMismatch {
                op: "gather_cols",
                expected: "a [rows, K] matrix".to_string(),
                got: format!("{ms:?}"),
            });
        }
        let (rows, k) = (ms[0], ms[1]);
        if let Some(&bad) = cols.iter().find(|&&c| c >= k) {
            return Err(Error::ShapeMismatch {
                op: "gather_cols",
                expected: format!("column indices below {k}"),
                got: format!("{bad}"),
            });
        }
        let lanes = cols.len();
        let md = self.value(m).data();
        let mut out = vec![0.0; rows * lanes];
        for r in 0..rows {
            let row = &md[r * k..(r + 1) * k];
            let out_row = &mut out[r * lanes..(r + 1) * lanes];
            for (o, &c) in out_row.iter_mut().zip(&cols) {
                *o = row[c];
            }
        }
        let meta_idx = self.meta.gathers.len();
        self.meta.gathers.push(cols);
        Ok(self.push(
            Tensor::from_vec(&[rows, lanes], out)?,
            Op::GatherColsIdx { m, cols: meta_idx },
        ))
    }

    /// `sum_b coeffs[b] * (-log softmax(logits[:, b])[targets[b]])`, a
    /// scalar. Lane coefficients carry instance weights (and any batch
    /// normalization constant); no gradient flows through them.
    pub fn weighted_cross_entropy_cols(
        &mut self,
        logits: Var,
        targets: Vec<usize>,
        coeffs: Vec<f64>,
    ) -> Result<Var> {
        let (k, lanes) = self.lanes_of(logits, "weighted_cross_entropy_cols")?;
        if targets.len() != lanes || coeffs.len() != lanes {
            return Err(Error::ShapeMismatch {
                op: "weighted_cross_entropy_cols",
                expected: format!("{lanes} targets and coefficients"),
                got: format!("{} and {}", targets.len(), coeffs.len()),
            });
        }
        if let Some(&bad) = targets.iter().find(|&&t| t >= k) {
            return Err(Error::ShapeMismatch {
                op: "weighted_cross_entropy_cols",
                expected: format!("targets below {k}"),
                got: format!("{bad}"),
            });
        }
        let ld = self.value(logits).data();
        let mut total = 0.0;
        for (b, (&t, &c)) in targets.iter().zip(&coeffs).enumerate() {
            if c == 0.0 {
                continue;
            }
            let mut max = f64::NEG_INFINITY;
            for i in 0..k {
                max = max.max(ld[i * lanes + b]);
            }
            let mut sum = 0.0;
            for i in 0..k {
                sum += (ld[i * lanes + b] - max).exp();
            }
            total += c * (sum.ln() + max - ld[t * lanes + b]);
        }
        let meta_idx = self.meta.ce.len();
        self.meta.ce.push((targets, coeffs));
        Ok(self.push(
            Tensor::scalar(total),
            Op::WeightedCrossEntropyCols {
                logits,
                meta: meta_idx,
            },
        ))
    }

    /// Backpropagate from the scalar node `loss`, accumulating gradients
    /// on every node that influences it. Clears gradients from any
    /// previous sweep. Contributions are added in place; no full-size
    /// temporaries are allocated.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if !self.value(loss).is_scalar() {
            return Err(Error::ShapeMismatch {
                op: "backward",
                expected: "scalar loss".to_string(),
                got: format!("{:?}", self.value(loss).shape()),
            });
        }
        self.grads.iter_mut().for_each(|g| *g = None);
        self.grads[loss.0] = Some(Tensor::from_vec(
            self.nodes[loss.0].value.shape(),
            vec![1.0],
        )?);

        // Rank-1 weight-gradient updates (dW += g v^T) against leaf
        // matrices are deferred and materialized in row blocks after the
        // sweep; immediate accumulation would stream the full weight
        // gradient buffer once per time step.
        let mut deferred: Vec<(usize, Tensor, usize)> = Vec::new();

        for idx in (0..=loss.0).rev() {
            let Some(g) = self.grads[idx].take() else {
                continue;
            };
            let op = self.nodes[idx].op;
            match op {
                Op::Leaf => {}
                Op::MatVec { w, v } => {
                    let gd = g.data();
                    let n = self.nodes[v.0].value.len();
                    if matches!(self.nodes[w.0].op, Op::Leaf) {
                        deferred.push((w.0, g.clone(), v.0));
                    } else {
                        // dW[i, :] += g[i] * v
                        let vd = &self.nodes[v.0].value;
                        let dw = slot(&mut self.grads, &self.nodes, w.0);
                        for (i, &gi) in gd.iter().enumerate() {
                            if gi == 0.0 {
                                continue;
                            }
                            for (r, &vj) in dw[i * n..(i + 1) * n].iter_mut().zip(vd.data()) {
                                *r += gi * vj;
                            }
                        }
                    }
                    {
                        // dv += W^T g, row-wise
                        let wd = &self.nodes[w.0].value;
                        let dv = slot(&mut self.grads, &self.nodes, v.0);
                        for (i, &gi) in gd.iter().enumerate() {
                            if gi == 0.0 {
                                continue;
                            }
                            let row = &wd.data()[i * n..(i + 1) * n];
                            for (d, &wj) in dv.iter_mut().zip(row) {
                                *d += gi * wj;
                            }
                        }
                    }
                }
                Op::Add { a, b } => {
                    for target in [a, b] {
                        let dst = slot(&mut self.grads, &self.nodes, target.0);
                        for (d, &gi) in dst.iter_mut().zip(g.data()) {
                            *d += gi;
                        }
                    }
                }
                Op::Mul { a, b } => {
                    {
                        let bv = &self.nodes[b.0].value;
                        let da = slot(&mut self.grads, &self.nodes, a.0);
                        for ((d, &gi), &bi) in da.iter_mut().zip(g.data()).zip(bv.data()) {
                            *d += gi * bi;
                        }
                    }
                    {
                        let av = &self.nodes[a.0].value;
                        let db = slot(&mut self.grads, &self.nodes, b.0);
                        for ((d, &gi), &ai) in db.iter_mut().zip(g.data()).zip(av.data()) {
                            *d += gi * ai;
                        }
                    }
                }
                Op::Scale { x, c } => {
                    let dx = slot(&mut self.grads, &self.nodes, x.0);
                    for (d, &gi) in dx.iter_mut().zip(g.data()) {
                        *d += gi * c;
                    }
                }
                Op::Sigmoid { x } => {
                    let y = &self.nodes[idx].value;
                    let dx = slot(&mut self.grads, &self.nodes, x.0);
                    for ((d, &gi), &yi) in dx.iter_mut().zip(g.data()).zip(y.data()) {
                        *d += gi * yi * (1.0 - yi);
                    }
                }
                Op::Tanh { x } => {
                    let y = &self.nodes[idx].value;
                    let dx = slot(&mut self.grads, &self.nodes, x.0);
                    for ((d, &gi), &yi) in dx.iter_mut().zip(g.data()).zip(y.data()) {
                        *d += gi * (1.0 - yi * yi);
                    }
                }
                Op::Prelu { x, slope } => {
                    let scalar_slope = self.nodes[slope.0].value.len() == 1;
                    {
                        let xv = &self.nodes[x.0].value;
                        let sv = &self.nodes[slope.0].value;
                        let dx = slot(&mut self.grads, &self.nodes, x.0);
                        for (i, (d, &gi)) in dx.iter_mut().zip(g.data()).enumerate() {
                            let xi = xv.data()[i];
                            let s = if scalar_slope {
                                sv.data()[0]
                            } else {
                                sv.data()[i]
                            };
                            *d += if xi > 0.0 { gi } else { gi * s };
                        }
                    }
                    {
                        let xv = &self.nodes[x.0].value;
                        let ds = slot(&mut self.grads, &self.nodes, slope.0);
                        for (i, &gi) in g.data().iter().enumerate() {
                            let contribution = gi * xv.data()[i].min(0.0);
                            if scalar_slope {
                                ds[0] += contribution;
                            } else {
                                ds[i] += contribution;
                            }
                        }
                    }
                }
                Op::Concat { a, b } => {
                    let la = self.nodes[a.0].value.len();
                    {
                        let da = slot(&mut self.grads, &self.nodes, a.0);
                        for (d, &gi) in da.iter_mut().zip(&g.data()[..la]) {
                            *d += gi;
                        }
                    }
                    {
                        let db = slot(&mut self.grads, &self.nodes, b.0);
                        for (d, &gi) in db.iter_mut().zip(&g.data()[la..]) {
                            *d += gi;
                        }
                    }
                }
                Op::Narrow { x, start } => {
                    let dx = slot(&mut self.grads, &self.nodes, x.0);
                    for (d, &gi) in dx[start..start + g.len()].iter_mut().zip(g.data()) {
                        *d += gi;
                    }
                }
                Op::GatherCol { m, col } => {
                    let cols = self.nodes[m.0].value.shape()[1];
                    let dm = slot(&mut self.grads, &self.nodes, m.0);
                    for (r, &gr) in g.data().iter().enumerate() {
                        dm[r * cols + col] += gr;
                    }
                }
                Op::CrossEntropyLogits { logits, target } => {
                    let gs = g.item();
                    let probs = softmax_slice(self.nodes[logits.0].value.data());
                    let dl = slot(&mut self.grads, &self.nodes, logits.0);
                    for (i, (d, p)) in dl.iter_mut().zip(probs).enumerate() {
                        let one_hot = if i == target { 1.0 } else { 0.0 };
                        *d += gs * (p - one_hot);
                    }
                }
                Op::MatMul { w, x } => {
                    let gd = g.data();
                    let (m, lanes) = {
                        let s = self.nodes[idx].value.shape();
                        (s[0], s[1])
                    };
                    let n = self.nodes[x.0].value.shape()[0];
                    {
                        // dW[i, k] += g[i, :] . x[k, :]
                        let xv = &self.nodes[x.0].value;
                        let dw = slot(&mut self.grads, &self.nodes, w.0);
                        for i in 0..m {
                            let g_row = &gd[i * lanes..(i + 1) * lanes];
                            let dw_row = &mut dw[i * n..(i + 1) * n];
                            for (k, d) in dw_row.iter_mut().enumerate() {
                                *d += dot(g_row, &xv.data()[k * lanes..(k + 1) * lanes]);
                            }
                        }
                    }
                    {
                        // dx[k, :] += sum_i W[i, k] * g[i, :]
                        let wv = &self.nodes[w.0].value;
                        let dx = slot(&mut self.grads, &self.nodes, x.0);
                        for i in 0..m {
                            let g_row = &gd[i * lanes..(i + 1) * lanes];
                            let w_row = &wv.data()[i * n..(i + 1) * n];
                            for (k, &wik) in w_row.iter().enumerate() {
                                if wik == 0.0 {
                                    continue;
                                }
                                for (d, &gv) in
                                    dx[k * lanes..(k + 1) * lanes].iter_mut().zip(g_row)
                                {
                                    *d += wik * gv;
                                }
                            }
                        }
                    }
                }
                Op::AddRowBroadcast { x, bias } => {
                    let lanes = self.nodes[idx].value.shape()[1];
                    {
                        let dx = slot(&mut self.grads, &self.nodes, x.0);
                        for (d, &gv) in dx.iter_mut().zip(g.data()) {
                            *d += gv;
                        }
                    }
                    {
                        let db = slot(&mut self.grads, &self.nodes, bias.0);
                        for (i, d) in db.iter_mut().enumerate() {
                            for &gv in &g.data()[i * lanes..(i + 1) * lanes] {
                                *d += gv;
                            }
                        }
                    }
                }
                Op::PreluRows { x, slope } => {
                    let (m, lanes) = {
                        let s = self.nodes[idx].value.shape();
                        (s[0], s[1])
                    };
                    let scalar_slope = self.nodes[slope.0].value.len() == 1;
                    {
                        let xv = &self.nodes[x.0].value;
                        let sv = &self.nodes[slope.0].value;
                        let dx = slot(&mut self.grads, &self.nodes, x.0);
                        for i in 0..m {
                            let s = if scalar_slope {
                                sv.data()[0]
                            } else {
                                sv.data()[i]
                            };
                            for j in i * lanes..(i + 1) * lanes {
                                let gi = g.data()[j];
                                dx[j] += if xv.data()[j] > 0.0 { gi } else { gi * s };
                            }
                        }
                    }
                    {
                        let xv = &self.nodes[x.0].value;
                        let ds = slot(&mut self.grads, &self.nodes, slope.0);
                        for i in 0..m {
                            let mut acc = 0.0;
                            for j in i * lanes..(i + 1) * lanes {
                                acc += g.data()[j] * xv.data()[j].min(0.0);
                            }
                            if scalar_slope {
                                ds[0] += acc;
                            } else {
                                ds[i] += acc;
                            }
                        }
                    }
                }
                Op::ConcatRows { a, b } => {
                    let split = self.nodes[a.0].value.len();
                    {
                        let da = slot(&mut self.grads, &self.nodes, a.0);
                        for (d, &gv) in da.iter_mut().zip(&g.data()[..split]) {
                            *d += gv;
                        }
                    }
                    {
                        let db = slot(&mut self.grads, &self.nodes, b.0);
                        for (d, &gv) in db.iter_mut().zip(&g.data()[split..]) {
                            *d += gv;
                        }
                    }
                }
                Op::NarrowRows { x, start } => {
                    let lanes = self.nodes[idx].value.shape()[1];
                    let dx = slot(&mut self.grads, &self.nodes, x.0);
                    let offset = start * lanes;
                    for (d, &gv) in dx[offset..offset + g.len()].iter_mut().zip(g.data()) {
                        *d += gv;
                    }
                }
                Op::GatherColsIdx { m, cols } => {
                    let (rows, lanes) = {
                        let s = self.nodes[idx].value.shape();
                        (s[0], s[1])
                    };
                    let k = self.nodes[m.0].value.shape()[1];
                    let cols = &self.meta.gathers[cols];
                    let dm = slot(&mut self.grads, &self.nodes, m.0);
                    for r in 0..rows {
                        let g_row = &g.data()[r * lanes..(r + 1) * lanes];
                        let dm_row = &mut dm[r * k..(r + 1) * k];
                        for (&c, &gv) in cols.iter().zip(g_row) {
                            dm_row[c] += gv;
                        }
                    }
                }
                Op::WeightedCrossEntropyCols { logits, meta } => {
                    let gs = g.item();
                    let (k, lanes) = {
                        let s = self.nodes[logits.0].value.shape();
                        (s[0], s[1])
                    };
                    let (targets, coeffs) = &self.meta.ce[meta];
                    let lv = &self.nodes[logits.0].value;
                    let dl = slot(&mut self.grads, &self.nodes, logits.0);
                    let mut col = vec![0.0; k];
                    for (b, (&t, &c)) in targets.iter().zip(coeffs).enumerate() {
                        if c == 0.0 {
                            continue;
                        }
                        for (i, v) in col.iter_mut().enumerate() {
                            *v = lv.data()[i * lanes + b];
                        }
                        let probs = softmax_slice(&col);
                        for (i, p) in probs.into_iter().enumerate() {
                            let one_hot = if i == t { 1.0 } else { 0.0 };
                            dl[i * lanes + b] += gs * c * (p - one_hot);
                        }
                    }
                }
            }
            self.grads[idx] = Some(g);
        }

        // Materialize deferred dW += g v^T updates. Processing row blocks
        // keeps each gradient block cache-resident across all pairs;
        // per-coordinate accumulation order matches the deferral order,
        // so the result is deterministic.
        deferred.sort_by_key(|(w, _, _)| *w);
        let mut i = 0;
        while i < deferred.len() {
            let w_id = deferred[i].0;
            let mut j = i;
            while j < deferred.len() && deferred[j].0 == w_id {
                j += 1;
            }
            let pairs = &deferred[i..j];
            let shape = self.nodes[w_id].value.shape();
            let (rows, n) = (shape[0], shape[1]);
            const BLOCK: usize = 48;
            let dw = slot(&mut self.grads, &self.nodes, w_id);
            let mut block_start = 0;
            while block_start < rows {
                let block_end = (block_start + BLOCK).min(rows);
                for (_, g, v_id) in pairs {
                    let vd = self.nodes[*v_id].value.data();
                    for r in block_start..block_end {
                        let gi = g.data()[r];
                        if gi == 0.0 {
                            continue;
                        }
                        for (d, &vj) in dw[r * n..(r + 1) * n].iter_mut().zip(vd) {
                            *d += gi * vj;
                        }
                    }
                }
                block_start = block_end;
            }
            i = j;
        }
        Ok(())
    }
}
