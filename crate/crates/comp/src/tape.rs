//! Tape-based reverse-mode automatic differentiation.
//!
//! Operations are recorded on a [`Tape`] during the forward pass and replayed
//! in reverse by [`Tape::backward`], accumulating gradients by summation over
//! all paths. Values are f64 throughout; replaying the same tape yields
//! bit-identical values and gradients.
//!
//! The op set is the minimum needed for MLP encoders/decoders, Gaussian log
//! densities, and the batch-mixture penalties: elementwise arithmetic, matmul
//! and affine layers, leaky rectifier, exp/log/square, reductions, (masked)
//! row-wise logsumexp, and pairwise squared distances.

use crate::tensor::{same_shape, Tensor, TensorError};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone)]
#[allow(dead_code)] // op payloads are kept for replay inspection even when backward ignores them
enum Op {
    Leaf,
    Add,
    Sub,
    Mul,
    Scale(f64),
    AddScalar(f64),
    MatMul,
    /// affine(x, w, b) = x·w + b with b broadcast over rows.
    Affine,
    LeakyRelu(f64),
    ClampMin(f64),
    Exp,
    Log,
    Square,
    Sum,
    Mean,
    RowSum,
    ColMean,
    /// Row-wise logsumexp; `mask[i*m + j]` selects which columns participate
    /// in row i. An all-ones mask is the plain op.
    LogSumExpRows(Option<Vec<bool>>),
    PairwiseSqDist,
    /// D_ij = sum_d w_jd (x_id - y_jd)^2; w carries per-component weights.
    WeightedPairwiseSqDist,
    ConcatCols,
    SliceCols(usize, usize),
    GatherRows(Vec<usize>),
    /// a[n,m] + v[m] broadcast over rows.
    AddRowVec,
    /// a[n,m] * v[n] broadcast over columns (per-row scaling).
    MulColVec,
    /// a[n,m] * v[m] broadcast over rows (per-column scaling).
    MulRowVec,
}

struct Node {
    op: Op,
    inputs: Vec<NodeId>,
    value: Tensor,
}

/// Gradients produced by [`Tape::backward`], indexed by node id.
/// Nodes not connected to the loss have no entry and read back as zero.
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, id: NodeId) -> Option<&Tensor> {
        self.grads.get(id.0).and_then(|g| g.as_ref())
    }

    /// Gradient of `id`, or zeros of the given shape if disconnected.
    pub fn get_or_zero(&self, id: NodeId, shape: &[usize]) -> Tensor {
        match self.get(id) {
            Some(g) => g.clone(),
            None => Tensor::zeros(shape.to_vec()),
        }
    }
}

/// Append-only record of one forward computation.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
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

    fn push(&mut self, op: Op, inputs: Vec<NodeId>, value: Tensor) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node { op, inputs, value });
        id
    }

    /// Records an input tensor (parameter, data batch, or constant).
    pub fn leaf(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Leaf, vec![], value)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TensorError> {
        let (va, vb) = (self.value(a), self.value(b));
        same_shape("add", va, vb)?;
        let data = va
            .data()
            .iter()
            .zip(vb.data())
            .map(|(x, y)| x + y)
            .collect();
        let out = Tensor::new(va.shape().to_vec(), data)?;
        Ok(self.push(Op::Add, vec![a, b], out))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TensorError> {
        let (va, vb) = (self.value(a), self.value(b));
        same_shape("sub", va, vb)?;
        let data = va
            .data()
            .iter()
            .zip(vb.data())
            .map(|(x, y)| x - y)
            .collect();
        let out = Tensor::new(va.shape().to_vec(), data)?;
        Ok(self.push(Op::Sub, vec![a, b], out))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TensorError> {
        let (va, vb) = (self.value(a), self.value(b));
        same_shape("mul", va, vb)?;
        let data = va
            .data()
            .iter()
            .zip(vb.data())
            .map(|(x, y)| x * y)
            .collect();
        let out = Tensor::new(va.shape().to_vec(), data)?;
        Ok(self.push(Op::Mul, vec![a, b], out))
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> NodeId {
        let out = self.value(a).map(|x| x * c);
        self.push(Op::Scale(c), vec![a], out)
    }

    pub fn add_scalar(&mut self, a: NodeId, c: f64) -> NodeId {
        let out = self.value(a).map(|x| x + c);
        self.push(Op::AddScalar(c), vec![a], out)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TensorError> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.shape().len() != 2 || vb.shape().len() != 2 || va.cols() != vb.rows() {
            return Err(TensorError::ShapeMismatch {
                op: "matmul",
                lhs: va.shape().to_vec(),
                rhs: vb.shape().to_vec(),
            });
        }
        let out = matmul(va, vb);
        Ok(self.push(Op::MatMul, vec![a, b], out))
    }

    /// x·w + b with b a length-m vector broadcast over the n rows.
    pub fn affine(&mut self, x: NodeId, w: NodeId, b: NodeId) -> Result<NodeId, TensorError> {
        let (vx, vw, vb) = (self.value(x), self.value(w), self.value(b));
        if vx.shape().len() != 2 || vw.shape().len() != 2 || vx.cols() != vw.rows() {
            return Err(TensorError::ShapeMismatch {
                op: "affine",
                lhs: vx.shape().to_vec(),
                rhs: vw.shape().to_vec(),
            });
        }
        if vb.numel() != vw.cols() {
            return Err(TensorError::ShapeMismatch {
                op: "affine bias",
                lhs: vb.shape().to_vec(),
                rhs: vec![vw.cols()],
            });
        }
        let mut out = matmul(vx, vw);
        let m = out.cols();
        for i in 0..out.rows() {
            for j in 0..m {
                let v = out.get(i, j) + vb.data()[j];
                out.set(i, j, v);
            }
        }
        Ok(self.push(Op::Affine, vec![x, w, b], out))
    }

    pub fn leaky_relu(&mut self, a: NodeId, slope: f64) -> NodeId {
        let out = self.value(a).map(|x| if x > 0.0 { x } else { slope * x });
        self.push(Op::LeakyRelu(slope), vec![a], out)
    }

    pub fn clamp_min(&mut self, a: NodeId, floor: f64) -> NodeId {
        let out = self.value(a).map(|x| x.max(floor));
        self.push(Op::ClampMin(floor), vec![a], out)
    }

    pub fn exp(&mut self, a: NodeId) -> NodeId {
        let out = self.value(a).map(f64::exp);
        self.push(Op::Exp, vec![a], out)
    }

    pub fn log(&mut self, a: NodeId) -> NodeId {
        let out = self.value(a).map(f64::ln);
        self.push(Op::Log, vec![a], out)
    }

    pub fn square(&mut self, a: NodeId) -> NodeId {
        let out = self.value(a).map(|x| x * x);
        self.push(Op::Square, vec![a], out)
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let s: f64 = self.value(a).data().iter().sum();
        self.push(Op::Sum, vec![a], Tensor::scalar(s))
    }

    pub fn mean(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a);
        let s: f64 = v.data().iter().sum::<f64>() / v.numel() as f64;
        self.push(Op::Mean, vec![a], Tensor::scalar(s))
    }

    /// Sums each row of an [n, m] tensor into an [n] vector.
    pub fn row_sum(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a);
        let (n, m) = (v.rows(), v.cols());
        let mut out = vec![0.0; n];
        for i in 0..n {
            out[i] = v.row(i).iter().sum();
        }
        let _ = m;
        self.push(Op::RowSum, vec![a], Tensor::vector(out))
    }

    /// Per-column mean of an [n, m] tensor into an [m] vector.
    pub fn col_mean(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a);
        let (n, m) = (v.rows(), v.cols());
        let mut out = vec![0.0; m];
        for i in 0..n {
            for j in 0..m {
                out[j] += v.get(i, j);
            }
        }
        for x in &mut out {
            *x /= n as f64;
        }
        self.push(Op::ColMean, vec![a], Tensor::vector(out))
    }

    /// Row-wise logsumexp over the last axis with max-subtraction.
    pub fn logsumexp_rows(&mut self, a: NodeId) -> Result<NodeId, TensorError> {
        self.logsumexp_rows_impl(a, None)
    }

    /// Row-wise logsumexp restricted to the columns where `mask` is true.
    /// Errors if any row has an empty mask.
    pub fn masked_logsumexp_rows(
        &mut self,
        a: NodeId,
        mask: &[bool],
    ) -> Result<NodeId, TensorError> {
        self.logsumexp_rows_impl(a, Some(mask.to_vec()))
    }

    fn logsumexp_rows_impl(
        &mut self,
        a: NodeId,
        mask: Option<Vec<bool>>,
    ) -> Result<NodeId, TensorError> {
        let v = self.value(a);
        let (n, m) = (v.rows(), v.cols());
        if let Some(mk) = &mask {
            if mk.len() != n * m {
                return Err(TensorError::ShapeMismatch {
                    op: "masked_logsumexp_rows",
                    lhs: vec![n, m],
                    rhs: vec![mk.len()],
                });
            }
        }
        let mut out = vec![0.0; n];
        for i in 0..n {
            let row = v.row(i);
            let mut mx = f64::NEG_INFINITY;
            let mut any = false;
            for (j, &x) in row.iter().enumerate() {
                if mask.as_ref().map_or(true, |mk| mk[i * m + j]) {
                    any = true;
                    if x > mx {
                        mx = x;
                    }
                }
            }
            if !any {
                return Err(TensorError::Invalid(format!(
                    "logsumexp: row {i} has no unmasked entries"
                )));
            }
            let mut s = 0.0;
            for (j, &x) in row.iter().enumerate() {
                if mask.as_ref().map_or(true, |mk| mk[i * m + j]) {
                    s += (x - mx).exp();
                }
            }
            out[i] = mx + s.ln();
        }
        Ok(self.push(Op::LogSumExpRows(mask), vec![a], Tensor::vector(out)))
    }

    /// D_ij = ||x_i - y_j||^2 for x [n,d], y [m,d].
    pub fn pairwise_sq_dist(&mut self, x: NodeId, y: NodeId) -> Result<NodeId, TensorError> {
        let (vx, vy) = (self.value(x), self.value(y));
        if vx.cols() != vy.cols() {
            return Err(TensorError::ShapeMismatch {
                op: "pairwise_sq_dist",
                lhs: vx.shape().to_vec(),
                rhs: vy.shape().to_vec(),
            });
        }
        let (n, m, d) = (vx.rows(), vy.rows(), vx.cols());
        let mut out = Tensor::zeros(vec![n, m]);
        for i in 0..n {
            for j in 0..m {
                let mut s = 0.0;
                for k in 0..d {
                    let diff = vx.get(i, k) - vy.get(j, k);
                    s += diff * diff;
                }
                out.set(i, j, s);
            }
        }
        Ok(self.push(Op::PairwiseSqDist, vec![x, y], out))
    }

    /// D_ij = sum_d w_jd (x_id - y_jd)^2; the weights belong to component j.
    pub fn weighted_pairwise_sq_dist(
        &mut self,
        x: NodeId,
        y: NodeId,
        w: NodeId,
    ) -> Result<NodeId, TensorError> {
        let (vx, vy, vw) = (self.value(x), self.value(y), self.value(w));
        if vx.cols() != vy.cols() || vy.shape() != vw.shape() {
            return Err(TensorError::ShapeMismatch {
                op: "weighted_pairwise_sq_dist",
                lhs: vx.shape().to_vec(),
                rhs: vy.shape().to_vec(),
            });
        }
        let (n, m, d) = (vx.rows(), vy.rows(), vx.cols());
        let mut out = Tensor::zeros(vec![n, m]);
        for i in 0..n {
            for j in 0..m {
                let mut s = 0.0;
                for k in 0..d {
                    let diff = vx.get(i, k) - vy.get(j, k);
                    s += vw.get(j, k) * diff * diff;
                }
                out.set(i, j, s);
            }
        }
        Ok(self.push(Op::WeightedPairwiseSqDist, vec![x, y, w], out))
    }

    pub fn concat_cols(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TensorError> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.rows() != vb.rows() {
            return Err(TensorError::ShapeMismatch {
                op: "concat_cols",
                lhs: va.shape().to_vec(),
                rhs: vb.shape().to_vec(),
            });
        }
        let (n, p, q) = (va.rows(), va.cols(), vb.cols());
        let mut data = Vec::with_capacity(n * (p + q));
        for i in 0..n {
            data.extend_from_slice(va.row(i));
            data.extend_from_slice(vb.row(i));
        }
        let out = Tensor::new(vec![n, p + q], data)?;
        Ok(self.push(Op::ConcatCols, vec![a, b], out))
    }

    /// Columns `start..end` of an [n, m] tensor.
    pub fn slice_cols(&mut self, a: NodeId, start: usize, end: usize) -> Result<NodeId, TensorError> {
        let v = self.value(a);
        let (n, m) = (v.rows(), v.cols());
        if start >= end || end > m {
            return Err(TensorError::BadShape {
                op: "slice_cols",
                expected: "start < end <= cols",
                shape: v.shape().to_vec(),
            });
        }
        let mut data = Vec::with_capacity(n * (end - start));
        for i in 0..n {
            data.extend_from_slice(&v.row(i)[start..end]);
        }
        let out = Tensor::new(vec![n, end - start], data)?;
        Ok(self.push(Op::SliceCols(start, end), vec![a], out))
    }

    pub fn gather_rows(&mut self, a: NodeId, indices: &[usize]) -> Result<NodeId, TensorError> {
        let v = self.value(a);
        let n = v.rows();
        for &i in indices {
            if i >= n {
                return Err(TensorError::IndexOutOfBounds {
                    op: "gather_rows",
                    index: i,
                    len: n,
                });
            }
        }
        let m = v.cols();
        let mut data = Vec::with_capacity(indices.len() * m);
        for &i in indices {
            data.extend_from_slice(v.row(i));
        }
        let out = Tensor::new(vec![indices.len(), m], data)?;
        Ok(self.push(Op::GatherRows(indices.to_vec()), vec![a], out))
    }

    /// a[n,m] + v[m], v broadcast over rows.
    pub fn add_row_vec(&mut self, a: NodeId, v: NodeId) -> Result<NodeId, TensorError> {
        let (va, vv) = (self.value(a), self.value(v));
        if vv.numel() != va.cols() {
            return Err(TensorError::ShapeMismatch {
                op: "add_row_vec",
                lhs: va.shape().to_vec(),
                rhs: vv.shape().to_vec(),
            });
        }
        let (n, m) = (va.rows(), va.cols());
        let mut out = va.clone();
        for i in 0..n {
            for j in 0..m {
                let x = out.get(i, j) + vv.data()[j];
                out.set(i, j, x);
            }
        }
        Ok(self.push(Op::AddRowVec, vec![a, v], out))
    }

    /// a[n,m] * v[n], each row i scaled by v_i.
    pub fn mul_col_vec(&mut self, a: NodeId, v: NodeId) -> Result<NodeId, TensorError> {
        let (va, vv) = (self.value(a), self.value(v));
        if vv.numel() != va.rows() {
            return Err(TensorError::ShapeMismatch {
                op: "mul_col_vec",
                lhs: va.shape().to_vec(),
                rhs: vv.shape().to_vec(),
            });
        }
        let (n, m) = (va.rows(), va.cols());
        let mut out = va.clone();
        for i in 0..n {
            let s = vv.data()[i];
            for j in 0..m {
                let x = out.get(i, j) * s;
                out.set(i, j, x);
            }
        }
        Ok(self.push(Op::MulColVec, vec![a, v], out))
    }

    /// a[n,m] * v[m], each column j scaled by v_j.
    pub fn mul_row_vec(&mut self, a: NodeId, v: NodeId) -> Result<NodeId, TensorError> {
        let (va, vv) = (self.value(a), self.value(v));
        if vv.numel() != va.cols() {
            return Err(TensorError::ShapeMismatch {
                op: "mul_row_vec",
                lhs: va.shape().to_vec(),
                rhs: vv.shape().to_vec(),
            });
        }
        let (n, m) = (va.rows(), va.cols());
        let mut out = va.clone();
        for i in 0..n {
            for j in 0..m {
                let x = out.get(i, j) * vv.data()[j];
                out.set(i, j, x);
            }
        }
        Ok(self.push(Op::MulRowVec, vec![a, v], out))
    }

    /// Reverse pass from a scalar loss node. Gradients accumulate by sum
    /// over all paths; order of accumulation is fixed by node order.
    pub fn backward(&mut self, loss: NodeId) -> Result<Gradients, TensorError> {
        let lv = self.value(loss);
        if !lv.is_scalar() {
            return Err(TensorError::BadShape {
                op: "backward",
                expected: "scalar loss",
                shape: lv.shape().to_vec(),
            });
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::new(lv.shape().to_vec(), vec![1.0]).unwrap());

        for idx in (0..=loss.0).rev() {
            let g = match grads[idx].take() {
                Some(g) => g,
                None => continue,
            };
            self.backprop_node(idx, &g, &mut grads);
            grads[idx] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn accumulate(grads: &mut [Option<Tensor>], id: NodeId, delta: Tensor) {
        match &mut grads[id.0] {
            Some(g) => {
                for (a, b) in g.data_mut().iter_mut().zip(delta.data()) {
                    *a += b;
                }
            }
            slot @ None => *slot = Some(delta),
        }
    }

    fn backprop_node(&self, idx: usize, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let node = &self.nodes[idx];
        let ins = &node.inputs;
        match &node.op {
            Op::Leaf => {}
            Op::Add => {
                Self::accumulate(grads, ins[0], g.clone());
                Self::accumulate(grads, ins[1], g.clone());
            }
            Op::Sub => {
                Self::accumulate(grads, ins[0], g.clone());
                Self::accumulate(grads, ins[1], g.map(|x| -x));
            }
            Op::Mul => {
                let (a, b) = (self.value(ins[0]), self.value(ins[1]));
                let ga = Tensor::new(
                    a.shape().to_vec(),
                    g.data().iter().zip(b.data()).map(|(x, y)| x * y).collect(),
                )
                .unwrap();
                let gb = Tensor::new(
                    b.shape().to_vec(),
                    g.data().iter().zip(a.data()).map(|(x, y)| x * y).collect(),
                )
                .unwrap();
                Self::accumulate(grads, ins[0], ga);
                Self::accumulate(grads, ins[1], gb);
            }
            Op::Scale(c) => Self::accumulate(grads, ins[0], g.map(|x| x * c)),
            Op::AddScalar(_) => Self::accumulate(grads, ins[0], g.clone()),
            Op::MatMul => {
                let (a, b) = (self.value(ins[0]), self.value(ins[1]));
                Self::accumulate(grads, ins[0], matmul_nt(g, b));
                Self::accumulate(grads, ins[1], matmul_tn(a, g));
            }
            Op::Affine => {
                let (x, w) = (self.value(ins[0]), self.value(ins[1]));
                Self::accumulate(grads, ins[0], matmul_nt(g, w));
                Self::accumulate(grads, ins[1], matmul_tn(x, g));
                let m = g.cols();
                let mut gb = vec![0.0; m];
                for i in 0..g.rows() {
                    for j in 0..m {
                        gb[j] += g.get(i, j);
                    }
                }
                Self::accumulate(grads, ins[2], Tensor::vector(gb));
            }
            Op::LeakyRelu(slope) => {
                let x = self.value(ins[0]);
                let data = g
                    .data()
                    .iter()
                    .zip(x.data())
                    .map(|(gi, xi)| if *xi > 0.0 { *gi } else { gi * slope })
                    .collect();
                Self::accumulate(grads, ins[0], Tensor::new(x.shape().to_vec(), data).unwrap());
            }
            Op::ClampMin(floor) => {
                let x = self.value(ins[0]);
                let data = g
                    .data()
                    .iter()
                    .zip(x.data())
                    .map(|(gi, xi)| if *xi >= *floor { *gi } else { 0.0 })
                    .collect();
                Self::accumulate(grads, ins[0], Tensor::new(x.shape().to_vec(), data).unwrap());
            }
            Op::Exp => {
                let y = &node.value;
                let data = g.data().iter().zip(y.data()).map(|(gi, yi)| gi * yi).collect();
                Self::accumulate(grads, ins[0], Tensor::new(y.shape().to_vec(), data).unwrap());
            }
            Op::Log => {
                let x = self.value(ins[0]);
                let data = g.data().iter().zip(x.data()).map(|(gi, xi)| gi / xi).collect();
                Self::accumulate(grads, ins[0], Tensor::new(x.shape().to_vec(), data).unwrap());
            }
            Op::Square => {
                let x = self.value(ins[0]);
                let data = g
                    .data()
                    .iter()
                    .zip(x.data())
                    .map(|(gi, xi)| 2.0 * gi * xi)
                    .collect();
                Self::accumulate(grads, ins[0], Tensor::new(x.shape().to_vec(), data).unwrap());
            }
            Op::Sum => {
                let x = self.value(ins[0]);
                let gv = g.data()[0];
                Self::accumulate(grads, ins[0], Tensor::new(x.shape().to_vec(), vec![gv; x.numel()]).unwrap());
            }
            Op::Mean => {
                let x = self.value(ins[0]);
                let gv = g.data()[0] / x.numel() as f64;
                Self::accumulate(grads, ins[0], Tensor::new(x.shape().to_vec(), vec![gv; x.numel()]).unwrap());
            }
            Op::RowSum => {
                let x = self.value(ins[0]);
                let (n, m) = (x.rows(), x.cols());
                let mut gx = Tensor::zeros(x.shape().to_vec());
                for i in 0..n {
                    for j in 0..m {
                        gx.set(i, j, g.data()[i]);
                    }
                }
                Self::accumulate(grads, ins[0], gx);
            }
            Op::ColMean => {
                let x = self.value(ins[0]);
                let (n, m) = (x.rows(), x.cols());
                let mut gx = Tensor::zeros(x.shape().to_vec());
                for i in 0..n {
                    for j in 0..m {
                        gx.set(i, j, g.data()[j] / n as f64);
                    }
                }
                Self::accumulate(grads, ins[0], gx);
            }
            Op::LogSumExpRows(mask) => {
                let x = self.value(ins[0]);
                let y = &node.value;
                let (n, m) = (x.rows(), x.cols());
                let mut gx = Tensor::zeros(x.shape().to_vec());
                for i in 0..n {
                    for j in 0..m {
                        let active = mask.as_ref().map_or(true, |mk| mk[i * m + j]);
                        if active {
                            let w = (x.get(i, j) - y.data()[i]).exp();
                            gx.set(i, j, g.data()[i] * w);
                        }
                    }
                }
                Self::accumulate(grads, ins[0], gx);
            }
            Op::PairwiseSqDist => {
                let (x, y) = (self.value(ins[0]), self.value(ins[1]));
                let (n, m, d) = (x.rows(), y.rows(), x.cols());
                let mut gx = Tensor::zeros(x.shape().to_vec());
                let mut gy = Tensor::zeros(y.shape().to_vec());
                for i in 0..n {
                    for j in 0..m {
                        let gij = g.get(i, j);
                        if gij == 0.0 {
                            continue;
                        }
                        for k in 0..d {
                            let diff = x.get(i, k) - y.get(j, k);
                            gx.set(i, k, gx.get(i, k) + 2.0 * gij * diff);
                            gy.set(j, k, gy.get(j, k) - 2.0 * gij * diff);
                        }
                    }
                }
                Self::accumulate(grads, ins[0], gx);
                Self::accumulate(grads, ins[1], gy);
            }
            Op::WeightedPairwiseSqDist => {
                let (x, y, w) = (self.value(ins[0]), self.value(ins[1]), self.value(ins[2]));
                let (n, m, d) = (x.rows(), y.rows(), x.cols());
                let mut gx = Tensor::zeros(x.shape().to_vec());
                let mut gy = Tensor::zeros(y.shape().to_vec());
                let mut gw = Tensor::zeros(w.shape().to_vec());
                for i in 0..n {
                    for j in 0..m {
                        let gij = g.get(i, j);
                        if gij == 0.0 {
                            continue;
                        }
                        for k in 0..d {
                            let diff = x.get(i, k) - y.get(j, k);
                            let wj = w.get(j, k);
                            gx.set(i, k, gx.get(i, k) + 2.0 * gij * wj * diff);
                            gy.set(j, k, gy.get(j, k) - 2.0 * gij * wj * diff);
                            gw.set(j, k, gw.get(j, k) + gij * diff * diff);
                        }
                    }
                }
                Self::accumulate(grads, ins[0], gx);
                Self::accumulate(grads, ins[1], gy);
                Self::accumulate(grads, ins[2], gw);
            }
            Op::ConcatCols => {
                let (a, b) = (self.value(ins[0]), self.value(ins[1]));
                let (n, p, q) = (a.rows(), a.cols(), b.cols());
                let mut ga = Tensor::zeros(a.shape().to_vec());
                let mut gb = Tensor::zeros(b.shape().to_vec());
                for i in 0..n {
                    for j in 0..p {
                        ga.set(i, j, g.get(i, j));
                    }
                    for j in 0..q {
                        gb.set(i, j, g.get(i, p + j));
                    }
                }
                Self::accumulate(grads, ins[0], ga);
                Self::accumulate(grads, ins[1], gb);
            }
            Op::SliceCols(start, _end) => {
                let x = self.value(ins[0]);
                let mut gx = Tensor::zeros(x.shape().to_vec());
                for i in 0..g.rows() {
                    for j in 0..g.cols() {
                        gx.set(i, start + j, g.get(i, j));
                    }
                }
                Self::accumulate(grads, ins[0], gx);
            }
            Op::GatherRows(indices) => {
                let x = self.value(ins[0]);
                let mut gx = Tensor::zeros(x.shape().to_vec());
                let m = x.cols();
                for (r, &i) in indices.iter().enumerate() {
                    for j in 0..m {
                        gx.set(i, j, gx.get(i, j) + g.get(r, j));
                    }
                }
                Self::accumulate(grads, ins[0], gx);
            }
            Op::AddRowVec => {
                let v = self.value(ins[1]);
                Self::accumulate(grads, ins[0], g.clone());
                let m = g.cols();
                let mut gv = vec![0.0; m];
                for i in 0..g.rows() {
                    for j in 0..m {
                        gv[j] += g.get(i, j);
                    }
                }
                Self::accumulate(grads, ins[1], Tensor::new(v.shape().to_vec(), gv).unwrap());
            }
            Op::MulColVec => {
                let (a, v) = (self.value(ins[0]), self.value(ins[1]));
                let (n, m) = (a.rows(), a.cols());
                let mut ga = Tensor::zeros(a.shape().to_vec());
                let mut gv = vec![0.0; n];
                for i in 0..n {
                    for j in 0..m {
                        ga.set(i, j, g.get(i, j) * v.data()[i]);
                        gv[i] += g.get(i, j) * a.get(i, j);
                    }
                }
                Self::accumulate(grads, ins[0], ga);
                Self::accumulate(grads, ins[1], Tensor::new(v.shape().to_vec(), gv).unwrap());
            }
            Op::MulRowVec => {
                let (a, v) = (self.value(ins[0]), self.value(ins[1]));
                let (n, m) = (a.rows(), a.cols());
                let mut ga = Tensor::zeros(a.shape().to_vec());
                let mut gv = vec![0.0; m];
                for i in 0..n {
                    for j in 0..m {
                        ga.set(i, j, g.get(i, j) * v.data()[j]);
                        gv[j] += g.get(i, j) * a.get(i, j);
                    }
                }
                Self::accumulate(grads, ins[0], ga);
                Self::accumulate(grads, ins[1], Tensor::new(v.shape().to_vec(), gv).unwrap());
            }
        }
    }
}

fn matmul(a: &Tensor, b: &Tensor) -> Tensor {
    let (n, k, m) = (a.rows(), a.cols(), b.cols());
    let mut out = Tensor::zeros(vec![n, m]);
    for i in 0..n {
        for l in 0..k {
            let ail = a.get(i, l);
            if ail == 0.0 {
                continue;
            }
            let brow = b.row(l);
            for j in 0..m {
                out.set(i, j, out.get(i, j) + ail * brow[j]);
            }
        }
    }
    out
}

/// g [n,m] · b [k,m]^T -> [n,k]
fn matmul_nt(g: &Tensor, b: &Tensor) -> Tensor {
    let (n, m, k) = (g.rows(), g.cols(), b.rows());
    let mut out = Tensor::zeros(vec![n, k]);
    for i in 0..n {
        for l in 0..k {
            let mut s = 0.0;
            let (grow, brow) = (g.row(i), b.row(l));
            for j in 0..m {
                s += grow[j] * brow[j];
            }
            out.set(i, l, s);
        }
    }
    out
}

/// a [n,k]^T · g [n,m] -> [k,m]
fn matmul_tn(a: &Tensor, g: &Tensor) -> Tensor {
    let (n, k, m) = (a.rows(), a.cols(), g.cols());
    let mut out = Tensor::zeros(vec![k, m]);
    for i in 0..n {
        let (arow, grow) = (a.row(i), g.row(i));
        for l in 0..k {
            let ail = arow[l];
            if ail == 0.0 {
                continue;
            }
            for j in 0..m {
                out.set(l, j, out.get(l, j) + ail * grow[j]);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_value_and_gradient() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::scalar(3.0));
        let y = t.square(x);
        assert_eq!(t.value(y).as_scalar().unwrap(), 9.0);
        let g = t.backward(y).unwrap();
        assert_eq!(g.get(x).unwrap().data()[0], 6.0);
    }

    #[test]
    fn logsumexp_symmetric_row() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::matrix(1, 2, vec![0.0, 0.0]).unwrap());
        let y = t.logsumexp_rows(x).unwrap();
        let v = t.value(y).data()[0];
        assert!((v - 2.0_f64.ln()).abs() < 1e-12);
        let s = t.sum(y);
        let g = t.backward(s).unwrap();
        let gx = g.get(x).unwrap();
        assert!((gx.data()[0] - 0.5).abs() < 1e-12);
        assert!((gx.data()[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pairwise_distance_basics() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::matrix(2, 2, vec![0.0, 0.0, 3.0, 4.0]).unwrap());
        let d = t.pairwise_sq_dist(x, x).unwrap();
        let v = t.value(d);
        assert_eq!(v.get(0, 0), 0.0);
        assert_eq!(v.get(1, 1), 0.0);
        assert_eq!(v.get(0, 1), 25.0);
        assert_eq!(v.get(1, 0), 25.0);
    }

    #[test]
    fn matmul_ones_gradient() {
        // loss = sum(A·B) for 2x2 ones: dLoss/dA is all 2s.
        let mut t = Tape::new();
        let a = t.leaf(Tensor::matrix(2, 2, vec![1.0; 4]).unwrap());
        let b = t.leaf(Tensor::matrix(2, 2, vec![1.0; 4]).unwrap());
        let p = t.matmul(a, b).unwrap();
        let loss = t.sum(p);
        let g = t.backward(loss).unwrap();
        assert_eq!(g.get(a).unwrap().data(), &[2.0, 2.0, 2.0, 2.0]);
    }

    #[test]
    fn mean_gradient_is_uniform() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::vector(vec![1.0, 2.0, 3.0, 4.0]));
        let m = t.mean(x);
        let g = t.backward(m).unwrap();
        assert_eq!(g.get(x).unwrap().data(), &[0.25, 0.25, 0.25, 0.25]);
    }

    #[test]
    fn disconnected_leaf_has_zero_gradient() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::scalar(1.0));
        let unused = t.leaf(Tensor::vector(vec![1.0, 2.0]));
        let y = t.square(x);
        let g = t.backward(y).unwrap();
        assert!(g.get(unused).is_none());
        assert_eq!(g.get_or_zero(unused, &[2]).data(), &[0.0, 0.0]);
    }

    #[test]
    fn non_scalar_loss_rejected() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::vector(vec![1.0, 2.0]));
        assert!(t.backward(x).is_err());
    }

    #[test]
    fn backward_is_linear_in_the_loss() {
        // grad(a*L1 + b*L2) = a*grad(L1) + b*grad(L2)
        let build = |t: &mut Tape, x: NodeId| {
            let s = t.square(x);
            let l1 = t.sum(s);
            let e = t.exp(x);
            let l2 = t.sum(e);
            (l1, l2)
        };
        let xv = Tensor::vector(vec![0.3, -0.7, 1.1]);
        let (a, b) = (2.5, -1.25);

        let mut t1 = Tape::new();
        let x1 = t1.leaf(xv.clone());
        let (l1, _) = build(&mut t1, x1);
        let g1 = t1.backward(l1).unwrap().get(x1).unwrap().clone();

        let mut t2 = Tape::new();
        let x2 = t2.leaf(xv.clone());
        let (_, l2) = build(&mut t2, x2);
        let g2 = t2.backward(l2).unwrap().get(x2).unwrap().clone();

        let mut t3 = Tape::new();
        let x3 = t3.leaf(xv.clone());
        let (l1c, l2c) = build(&mut t3, x3);
        let sa = t3.scale(l1c, a);
        let sb = t3.scale(l2c, b);
        let total = t3.add(sa, sb).unwrap();
        let g3 = t3.backward(total).unwrap().get(x3).unwrap().clone();

        for i in 0..3 {
            let expect = a * g1.data()[i] + b * g2.data()[i];
            assert!((g3.data()[i] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn replay_is_bit_identical() {
        let run = || {
            let mut t = Tape::new();
            let x = t.leaf(Tensor::matrix(2, 3, vec![0.1, -0.4, 2.0, 1.5, -0.2, 0.33]).unwrap());
            let w = t.leaf(Tensor::matrix(3, 2, vec![0.5, -1.0, 0.25, 0.75, -0.5, 1.25]).unwrap());
            let p = t.matmul(x, w).unwrap();
            let r = t.leaky_relu(p, 0.01);
            let e = t.exp(r);
            let loss = t.mean(e);
            let lv = t.value(loss).as_scalar().unwrap();
            let g = t.backward(loss).unwrap();
            (lv, g.get(w).unwrap().data().to_vec())
        };
        let (l1, g1) = run();
        let (l2, g2) = run();
        assert_eq!(l1.to_bits(), l2.to_bits());
        for (a, b) in g1.iter().zip(&g2) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
