use super::{Tensor, TensorError};

/// Handle to a node recorded on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Input,
    Param(usize),
    MatMul(Var, Var),
    Add(Var, Var),
    Mul(Var, Var),
    Sigmoid(Var),
    Tanh(Var),
    Softmax(Var),
    Concat(Vec<Var>, usize),
    Stack(Vec<Var>),
    Gather(Var, Vec<usize>),
    MeanRows(Var),
    Nll(Var, usize),
    Slice(Var, usize),
    Sum(Var),
    Scale(Var, f64),
    Reshape(Var),
}

#[derive(Debug, Clone)]
struct Node {
    shape: Vec<usize>,
    value: Vec<f64>,
    op: Op,
}

/// Append-only record of a forward computation.
///
/// Nodes are stored in creation order, which is a topological order: every
/// operation can only reference nodes that already exist.
#[derive(Debug, Default, Clone)]
pub struct Graph {
    nodes: Vec<Node>,
}

fn mm_dims(shape: &[usize], lhs: bool) -> Option<(usize, usize)> {
    match (shape.len(), lhs) {
        (1, true) => Some((1, shape[0])),
        (1, false) => Some((shape[0], 1)),
        (2, _) => Some((shape[0], shape[1])),
        _ => None,
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable softmax of a slice, written into `out`.
pub(crate) fn softmax_into(xs: &[f64], out: &mut [f64]) {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &x) in out.iter_mut().zip(xs) {
        *o = (x - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].shape
    }

    /// Scalar value of a 1-element node.
    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value[0]
    }

    pub fn to_tensor(&self, v: Var) -> Tensor {
        let n = &self.nodes[v.0];
        Tensor {
            shape: n.shape.clone(),
            values: n.value.clone(),
            requires_grad: false,
            grad: None,
        }
    }

    fn push(&mut self, shape: Vec<usize>, value: Vec<f64>, op: Op) -> Var {
        debug_assert_eq!(shape.iter().product::<usize>(), value.len());
        self.nodes.push(Node { shape, value, op });
        Var(self.nodes.len() - 1)
    }

    /// Constant input; receives a gradient but maps to no parameter slot.
    pub fn input(&mut self, t: &Tensor) -> Var {
        self.push(t.shape.clone(), t.values.clone(), Op::Input)
    }

    /// Trainable leaf bound to parameter `slot`.
    pub fn param(&mut self, slot: usize, t: &Tensor) -> Var {
        self.push(t.shape.clone(), t.values.clone(), Op::Param(slot))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (sa, sb) = (&self.nodes[a.0].shape, &self.nodes[b.0].shape);
        let mismatch = || TensorError::ShapeMismatch {
            op: "matmul",
            lhs: sa.clone(),
            rhs: sb.clone(),
        };
        let (m, k) = mm_dims(sa, true).ok_or_else(mismatch)?;
        let (k2, n) = mm_dims(sb, false).ok_or_else(mismatch)?;
        if k != k2 {
            return Err(mismatch());
        }
        let out_shape = match (sa.len(), sb.len()) {
            (2, 2) => vec![m, n],
            (2, 1) => vec![m],
            (1, 2) => vec![n],
            _ => vec![],
        };
        let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let arow = &av[i * k..(i + 1) * k];
            let orow = &mut out[i * n..(i + 1) * n];
            for (p, &x) in arow.iter().enumerate() {
                if x == 0.0 {
                    continue;
                }
                let brow = &bv[p * n..(p + 1) * n];
                for (o, &y) in orow.iter_mut().zip(brow) {
                    *o += x * y;
                }
            }
        }
        Ok(self.push(out_shape, out, Op::MatMul(a, b)))
    }

    fn broadcast_check(&self, op: &'static str, a: Var, b: Var) -> Result<(), TensorError> {
        let (sa, sb) = (&self.nodes[a.0].shape, &self.nodes[b.0].shape);
        let ok = sa == sb || (sa.len() == 2 && sb.len() == 1 && sa[1] == sb[0]);
        if ok {
            Ok(())
        } else {
            Err(TensorError::ShapeMismatch {
                op,
                lhs: sa.clone(),
                rhs: sb.clone(),
            })
        }
    }

    fn binary(&mut self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> (Vec<usize>, Vec<f64>) {
        let (na, nb) = (&self.nodes[a.0], &self.nodes[b.0]);
        let bl = nb.value.len();
        let out = na
            .value
            .iter()
            .enumerate()
            .map(|(i, &x)| f(x, nb.value[i % bl]))
            .collect();
        (na.shape.clone(), out)
    }

    /// Element-wise sum. `b` may be a row vector broadcast over the rows of `a`.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.broadcast_check("add", a, b)?;
        let (shape, out) = self.binary(a, b, |x, y| x + y);
        Ok(self.push(shape, out, Op::Add(a, b)))
    }

    /// Element-wise product, with the same broadcasting rule as [`Graph::add`].
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.broadcast_check("mul", a, b)?;
        let (shape, out) = self.binary(a, b, |x, y| x * y);
        Ok(self.push(shape, out, Op::Mul(a, b)))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let n = &self.nodes[a.0];
        let out = n.value.iter().map(|&x| sigmoid(x)).collect();
        self.push(n.shape.clone(), out, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let n = &self.nodes[a.0];
        let out = n.value.iter().map(|x| x.tanh()).collect();
        self.push(n.shape.clone(), out, Op::Tanh(a))
    }

    /// Softmax over the last axis.
    pub fn softmax(&mut self, a: Var) -> Result<Var, TensorError> {
        let n = &self.nodes[a.0];
        let cols = *n.shape.last().ok_or_else(|| TensorError::Invalid {
            op: "softmax",
            msg: "scalar input".into(),
        })?;
        let mut out = vec![0.0; n.value.len()];
        for (src, dst) in n.value.chunks(cols).zip(out.chunks_mut(cols)) {
            softmax_into(src, dst);
        }
        Ok(self.push(n.shape.clone(), out, Op::Softmax(a)))
    }

    /// Concatenation along `axis` (0 for vectors; 0 or 1 for matrices).
    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var, TensorError> {
        let first = parts.first().ok_or_else(|| TensorError::Invalid {
            op: "concat",
            msg: "no inputs".into(),
        })?;
        let s0 = self.nodes[first.0].shape.clone();
        if axis >= s0.len() {
            return Err(TensorError::Invalid {
                op: "concat",
                msg: format!("axis {} out of range for shape {:?}", axis, s0),
            });
        }
        let mut out_shape = s0.clone();
        out_shape[axis] = 0;
        for p in parts {
            let s = &self.nodes[p.0].shape;
            let compatible = s.len() == s0.len()
                && s.iter()
                    .zip(&s0)
                    .enumerate()
                    .all(|(d, (x, y))| d == axis || x == y);
            if !compatible {
                return Err(TensorError::ShapeMismatch {
                    op: "concat",
                    lhs: s0,
                    rhs: s.clone(),
                });
            }
            out_shape[axis] += s[axis];
        }
        let mut out = Vec::with_capacity(out_shape.iter().product());
        if axis == 0 {
            for p in parts {
                out.extend_from_slice(&self.nodes[p.0].value);
            }
        } else {
            for r in 0..s0[0] {
                for p in parts {
                    let n = &self.nodes[p.0];
                    let c = n.shape[1];
                    out.extend_from_slice(&n.value[r * c..(r + 1) * c]);
                }
            }
        }
        Ok(self.push(out_shape, out, Op::Concat(parts.to_vec(), axis)))
    }

    /// Stacks equal-length vectors into the rows of a matrix.
    pub fn stack(&mut self, rows: &[Var]) -> Result<Var, TensorError> {
        let first = rows.first().ok_or_else(|| TensorError::Invalid {
            op: "stack",
            msg: "no inputs".into(),
        })?;
        let s0 = self.nodes[first.0].shape.clone();
        if s0.len() != 1 {
            return Err(TensorError::Invalid {
                op: "stack",
                msg: format!("expected vectors, got shape {:?}", s0),
            });
        }
        let mut out = Vec::with_capacity(rows.len() * s0[0]);
        for r in rows {
            let n = &self.nodes[r.0];
            if n.shape != s0 {
                return Err(TensorError::ShapeMismatch {
                    op: "stack",
                    lhs: s0,
                    rhs: n.shape.clone(),
                });
            }
            out.extend_from_slice(&n.value);
        }
        Ok(self.push(vec![rows.len(), s0[0]], out, Op::Stack(rows.to_vec())))
    }

    /// Row gather (embedding lookup): output row `i` is row `ids[i]` of `table`.
    pub fn gather(&mut self, table: Var, ids: &[usize]) -> Result<Var, TensorError> {
        let n = &self.nodes[table.0];
        if n.shape.len() != 2 {
            return Err(TensorError::Invalid {
                op: "gather",
                msg: format!("table must be a matrix, got shape {:?}", n.shape),
            });
        }
        if ids.is_empty() {
            return Err(TensorError::Invalid {
                op: "gather",
                msg: "empty index list".into(),
            });
        }
        let (rows, cols) = (n.shape[0], n.shape[1]);
        let mut out = Vec::with_capacity(ids.len() * cols);
        for (position, &index) in ids.iter().enumerate() {
            if index >= rows {
                return Err(TensorError::IndexOutOfRange {
                    op: "gather",
                    index,
                    position,
                    bound: rows,
                });
            }
            out.extend_from_slice(&n.value[index * cols..(index + 1) * cols]);
        }
        Ok(self.push(vec![ids.len(), cols], out, Op::Gather(table, ids.to_vec())))
    }

    /// Row `r` of a matrix as a vector.
    pub fn row(&mut self, m: Var, r: usize) -> Result<Var, TensorError> {
        let g = self.gather(m, &[r])?;
        let cols = self.nodes[g.0].shape[1];
        self.reshape(g, &[cols])
    }

    /// Mean over the first (sequence) axis of a matrix.
    pub fn mean_rows(&mut self, a: Var) -> Result<Var, TensorError> {
        let n = &self.nodes[a.0];
        if n.shape.len() != 2 {
            return Err(TensorError::Invalid {
                op: "mean_rows",
                msg: format!("expected a matrix, got shape {:?}", n.shape),
            });
        }
        let (rows, cols) = (n.shape[0], n.shape[1]);
        let mut out = vec![0.0; cols];
        // fixed left-to-right summation order
        for r in 0..rows {
            for (o, x) in out.iter_mut().zip(&n.value[r * cols..(r + 1) * cols]) {
                *o += x;
            }
        }
        let inv = 1.0 / rows as f64;
        out.iter_mut().for_each(|o| *o *= inv);
        Ok(self.push(vec![cols], out, Op::MeanRows(a)))
    }

    /// `-log softmax(logits)[target]` for a logit vector.
    pub fn nll(&mut self, logits: Var, target: usize) -> Result<Var, TensorError> {
        let n = &self.nodes[logits.0];
        if n.shape.len() != 1 {
            return Err(TensorError::Invalid {
                op: "nll",
                msg: format!("expected a logit vector, got shape {:?}", n.shape),
            });
        }
        if target >= n.shape[0] {
            return Err(TensorError::IndexOutOfRange {
                op: "nll",
                index: target,
                position: 0,
                bound: n.shape[0],
            });
        }
        let loss = log_sum_exp(&n.value) - n.value[target];
        Ok(self.push(vec![], vec![loss], Op::Nll(logits, target)))
    }

    /// Contiguous sub-vector `[start, start + len)`.
    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Result<Var, TensorError> {
        let n = &self.nodes[a.0];
        if n.shape.len() != 1 || len == 0 || start + len > n.shape[0] {
            return Err(TensorError::Invalid {
                op: "slice",
                msg: format!("[{}, {}) of shape {:?}", start, start + len, n.shape),
            });
        }
        let out = n.value[start..start + len].to_vec();
        Ok(self.push(vec![len], out, Op::Slice(a, start)))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.nodes[a.0].value.iter().sum();
        self.push(vec![], vec![s], Op::Sum(a))
    }

    /// Sum of several scalars, accumulated left to right.
    pub fn sum_scalars(&mut self, xs: &[Var]) -> Result<Var, TensorError> {
        let mut acc = *xs.first().ok_or_else(|| TensorError::Invalid {
            op: "sum_scalars",
            msg: "no inputs".into(),
        })?;
        for &x in &xs[1..] {
            acc = self.add(acc, x)?;
        }
        Ok(acc)
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Var {
        let n = &self.nodes[a.0];
        let out = n.value.iter().map(|x| x * k).collect();
        self.push(n.shape.clone(), out, Op::Scale(a, k))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var, TensorError> {
        let n = &self.nodes[a.0];
        if shape.iter().product::<usize>() != n.value.len() {
            return Err(TensorError::ShapeMismatch {
                op: "reshape",
                lhs: n.shape.clone(),
                rhs: shape.to_vec(),
            });
        }
        let value = n.value.clone();
        Ok(self.push(shape.to_vec(), value, Op::Reshape(a)))
    }

    /// Reverse pass from a scalar `loss`.
    ///
    /// Nodes without a path to `loss` get zero gradient.
    pub fn backward(&self, loss: Var) -> Result<Gradients, TensorError> {
        let ln = &self.nodes[loss.0];
        if ln.value.len() != 1 || !ln.shape.is_empty() {
            return Err(TensorError::NonScalarLoss(ln.shape.clone()));
        }
        let mut grads: Vec<Vec<f64>> = vec![Vec::new(); loss.0 + 1];
        grads[loss.0] = vec![1.0];
        for i in (0..=loss.0).rev() {
            if grads[i].is_empty() {
                continue;
            }
            let g = std::mem::take(&mut grads[i]);
            self.propagate(i, &g, &mut grads);
            grads[i] = g;
        }
        let mut params = Vec::new();
        for (i, node) in self.nodes.iter().enumerate().take(loss.0 + 1) {
            if let Op::Param(slot) = node.op {
                let g = if grads[i].is_empty() {
                    vec![0.0; node.value.len()]
                } else {
                    grads[i].clone()
                };
                params.push((slot, g));
            }
        }
        Ok(Gradients { nodes: grads, params })
    }

    fn propagate(&self, i: usize, g: &[f64], grads: &mut [Vec<f64>]) {
        fn acc(grads: &mut [Vec<f64>], v: Var, len: usize) -> &mut Vec<f64> {
            let buf = &mut grads[v.0];
            if buf.is_empty() {
                *buf = vec![0.0; len];
            }
            buf
        }
        let node = &self.nodes[i];
        match &node.op {
            Op::Input | Op::Param(_) => {}
            Op::MatMul(a, b) => {
                let (na, nb) = (&self.nodes[a.0], &self.nodes[b.0]);
                let (m, k) = mm_dims(&na.shape, true).unwrap();
                let (_, n) = mm_dims(&nb.shape, false).unwrap();
                {
                    // dA = dC · Bᵀ
                    let ga = acc(grads, *a, m * k);
                    for r in 0..m {
                        let grow = &g[r * n..(r + 1) * n];
                        for p in 0..k {
                            let brow = &nb.value[p * n..(p + 1) * n];
                            let mut s = 0.0;
                            for (x, y) in grow.iter().zip(brow) {
                                s += x * y;
                            }
                            ga[r * k + p] += s;
                        }
                    }
                }
                // dB = Aᵀ · dC
                let gb = acc(grads, *b, k * n);
                for r in 0..m {
                    let grow = &g[r * n..(r + 1) * n];
                    for p in 0..k {
                        let x = na.value[r * k + p];
                        if x == 0.0 {
                            continue;
                        }
                        for (o, y) in gb[p * n..(p + 1) * n].iter_mut().zip(grow) {
                            *o += x * y;
                        }
                    }
                }
            }
            Op::Add(a, b) => {
                let la = self.nodes[a.0].value.len();
                let lb = self.nodes[b.0].value.len();
                for (o, x) in acc(grads, *a, la).iter_mut().zip(g) {
                    *o += x;
                }
                let gb = acc(grads, *b, lb);
                for (j, x) in g.iter().enumerate() {
                    gb[j % lb] += x;
                }
            }
            Op::Mul(a, b) => {
                let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                let lb = vb.len();
                {
                    let ga = acc(grads, *a, va.len());
                    for (j, x) in g.iter().enumerate() {
                        ga[j] += x * vb[j % lb];
                    }
                }
                let gb = acc(grads, *b, lb);
                for (j, x) in g.iter().enumerate() {
                    gb[j % lb] += x * va[j];
                }
            }
            Op::Sigmoid(a) => {
                let ga = acc(grads, *a, g.len());
                for ((o, x), y) in ga.iter_mut().zip(g).zip(&node.value) {
                    *o += x * y * (1.0 - y);
                }
            }
            Op::Tanh(a) => {
                let ga = acc(grads, *a, g.len());
                for ((o, x), y) in ga.iter_mut().zip(g).zip(&node.value) {
                    *o += x * (1.0 - y * y);
                }
            }
            Op::Softmax(a) => {
                let cols = *node.shape.last().unwrap();
                let ga = acc(grads, *a, g.len());
                for ((gs, ys), os) in g
                    .chunks(cols)
                    .zip(node.value.chunks(cols))
                    .zip(ga.chunks_mut(cols))
                {
                    let dot: f64 = gs.iter().zip(ys).map(|(x, y)| x * y).sum();
                    for ((o, x), y) in os.iter_mut().zip(gs).zip(ys) {
                        *o += y * (x - dot);
                    }
                }
            }
            Op::Concat(parts, axis) => {
                if *axis == 0 {
                    let mut off = 0;
                    for p in parts {
                        let l = self.nodes[p.0].value.len();
                        for (o, x) in acc(grads, *p, l).iter_mut().zip(&g[off..off + l]) {
                            *o += x;
                        }
                        off += l;
                    }
                } else {
                    let total = node.shape[1];
                    let rows = node.shape[0];
                    let mut col = 0;
                    for p in parts {
                        let c = self.nodes[p.0].shape[1];
                        let gp = acc(grads, *p, rows * c);
                        for r in 0..rows {
                            for j in 0..c {
                                gp[r * c + j] += g[r * total + col + j];
                            }
                        }
                        col += c;
                    }
                }
            }
            Op::Stack(rows) => {
                let c = node.shape[1];
                for (r, p) in rows.iter().enumerate() {
                    for (o, x) in acc(grads, *p, c).iter_mut().zip(&g[r * c..(r + 1) * c]) {
                        *o += x;
                    }
                }
            }
            Op::Gather(table, ids) => {
                let c = node.shape[1];
                let len = self.nodes[table.0].value.len();
                let gt = acc(grads, *table, len);
                for (r, &id) in ids.iter().enumerate() {
                    for (o, x) in gt[id * c..(id + 1) * c].iter_mut().zip(&g[r * c..(r + 1) * c]) {
                        *o += x;
                    }
                }
            }
            Op::MeanRows(a) => {
                let na = &self.nodes[a.0];
                let (rows, cols) = (na.shape[0], na.shape[1]);
                let inv = 1.0 / rows as f64;
                let ga = acc(grads, *a, rows * cols);
                for r in 0..rows {
                    for (o, x) in ga[r * cols..(r + 1) * cols].iter_mut().zip(g) {
                        *o += x * inv;
                    }
                }
            }
            Op::Nll(logits, target) => {
                let z = &self.nodes[logits.0].value;
                let mut p = vec![0.0; z.len()];
                softmax_into(z, &mut p);
                let gl = acc(grads, *logits, z.len());
                for (j, (o, pj)) in gl.iter_mut().zip(&p).enumerate() {
                    let onehot = if j == *target { 1.0 } else { 0.0 };
                    *o += g[0] * (pj - onehot);
                }
            }
            Op::Slice(a, start) => {
                let l = self.nodes[a.0].value.len();
                let ga = acc(grads, *a, l);
                for (o, x) in ga[*start..*start + g.len()].iter_mut().zip(g) {
                    *o += x;
                }
            }
            Op::Sum(a) => {
                let l = self.nodes[a.0].value.len();
                acc(grads, *a, l).iter_mut().for_each(|o| *o += g[0]);
            }
            Op::Scale(a, k) => {
                for (o, x) in acc(grads, *a, g.len()).iter_mut().zip(g) {
                    *o += x * k;
                }
            }
            Op::Reshape(a) => {
                for (o, x) in acc(grads, *a, g.len()).iter_mut().zip(g) {
                    *o += x;
                }
            }
        }
    }
}

/// Result of [`Graph::backward`].
#[derive(Debug, Clone)]
pub struct Gradients {
    nodes: Vec<Vec<f64>>,
    params: Vec<(usize, Vec<f64>)>,
}

impl Gradients {
    /// Gradient of the loss w.r.t. any recorded node (zeros if unreachable).
    pub fn wrt(&self, v: Var, graph: &Graph) -> Vec<f64> {
        match self.nodes.get(v.0) {
            Some(g) if !g.is_empty() => g.clone(),
            _ => vec![0.0; graph.value(v).len()],
        }
    }

    /// `(slot, gradient)` for every parameter leaf, in recording order.
    ///
    /// A slot bound more than once appears more than once.
    pub fn params(&self) -> &[(usize, Vec<f64>)] {
        &self.params
    }

    /// Adds each parameter gradient into `tensors[slot].grad`.
    pub fn accumulate_into(&self, tensors: &mut [&mut Tensor]) {
        for (slot, g) in &self.params {
            if let Some(t) = tensors.get_mut(*slot) {
                if t.requires_grad {
                    t.accumulate_grad(g);
                }
            }
        }
    }
}
