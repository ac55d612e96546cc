use std::borrow::Cow;
use std::collections::HashMap;

use super::kernels::{self, ConvDims};
use super::{shape_err, ParamStore, Tensor, TensorError};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

/// Reduction axis of a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Sum down each column, `[m, n] -> [1, n]`.
    Rows,
    /// Sum along each row, `[m, n] -> [m, 1]`.
    Cols,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Concat(Vec<Var>),
    Transpose(Var),
    Reshape(Var),
    Cols(Var, usize),
    Softmax(Var),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Sum(Var, Axis),
    SumAll(Var),
    MaskMul(Var, Vec<f64>),
    Conv2d { x: Var, w: Var, b: Var },
    MaxPool(Var, Vec<usize>),
    Mean(Var),
}

#[derive(Debug)]
struct Node<'a> {
    shape: Vec<usize>,
    value: Cow<'a, [f64]>,
    op: Op,
    requires_grad: bool,
}

/// One forward pass. Nodes are appended in evaluation order, so reverse id
/// order is a valid reverse topological order. Parameters and borrowed
/// constants are referenced, not copied, for the tape's lifetime.
#[derive(Debug, Default)]
pub struct Tape<'a> {
    nodes: Vec<Node<'a>>,
    params: HashMap<String, Var>,
}

/// Gradients produced by [`Tape::backward`], indexed by [`Var`].
#[derive(Debug)]
pub struct Grads {
    grads: Vec<Option<Vec<f64>>>,
}

impl Grads {
    pub fn get(&self, v: Var) -> Option<&[f64]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }
}

fn dims2(op: &'static str, s: &[usize]) -> Result<(usize, usize), TensorError> {
    match *s {
        [m, n] => Ok((m, n)),
        _ => Err(TensorError::Invalid(format!("{op}: expected a matrix, got shape {s:?}"))),
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
}

impl<'a> Tape<'a> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, shape: Vec<usize>, value: Vec<f64>, op: Op, inputs: &[Var]) -> Var {
        debug_assert_eq!(shape.iter().product::<usize>(), value.len());
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.nodes.push(Node { shape, value: Cow::Owned(value), op, requires_grad });
        Var(self.nodes.len() - 1)
    }

    fn leaf_node(&mut self, shape: &[usize], value: Cow<'a, [f64]>, requires_grad: bool) -> Var {
        self.nodes.push(Node { shape: shape.to_vec(), value, op: Op::Leaf, requires_grad });
        Var(self.nodes.len() - 1)
    }

    /// Every relu sign and maxpool choice of the pass, in tape order. Two
    /// passes with equal patterns evaluate the same smooth piece of the
    /// function.
    pub fn branch_pattern(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for node in &self.nodes {
            match &node.op {
                Op::Relu(a) => out.extend(self.nodes[a.0].value.iter().map(|&x| (x > 0.0) as usize)),
                Op::MaxPool(_, arg) => out.extend_from_slice(arg),
                _ => {}
            }
        }
        out
    }

    /// A value gradients flow back to.
    pub fn leaf(&mut self, t: &Tensor) -> Var {
        self.leaf_node(t.shape(), Cow::Owned(t.data().to_vec()), true)
    }

    /// A value treated as fixed data.
    pub fn constant(&mut self, t: &Tensor) -> Var {
        self.leaf_node(t.shape(), Cow::Owned(t.data().to_vec()), false)
    }

    /// Fixed data referenced for the tape's lifetime.
    pub fn constant_ref(&mut self, t: &'a Tensor) -> Var {
        self.leaf_node(t.shape(), Cow::Borrowed(t.data()), false)
    }

    pub fn scalar(&mut self, x: f64) -> Var {
        self.constant(&Tensor::scalar(x))
    }

    /// Places a named parameter on the tape once; later calls return the
    /// same handle so fan-out accumulates.
    pub fn param(&mut self, store: &'a ParamStore, name: &str) -> Result<Var, TensorError> {
        if let Some(&v) = self.params.get(name) {
            return Ok(v);
        }
        let t = store.get(name)?;
        let v = self.leaf_node(t.shape(), Cow::Borrowed(t.data()), true);
        self.params.insert(name.to_string(), v);
        Ok(v)
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].shape
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    pub fn tensor(&self, v: Var) -> Tensor {
        let n = &self.nodes[v.0];
        Tensor::new(n.shape.clone(), n.value.to_vec()).expect("tape values are well-formed")
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        let (m, k) = dims2("matmul", sa)?;
        let (k2, n) = dims2("matmul", sb)?;
        if k != k2 {
            return Err(shape_err("matmul", sa, sb));
        }
        let mut out = vec![0.0; m * n];
        kernels::mm_acc(self.value(a), self.value(b), &mut out, m, k, n);
        Ok(self.push(vec![m, n], out, Op::MatMul(a, b), &[a, b]))
    }

    /// `a + b` where `b` matches `a`, is a `[1, n]` row added to every row,
    /// or holds a single element.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (sa, sb) = (self.shape(a).to_vec(), self.shape(b));
        let (va, vb) = (self.value(a), self.value(b));
        let out: Vec<f64> = if sa == sb {
            va.iter().zip(vb).map(|(x, y)| x + y).collect()
        } else if vb.len() == 1 {
            va.iter().map(|x| x + vb[0]).collect()
        } else if sa.len() == 2 && sb == [1, sa[1]] {
            va.chunks(sa[1]).flat_map(|row| row.iter().zip(vb).map(|(x, y)| x + y)).collect()
        } else {
            return Err(shape_err("add", &sa, sb));
        };
        Ok(self.push(sa, out, Op::Add(a, b), &[a, b]))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let nb = self.scale(b, -1.0);
        self.add(a, nb)
    }

    /// Elementwise product; `b` may also hold a single element.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (sa, sb) = (self.shape(a).to_vec(), self.shape(b));
        let (va, vb) = (self.value(a), self.value(b));
        let out: Vec<f64> = if sa == sb {
            va.iter().zip(vb).map(|(x, y)| x * y).collect()
        } else if vb.len() == 1 {
            va.iter().map(|x| x * vb[0]).collect()
        } else {
            return Err(shape_err("mul", &sa, sb));
        };
        Ok(self.push(sa, out, Op::Mul(a, b), &[a, b]))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let out = self.value(a).iter().map(|x| x * c).collect();
        let shape = self.shape(a).to_vec();
        self.push(shape, out, Op::Scale(a, c), &[a])
    }

    /// Concatenation of matrices along the column axis.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        let first = *parts.first().ok_or_else(|| TensorError::Invalid("concat: no inputs".into()))?;
        let (m, _) = dims2("concat", self.shape(first))?;
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let (pm, pn) = dims2("concat", self.shape(p))?;
            if pm != m {
                return Err(shape_err("concat", self.shape(first), self.shape(p)));
            }
            widths.push(pn);
        }
        let total: usize = widths.iter().sum();
        let mut out = Vec::with_capacity(m * total);
        for i in 0..m {
            for (&p, &w) in parts.iter().zip(&widths) {
                out.extend_from_slice(&self.value(p)[i * w..(i + 1) * w]);
            }
        }
        Ok(self.push(vec![m, total], out, Op::Concat(parts.to_vec()), parts))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var, TensorError> {
        let (m, n) = dims2("transpose", self.shape(a))?;
        let va = self.value(a);
        let out = (0..n * m).map(|idx| va[(idx % m) * n + idx / m]).collect();
        Ok(self.push(vec![n, m], out, Op::Transpose(a), &[a]))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var, TensorError> {
        if shape.is_empty() || shape.contains(&0) || shape.iter().product::<usize>() != self.value(a).len() {
            return Err(shape_err("reshape", self.shape(a), shape));
        }
        let out = self.value(a).to_vec();
        Ok(self.push(shape.to_vec(), out, Op::Reshape(a), &[a]))
    }

    pub fn flatten(&mut self, a: Var) -> Var {
        let n = self.value(a).len();
        self.reshape(a, &[1, n]).expect("same element count")
    }

    /// Columns `start..start + width` of a matrix.
    pub fn cols(&mut self, a: Var, start: usize, width: usize) -> Result<Var, TensorError> {
        let (m, n) = dims2("cols", self.shape(a))?;
        if width == 0 || start + width > n {
            return Err(shape_err("cols", self.shape(a), &[start, width]));
        }
        let va = self.value(a);
        let out = (0..m).flat_map(|i| va[i * n + start..i * n + start + width].iter().copied()).collect();
        Ok(self.push(vec![m, width], out, Op::Cols(a, start), &[a]))
    }

    /// Softmax along the last axis.
    pub fn row_softmax(&mut self, a: Var) -> Var {
        let n = *self.shape(a).last().expect("non-empty shape");
        let mut out = self.value(a).to_vec();
        for row in out.chunks_mut(n) {
            let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for v in row.iter_mut() {
                *v = (*v - mx).exp();
                z += *v;
            }
            row.iter_mut().for_each(|v| *v /= z);
        }
        let shape = self.shape(a).to_vec();
        self.push(shape, out, Op::Softmax(a), &[a])
    }

    /// Softmax along the last axis restricted to entries where `mask` is
    /// nonzero; the other entries are exactly 0, as are fully masked rows.
    pub fn masked_row_softmax(&mut self, a: Var, mask: &[f64]) -> Result<Var, TensorError> {
        if mask.len() != self.value(a).len() {
            return Err(shape_err("masked_row_softmax", self.shape(a), &[mask.len()]));
        }
        let n = *self.shape(a).last().expect("non-empty shape");
        let mut out = self.value(a).to_vec();
        for (row, mrow) in out.chunks_mut(n).zip(mask.chunks(n)) {
            let mx = row
                .iter()
                .zip(mrow)
                .filter(|(_, &m)| m != 0.0)
                .map(|(v, _)| *v)
                .fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for (v, &m) in row.iter_mut().zip(mrow) {
                *v = if m != 0.0 { (*v - mx).exp() } else { 0.0 };
                z += *v;
            }
            if z > 0.0 {
                row.iter_mut().for_each(|v| *v /= z);
            }
        }
        let shape = self.shape(a).to_vec();
        Ok(self.push(shape, out, Op::Softmax(a), &[a]))
    }

    fn unary(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let out = self.value(a).iter().map(|&x| f(x)).collect();
        let shape = self.shape(a).to_vec();
        self.push(shape, out, op, &[a])
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, |x| 1.0 / (1.0 + (-x).exp()), Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, f64::tanh, Op::Tanh(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, |x| x.max(0.0), Op::Relu(a))
    }

    pub fn sum(&mut self, a: Var, axis: Axis) -> Result<Var, TensorError> {
        let (m, n) = dims2("sum", self.shape(a))?;
        let va = self.value(a);
        let (shape, out) = match axis {
            Axis::Rows => {
                let mut out = vec![0.0; n];
                va.chunks(n).for_each(|row| add_into(&mut out, row));
                (vec![1, n], out)
            }
            Axis::Cols => (vec![m, 1], va.chunks(n).map(|row| row.iter().sum()).collect()),
        };
        Ok(self.push(shape, out, Op::Sum(a, axis), &[a]))
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let s = self.value(a).iter().sum();
        self.push(vec![1], vec![s], Op::SumAll(a), &[a])
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let v = self.value(a);
        let s = v.iter().sum::<f64>() / v.len() as f64;
        self.push(vec![1], vec![s], Op::Mean(a), &[a])
    }

    /// Multiplies by a fixed 0/1 mask of the same size.
    pub fn mask_mul(&mut self, a: Var, mask: &[f64]) -> Result<Var, TensorError> {
        if mask.len() != self.value(a).len() {
            return Err(shape_err("mask_mul", self.shape(a), &[mask.len()]));
        }
        let out = self.value(a).iter().zip(mask).map(|(x, m)| if *m != 0.0 { x * m } else { 0.0 }).collect();
        let shape = self.shape(a).to_vec();
        Ok(self.push(shape, out, Op::MaskMul(a, mask.to_vec()), &[a]))
    }

    /// `x: [C, H, W]`, `w: [O, C, k, k]` with odd `k`, `b: [O]`; stride 1,
    /// zero "same" padding.
    pub fn conv2d(&mut self, x: Var, w: Var, b: Var) -> Result<Var, TensorError> {
        let d = self.conv_dims(x, w, b)?;
        let out = kernels::conv2d(self.value(x), self.value(w), self.value(b), &d);
        Ok(self.push(vec![d.cout, d.h, d.w], out, Op::Conv2d { x, w, b }, &[x, w, b]))
    }

    fn conv_dims(&self, x: Var, w: Var, b: Var) -> Result<ConvDims, TensorError> {
        let (sx, sw, sb) = (self.shape(x), self.shape(w), self.shape(b));
        match (sx, sw) {
            (&[c, h, wd], &[o, c2, k, k2]) if c == c2 && k == k2 && k % 2 == 1 && sb == [o] => {
                Ok(ConvDims { cin: c, cout: o, h, w: wd, k })
            }
            _ => Err(shape_err("conv2d", sx, sw)),
        }
    }

    /// 2×2 max pooling with stride 2 over `[C, H, W]`, flooring odd extents.
    pub fn maxpool2d(&mut self, x: Var) -> Result<Var, TensorError> {
        let s = self.shape(x);
        let (c, h, w) = match *s {
            [c, h, w] if h >= 2 && w >= 2 => (c, h, w),
            _ => return Err(TensorError::Invalid(format!("maxpool2d: need [C, H>=2, W>=2], got {s:?}"))),
        };
        let (out, arg) = kernels::maxpool2(self.value(x), c, h, w);
        Ok(self.push(vec![c, h / 2, w / 2], out, Op::MaxPool(x, arg), &[x]))
    }

    /// Reverse-mode sweep from a single-element `loss`.
    pub fn backward(&self, loss: Var) -> Result<Grads, TensorError> {
        let ls = &self.nodes[loss.0];
        if ls.value.len() != 1 {
            return Err(TensorError::NonScalarLoss(ls.shape.clone()));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        if !ls.requires_grad {
            return Ok(Grads { grads });
        }
        grads[loss.0] = Some(vec![1.0]);
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            self.backprop_node(i, &g, &mut grads);
            grads[i] = Some(g);
        }
        Ok(Grads { grads })
    }

    fn backprop_node(&self, i: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let node = &self.nodes[i];
        let mut acc = |v: Var, f: &mut dyn FnMut(&mut [f64])| {
            let n = &self.nodes[v.0];
            if n.requires_grad {
                let slot = grads[v.0].get_or_insert_with(|| vec![0.0; n.value.len()]);
                f(slot);
            }
        };
        let val = |v: Var| &*self.nodes[v.0].value;
        let shp = |v: Var| self.nodes[v.0].shape.as_slice();
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (m, k) = (shp(*a)[0], shp(*a)[1]);
                let n = shp(*b)[1];
                acc(*a, &mut |ga| kernels::mm_nt_acc(g, val(*b), ga, m, n, k));
                acc(*b, &mut |gb| kernels::mm_tn_acc(val(*a), g, gb, m, k, n));
            }
            Op::Add(a, b) => {
                acc(*a, &mut |ga| add_into(ga, g));
                let (sa, sb) = (shp(*a), shp(*b));
                acc(*b, &mut |gb| {
                    if sa == sb {
                        add_into(gb, g);
                    } else if gb.len() == 1 {
                        gb[0] += g.iter().sum::<f64>();
                    } else {
                        g.chunks(sa[1]).for_each(|row| add_into(gb, row));
                    }
                });
            }
            Op::Mul(a, b) => {
                let (va, vb) = (val(*a), val(*b));
                let same = va.len() == vb.len();
                acc(*a, &mut |ga| {
                    for (idx, x) in ga.iter_mut().enumerate() {
                        *x += g[idx] * if same { vb[idx] } else { vb[0] };
                    }
                });
                acc(*b, &mut |gb| {
                    if same {
                        gb.iter_mut().zip(g.iter().zip(va)).for_each(|(x, (gi, ai))| *x += gi * ai);
                    } else {
                        gb[0] += g.iter().zip(va).map(|(gi, ai)| gi * ai).sum::<f64>();
                    }
                });
            }
            Op::Scale(a, c) => acc(*a, &mut |ga| ga.iter_mut().zip(g).for_each(|(x, gi)| *x += c * gi)),
            Op::Concat(parts) => {
                let total = node.shape[1];
                let mut off = 0;
                for &p in parts {
                    let w = shp(p)[1];
                    acc(p, &mut |gp| {
                        for (r, row) in gp.chunks_mut(w).enumerate() {
                            add_into(row, &g[r * total + off..r * total + off + w]);
                        }
                    });
                    off += w;
                }
            }
            Op::Transpose(a) => {
                let (m, n) = (shp(*a)[0], shp(*a)[1]);
                acc(*a, &mut |ga| {
                    for r in 0..m {
                        for c in 0..n {
                            ga[r * n + c] += g[c * m + r];
                        }
                    }
                });
            }
            Op::Reshape(a) => acc(*a, &mut |ga| add_into(ga, g)),
            Op::Cols(a, start) => {
                let n = shp(*a)[1];
                let w = node.shape[1];
                acc(*a, &mut |ga| {
                    for (r, grow) in g.chunks(w).enumerate() {
                        add_into(&mut ga[r * n + start..r * n + start + w], grow);
                    }
                });
            }
            Op::Softmax(a) => {
                let n = *node.shape.last().expect("non-empty");
                let y = &node.value;
                acc(*a, &mut |ga| {
                    for ((gar, yr), gr) in ga.chunks_mut(n).zip(y.chunks(n)).zip(g.chunks(n)) {
                        let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                        for j in 0..n {
                            gar[j] += yr[j] * (gr[j] - dot);
                        }
                    }
                });
            }
            Op::Sigmoid(a) => {
                let y = &node.value;
                acc(*a, &mut |ga| {
                    for j in 0..ga.len() {
                        ga[j] += g[j] * y[j] * (1.0 - y[j]);
                    }
                });
            }
            Op::Tanh(a) => {
                let y = &node.value;
                acc(*a, &mut |ga| {
                    for j in 0..ga.len() {
                        ga[j] += g[j] * (1.0 - y[j] * y[j]);
                    }
                });
            }
            Op::Relu(a) => {
                let x = val(*a);
                acc(*a, &mut |ga| {
                    for j in 0..ga.len() {
                        if x[j] > 0.0 {
                            ga[j] += g[j];
                        }
                    }
                });
            }
            Op::Sum(a, axis) => {
                let n = shp(*a)[1];
                acc(*a, &mut |ga| match axis {
                    Axis::Rows => ga.chunks_mut(n).for_each(|row| add_into(row, g)),
                    Axis::Cols => {
                        for (r, row) in ga.chunks_mut(n).enumerate() {
                            row.iter_mut().for_each(|x| *x += g[r]);
                        }
                    }
                });
            }
            Op::SumAll(a) => acc(*a, &mut |ga| ga.iter_mut().for_each(|x| *x += g[0])),
            Op::Mean(a) => {
                let c = g[0] / val(*a).len() as f64;
                acc(*a, &mut |ga| ga.iter_mut().for_each(|x| *x += c));
            }
            Op::MaskMul(a, mask) => acc(*a, &mut |ga| {
                for j in 0..ga.len() {
                    if mask[j] != 0.0 {
                        ga[j] += g[j] * mask[j];
                    }
                }
            }),
            Op::Conv2d { x, w, b } => {
                let d = self.conv_dims(*x, *w, *b).expect("validated in forward");
                let (gx, gw, gb) = kernels::conv2d_backward(val(*x), val(*w), g, &d);
                acc(*x, &mut |t| add_into(t, &gx));
                acc(*w, &mut |t| add_into(t, &gw));
                acc(*b, &mut |t| add_into(t, &gb));
            }
            Op::MaxPool(a, arg) => acc(*a, &mut |ga| {
                for (o, &src) in arg.iter().enumerate() {
                    ga[src] += g[o];
                }
            }),
        }
    }

    /// Gradients of every parameter loaded with [`Tape::param`] that the
    /// loss reached, sorted by name.
    pub fn param_grads(&self, mut grads: Grads) -> Vec<(String, Vec<f64>)> {
        let mut out: Vec<(String, Vec<f64>)> = self
            .params
            .iter()
            .filter_map(|(name, &v)| grads.grads.get_mut(v.0).and_then(Option::take).map(|g| (name.clone(), g)))
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }
}
