//! Minimal reverse-mode automatic differentiation over f64 ndarrays.
//!
//! A [`Tape`] records the forward computation as a flat node list;
//! [`Tape::backward`] walks it in reverse and accumulates gradients for
//! every parameter leaf. One tape serves one forward pass, so concurrent
//! instances can run on worker threads and merge parameter gradients in a
//! deterministic order afterwards.
//!
//! Matrix products in [`Linear`](crate::layers::Linear) layers go through
//! [`matmul_rowmajor`], which accumulates strictly in ascending inner-index
//! order. Appending zero-weight input columns therefore reproduces the
//! shorter product bit for bit, which the decoder-variant equivalence
//! checks rely on.

use std::collections::HashMap;
use std::sync::Arc;

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, Array3, ArrayD, ArrayView2, Axis, Ix1, Ix2, Ix3};

/// Index of a parameter tensor in a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub usize);

/// Flat registry of named parameter tensors.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    tensors: Vec<ArrayD<f64>>,
    names: Vec<String>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, tensor: ArrayD<f64>) -> ParamId {
        self.tensors.push(tensor);
        self.names.push(name.into());
        ParamId(self.tensors.len() - 1)
    }

    pub fn get(&self, id: ParamId) -> &ArrayD<f64> {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut ArrayD<f64> {
        &mut self.tensors[id.0]
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &str, &ArrayD<f64>)> {
        self.tensors
            .iter()
            .enumerate()
            .map(|(i, t)| (ParamId(i), self.names[i].as_str(), t))
    }

    pub fn total_elements(&self) -> usize {
        self.tensors.iter().map(|t| t.len()).sum()
    }
}

/// Per-parameter gradient accumulator aligned with a [`ParamStore`].
#[derive(Debug, Clone)]
pub struct Grads {
    pub slots: Vec<Option<ArrayD<f64>>>,
}

impl Grads {
    pub fn zeros(n_params: usize) -> Self {
        Self { slots: vec![None; n_params] }
    }

    pub fn get(&self, id: ParamId) -> Option<&ArrayD<f64>> {
        self.slots[id.0].as_ref()
    }

    /// Elementwise sum; used to merge per-instance gradients in batch order.
    pub fn merge(&mut self, other: &Grads) {
        for (dst, src) in self.slots.iter_mut().zip(&other.slots) {
            match (dst.as_mut(), src) {
                (_, None) => {}
                (Some(d), Some(s)) => *d += s,
                (None, Some(s)) => *dst = Some(s.clone()),
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for slot in self.slots.iter_mut().flatten() {
            slot.mapv_inplace(|v| v * factor);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

enum ColSrc {
    Var(Var),
    Const(Array2<f64>),
}

enum Op {
    Const,
    Param(ParamId),
    Add(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    /// Deterministic row-major matmul: (m,k) x (k,n).
    MatMul(Var, Var),
    /// (m,n) plus a length-n row vector broadcast over rows.
    AddRowVec(Var, Var),
    Conv2d {
        x: Var,
        w: Var,
        b: Var,
        stride: usize,
        pad: usize,
        /// im2col patch matrix (K, oh*ow), kept for the backward pass.
        cols: Array2<f64>,
    },
    /// Select rows of a (m,k) matrix; gradient scatter-adds.
    GatherRows { x: Var, idx: Arc<Vec<usize>> },
    /// (c,h,w) -> (h*w, c) so spatial positions become rows.
    ChannelsToRows(Var),
    /// Column-concatenate matrices with shared row count.
    ConcatCols(Vec<ColSrc>),
    /// Repeat a length-k vector as rows of an (n,k) matrix.
    BroadcastRow { x: Var, rows: usize },
    /// (c,h,w) -> (c) spatial mean.
    GlobalMeanPool(Var),
    /// x: (g*n, 1) candidate scalars, weights: (n, g); out (n).
    WeightedRowGroups { x: Var, weights: Arc<Array2<f64>> },
    /// Mean squared difference against a constant target; scalar output.
    MseConst { x: Var, target: Arc<ArrayD<f64>> },
    /// Mean squared difference between two variables; scalar output.
    MseVar(Var, Var),
}

struct Node {
    value: ArrayD<f64>,
    op: Op,
}

/// Row-major matrix product accumulating in ascending k order per output
/// element. Slower than a blocked GEMM but bit-reproducible across widths.
pub fn matmul_rowmajor(a: &ArrayView2<f64>, b: &ArrayView2<f64>) -> Array2<f64> {
    let (m, k) = a.dim();
    let (k2, n) = b.dim();
    assert_eq!(k, k2, "matmul inner dims {k} vs {k2}");
    let mut out = Array2::<f64>::zeros((m, n));
    let b_std = b.as_standard_layout();
    for i in 0..m {
        let mut orow = out.row_mut(i);
        let orow = orow.as_slice_mut().unwrap();
        for kk in 0..k {
            let aik = a[[i, kk]];
            let brow = b_std.row(kk);
            let brow = brow.as_slice().unwrap();
            for j in 0..n {
                orow[j] += aik * brow[j];
            }
        }
    }
    out
}

fn as2(v: &ArrayD<f64>) -> ArrayView2<'_, f64> {
    v.view().into_dimensionality::<Ix2>().expect("expected 2-d value")
}

pub struct Tape<'s> {
    pub store: &'s ParamStore,
    nodes: Vec<Node>,
    param_leaf: HashMap<usize, Var>,
}

impl<'s> Tape<'s> {
    pub fn new(store: &'s ParamStore) -> Self {
        Self { store, nodes: Vec::new(), param_leaf: HashMap::new() }
    }

    fn push(&mut self, value: ArrayD<f64>, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &ArrayD<f64> {
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> f64 {
        let val = self.value(v);
        debug_assert_eq!(val.len(), 1, "scalar() on non-scalar node");
        *val.iter().next().unwrap()
    }

    pub fn constant(&mut self, value: ArrayD<f64>) -> Var {
        self.push(value, Op::Const)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(&v) = self.param_leaf.get(&id.0) {
            return v;
        }
        let v = self.push(self.store.get(id).clone(), Op::Param(id));
        self.param_leaf.insert(id.0, v);
        v
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let value = &self.nodes[a.0].value + &self.nodes[b.0].value;
        self.push(value, Op::Add(a, b))
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Var {
        let value = self.nodes[x.0].value.mapv(|v| v * factor);
        self.push(value, Op::Scale(x, factor))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let value = self.nodes[x.0].value.mapv(|v| v.max(0.0));
        self.push(value, Op::Relu(x))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let value = matmul_rowmajor(&as2(&self.nodes[a.0].value), &as2(&self.nodes[b.0].value));
        self.push(value.into_dyn(), Op::MatMul(a, b))
    }

    pub fn add_row_vec(&mut self, x: Var, v: Var) -> Var {
        let m = as2(&self.nodes[x.0].value).to_owned();
        let row = self.nodes[v.0]
            .value
            .view()
            .into_dimensionality::<Ix1>()
            .expect("bias must be 1-d");
        let mut out = m;
        for mut r in out.rows_mut() {
            r += &row;
        }
        self.push(out.into_dyn(), Op::AddRowVec(x, v))
    }

    /// 3x3-style convolution over (c,h,w) with zero padding.
    pub fn conv2d(&mut self, x: Var, w: ParamId, b: ParamId, stride: usize, pad: usize) -> Var {
        let wv = self.param(w);
        let bv = self.param(b);
        let xval = self.nodes[x.0]
            .value
            .view()
            .into_dimensionality::<Ix3>()
            .expect("conv input must be (c,h,w)");
        let wval = self.nodes[wv.0].value.view();
        let wdims = wval.shape().to_vec();
        let (c_out, c_in, kh, kw) = (wdims[0], wdims[1], wdims[2], wdims[3]);
        assert_eq!(c_in, xval.dim().0, "conv channel mismatch");
        let (_, h, w_in) = xval.dim();
        let oh = (h + 2 * pad - kh) / stride + 1;
        let ow = (w_in + 2 * pad - kw) / stride + 1;
        let cols = im2col(&xval, kh, kw, stride, pad, oh, ow);
        let w_mat = wval.into_shape_with_order((c_out, c_in * kh * kw)).unwrap();
        let mut y = Array2::<f64>::zeros((c_out, oh * ow));
        general_mat_mul(1.0, &w_mat, &cols.view(), 0.0, &mut y);
        let bias = self.nodes[bv.0]
            .value
            .view()
            .into_dimensionality::<Ix1>()
            .unwrap();
        for (mut row, &bc) in y.rows_mut().into_iter().zip(bias.iter()) {
            row.mapv_inplace(|v| v + bc);
        }
        let value = y.into_shape_with_order((c_out, oh, ow)).unwrap().into_dyn();
        self.push(value, Op::Conv2d { x, w: wv, b: bv, stride, pad, cols })
    }

    pub fn channels_to_rows(&mut self, x: Var) -> Var {
        let v = self.nodes[x.0]
            .value
            .view()
            .into_dimensionality::<Ix3>()
            .expect("channels_to_rows wants (c,h,w)");
        let (c, h, w) = v.dim();
        let mut out = Array2::<f64>::zeros((h * w, c));
        for ci in 0..c {
            let plane = v.index_axis(Axis(0), ci);
            let flat = plane.into_shape_with_order(h * w).unwrap();
            for (pos, &val) in flat.iter().enumerate() {
                out[[pos, ci]] = val;
            }
        }
        self.push(out.into_dyn(), Op::ChannelsToRows(x))
    }

    pub fn gather_rows(&mut self, x: Var, idx: Arc<Vec<usize>>) -> Var {
        let src = as2(&self.nodes[x.0].value);
        let k = src.dim().1;
        let mut out = Array2::<f64>::zeros((idx.len(), k));
        for (r, &i) in idx.iter().enumerate() {
            out.row_mut(r).assign(&src.row(i));
        }
        self.push(out.into_dyn(), Op::GatherRows { x, idx })
    }

    pub fn concat_cols(&mut self, parts: Vec<ColPart>) -> Var {
        let rows = match parts.first().expect("concat of nothing") {
            ColPart::Var(v) => as2(&self.nodes[v.0].value).dim().0,
            ColPart::Const(c) => c.dim().0,
        };
        let total: usize = parts
            .iter()
            .map(|p| match p {
                ColPart::Var(v) => as2(&self.nodes[v.0].value).dim().1,
                ColPart::Const(c) => c.dim().1,
            })
            .sum();
        let mut out = Array2::<f64>::zeros((rows, total));
        let mut srcs = Vec::with_capacity(parts.len());
        let mut col = 0;
        for p in parts {
            match p {
                ColPart::Var(v) => {
                    let m = as2(&self.nodes[v.0].value);
                    assert_eq!(m.dim().0, rows, "concat row mismatch");
                    out.slice_mut(ndarray::s![.., col..col + m.dim().1]).assign(&m);
                    col += m.dim().1;
                    srcs.push(ColSrc::Var(v));
                }
                ColPart::Const(c) => {
                    assert_eq!(c.dim().0, rows, "concat row mismatch");
                    out.slice_mut(ndarray::s![.., col..col + c.dim().1]).assign(&c);
                    col += c.dim().1;
                    srcs.push(ColSrc::Const(c));
                }
            }
        }
        self.push(out.into_dyn(), Op::ConcatCols(srcs))
    }

    pub fn broadcast_row(&mut self, x: Var, rows: usize) -> Var {
        let v = self.nodes[x.0]
            .value
            .view()
            .into_dimensionality::<Ix1>()
            .expect("broadcast_row wants a vector");
        let mut out = Array2::<f64>::zeros((rows, v.len()));
        for mut r in out.rows_mut() {
            r.assign(&v);
        }
        self.push(out.into_dyn(), Op::BroadcastRow { x, rows })
    }

    pub fn global_mean_pool(&mut self, x: Var) -> Var {
        let v = self.nodes[x.0]
            .value
            .view()
            .into_dimensionality::<Ix3>()
            .expect("pool input must be (c,h,w)");
        let (c, h, w) = v.dim();
        let mut out = Array1::<f64>::zeros(c);
        for ci in 0..c {
            out[ci] = v.index_axis(Axis(0), ci).sum() / (h * w) as f64;
        }
        self.push(out.into_dyn(), Op::GlobalMeanPool(x))
    }

    pub fn weighted_row_groups(&mut self, x: Var, weights: Arc<Array2<f64>>) -> Var {
        let v = as2(&self.nodes[x.0].value);
        let (n, g) = weights.dim();
        assert_eq!(v.dim(), (n * g, 1), "candidate matrix shape mismatch");
        let mut out = Array1::<f64>::zeros(n);
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..g {
                acc += weights[[i, j]] * v[[i * g + j, 0]];
            }
            out[i] = acc;
        }
        self.push(out.into_dyn(), Op::WeightedRowGroups { x, weights })
    }

    pub fn mse_const(&mut self, x: Var, target: Arc<ArrayD<f64>>) -> Var {
        let v = &self.nodes[x.0].value;
        assert_eq!(v.shape(), target.shape(), "mse target shape mismatch");
        let n = v.len() as f64;
        let mse = v
            .iter()
            .zip(target.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / n;
        self.push(ndarray::arr0(mse).into_dyn(), Op::MseConst { x, target })
    }

    pub fn mse_var(&mut self, a: Var, b: Var) -> Var {
        let av = &self.nodes[a.0].value;
        let bv = &self.nodes[b.0].value;
        assert_eq!(av.shape(), bv.shape(), "mse operand shape mismatch");
        let n = av.len() as f64;
        let mse = av
            .iter()
            .zip(bv.iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            / n;
        self.push(ndarray::arr0(mse).into_dyn(), Op::MseVar(a, b))
    }

    /// Reverse pass from a scalar root; returns parameter gradients.
    pub fn backward(&self, root: Var) -> Grads {
        assert_eq!(self.nodes[root.0].value.len(), 1, "backward root must be scalar");
        let mut node_grads: Vec<Option<ArrayD<f64>>> = vec![None; self.nodes.len()];
        node_grads[root.0] = Some(ndarray::arr0(1.0).into_dyn());
        let mut param_grads = Grads::zeros(self.store.len());

        for i in (0..=root.0).rev() {
            let Some(gy) = node_grads[i].take() else { continue };
            match &self.nodes[i].op {
                Op::Const => {}
                Op::Param(id) => match &mut param_grads.slots[id.0] {
                    Some(slot) => *slot += &gy,
                    slot @ None => *slot = Some(gy.clone()),
                },
                Op::Add(a, b) => {
                    accumulate(&mut node_grads, *a, gy.clone());
                    accumulate(&mut node_grads, *b, gy);
                }
                Op::Scale(x, f) => {
                    accumulate(&mut node_grads, *x, gy.mapv(|v| v * f));
                }
                Op::Relu(x) => {
                    let mask = &self.nodes[i].value;
                    let mut gx = gy;
                    gx.zip_mut_with(mask, |g, &y| {
                        if y <= 0.0 {
                            *g = 0.0;
                        }
                    });
                    accumulate(&mut node_grads, *x, gx);
                }
                Op::MatMul(a, b) => {
                    let gy2 = as2(&gy);
                    let av = as2(&self.nodes[a.0].value);
                    let bv = as2(&self.nodes[b.0].value);
                    let mut ga = Array2::<f64>::zeros(av.dim());
                    general_mat_mul(1.0, &gy2, &bv.t(), 0.0, &mut ga);
                    let mut gb = Array2::<f64>::zeros(bv.dim());
                    general_mat_mul(1.0, &av.t(), &gy2, 0.0, &mut gb);
                    accumulate(&mut node_grads, *a, ga.into_dyn());
                    accumulate(&mut node_grads, *b, gb.into_dyn());
                }
                Op::AddRowVec(x, v) => {
                    let gy2 = as2(&gy);
                    let gv = gy2.sum_axis(Axis(0));
                    accumulate(&mut node_grads, *x, gy.clone());
                    accumulate(&mut node_grads, *v, gv.into_dyn());
                }
                Op::Conv2d { x, w, b, stride, pad, cols } => {
                    let gy3 = gy.view().into_dimensionality::<Ix3>().unwrap();
                    let (c_out, oh, ow) = gy3.dim();
                    let gy_mat = gy3.into_shape_with_order((c_out, oh * ow)).unwrap();
                    let wdims = self.nodes[w.0].value.shape().to_vec();
                    let (c_in, kh, kw) = (wdims[1], wdims[2], wdims[3]);
                    // dW = dY . colsT
                    let mut gw = Array2::<f64>::zeros((c_out, c_in * kh * kw));
                    general_mat_mul(1.0, &gy_mat, &cols.t(), 0.0, &mut gw);
                    let gw = gw
                        .into_shape_with_order((c_out, c_in, kh, kw))
                        .unwrap()
                        .into_dyn();
                    // db = row sums
                    let gb = gy_mat.sum_axis(Axis(1)).into_dyn();
                    // dX via col2im of wT . dY
                    let w_mat = self.nodes[w.0]
                        .value
                        .view()
                        .into_shape_with_order((c_out, c_in * kh * kw))
                        .unwrap();
                    let mut gcols = Array2::<f64>::zeros(cols.dim());
                    general_mat_mul(1.0, &w_mat.t(), &gy_mat.view(), 0.0, &mut gcols);
                    let xdim = self.nodes[x.0]
                        .value
                        .view()
                        .into_dimensionality::<Ix3>()
                        .unwrap()
                        .dim();
                    let gx = col2im(&gcols, xdim, kh, kw, *stride, *pad, oh, ow);
                    accumulate(&mut node_grads, *x, gx.into_dyn());
                    accumulate(&mut node_grads, *w, gw);
                    accumulate(&mut node_grads, *b, gb);
                }
                Op::GatherRows { x, idx } => {
                    let src_dim = as2(&self.nodes[x.0].value).dim();
                    let gy2 = as2(&gy);
                    let mut gx = Array2::<f64>::zeros(src_dim);
                    for (r, &i_src) in idx.iter().enumerate() {
                        let mut dst = gx.row_mut(i_src);
                        dst += &gy2.row(r);
                    }
                    accumulate(&mut node_grads, *x, gx.into_dyn());
                }
                Op::ChannelsToRows(x) => {
                    let (c, h, w) = self.nodes[x.0]
                        .value
                        .view()
                        .into_dimensionality::<Ix3>()
                        .unwrap()
                        .dim();
                    let gy2 = as2(&gy);
                    let mut gx = Array3::<f64>::zeros((c, h, w));
                    for ci in 0..c {
                        let mut plane = gx.index_axis_mut(Axis(0), ci);
                        let mut flat = plane.view_mut().into_shape_with_order(h * w).unwrap();
                        for pos in 0..h * w {
                            flat[pos] = gy2[[pos, ci]];
                        }
                    }
                    accumulate(&mut node_grads, *x, gx.into_dyn());
                }
                Op::ConcatCols(parts) => {
                    let gy2 = as2(&gy);
                    let mut col = 0;
                    for p in parts {
                        match p {
                            ColSrc::Var(v) => {
                                let w = as2(&self.nodes[v.0].value).dim().1;
                                let slice = gy2.slice(ndarray::s![.., col..col + w]).to_owned();
                                accumulate(&mut node_grads, *v, slice.into_dyn());
                                col += w;
                            }
                            ColSrc::Const(c) => col += c.dim().1,
                        }
                    }
                }
                Op::BroadcastRow { x, .. } => {
                    let gy2 = as2(&gy);
                    let gx = gy2.sum_axis(Axis(0));
                    accumulate(&mut node_grads, *x, gx.into_dyn());
                }
                Op::GlobalMeanPool(x) => {
                    let xv = self.nodes[x.0]
                        .value
                        .view()
                        .into_dimensionality::<Ix3>()
                        .unwrap();
                    let (c, h, w) = xv.dim();
                    let gy1 = gy.view().into_dimensionality::<Ix1>().unwrap();
                    let inv = 1.0 / (h * w) as f64;
                    let mut gx = Array3::<f64>::zeros((c, h, w));
                    for ci in 0..c {
                        gx.index_axis_mut(Axis(0), ci).fill(gy1[ci] * inv);
                    }
                    accumulate(&mut node_grads, *x, gx.into_dyn());
                }
                Op::WeightedRowGroups { x, weights } => {
                    let (n, g) = weights.dim();
                    let gy1 = gy.view().into_dimensionality::<Ix1>().unwrap();
                    let mut gx = Array2::<f64>::zeros((n * g, 1));
                    for i in 0..n {
                        for j in 0..g {
                            gx[[i * g + j, 0]] = weights[[i, j]] * gy1[i];
                        }
                    }
                    accumulate(&mut node_grads, *x, gx.into_dyn());
                }
                Op::MseConst { x, target } => {
                    let g = gy.iter().next().copied().unwrap();
                    let xv = &self.nodes[x.0].value;
                    let n = xv.len() as f64;
                    let mut gx = xv.clone();
                    gx.zip_mut_with(target, |v, &t| *v = g * 2.0 * (*v - t) / n);
                    accumulate(&mut node_grads, *x, gx);
                }
                Op::MseVar(a, b) => {
                    let g = gy.iter().next().copied().unwrap();
                    let av = &self.nodes[a.0].value;
                    let bv = &self.nodes[b.0].value;
                    let n = av.len() as f64;
                    let mut ga = av.clone();
                    ga.zip_mut_with(bv, |v, &t| *v = g * 2.0 * (*v - t) / n);
                    let gb = ga.mapv(|v| -v);
                    accumulate(&mut node_grads, *a, ga);
                    accumulate(&mut node_grads, *b, gb);
                }
            }
        }
        param_grads
    }
}

/// Column parts fed to [`Tape::concat_cols`].
pub enum ColPart {
    Var(Var),
    Const(Array2<f64>),
}

fn accumulate(grads: &mut [Option<ArrayD<f64>>], v: Var, g: ArrayD<f64>) {
    match &mut grads[v.0] {
        Some(slot) => *slot += &g,
        slot @ None => *slot = Some(g),
    }
}

/// Patch matrix (c_in*kh*kw, oh*ow) with zero padding.
fn im2col(
    x: &ndarray::ArrayView3<f64>,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
    oh: usize,
    ow: usize,
) -> Array2<f64> {
    let (c_in, h, w) = x.dim();
    let mut cols = Array2::<f64>::zeros((c_in * kh * kw, oh * ow));
    for ci in 0..c_in {
        for dy in 0..kh {
            for dx in 0..kw {
                let row = (ci * kh + dy) * kw + dx;
                let mut dst = cols.row_mut(row);
                for oy in 0..oh {
                    let iy = (oy * stride + dy) as isize - pad as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    for ox in 0..ow {
                        let ix = (ox * stride + dx) as isize - pad as isize;
                        if ix < 0 || ix >= w as isize {
                            continue;
                        }
                        dst[oy * ow + ox] = x[[ci, iy as usize, ix as usize]];
                    }
                }
            }
        }
    }
    cols
}

/// Adjoint of [`im2col`]: scatter-add patch gradients back onto the input.
fn col2im(
    gcols: &Array2<f64>,
    xdim: (usize, usize, usize),
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
    oh: usize,
    ow: usize,
) -> Array3<f64> {
    let (c_in, h, w) = xdim;
    let mut gx = Array3::<f64>::zeros((c_in, h, w));
    for ci in 0..c_in {
        for dy in 0..kh {
            for dx in 0..kw {
                let row = (ci * kh + dy) * kw + dx;
                let src = gcols.row(row);
                for oy in 0..oh {
                    let iy = (oy * stride + dy) as isize - pad as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    for ox in 0..ow {
                        let ix = (ox * stride + dx) as isize - pad as isize;
                        if ix < 0 || ix >= w as isize {
                            continue;
                        }
                        gx[[ci, iy as usize, ix as usize]] += src[oy * ow + ox];
                    }
                }
            }
        }
    }
    gx
}
