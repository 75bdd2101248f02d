//! Define-by-run computation graph.
//!
//! Every op appends a node holding its forward value; node indices are a
//! topological order, so backward is a single reverse sweep.

use crate::error::{shape_err, AutogradError, Result};
use crate::kernels;
use crate::param::{BatchNormState, ParamKey};
use crate::tensor::Tensor;

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;
pub const BCE_CLAMP: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug)]
enum Op {
    Leaf,
    Param(ParamKey),
    Conv1d { x: Var, w: Var, b: Var },
    BatchNorm { x: Var, gamma: Var, beta: Var, xhat: Vec<f64>, inv_std: Vec<f64>, train: bool },
    MaxPool { x: Var, argmax: Vec<usize> },
    Upsample { x: Var },
    Relu { x: Var },
    Sigmoid { x: Var },
    Linear { x: Var, w: Var, b: Var },
    Concat { a: Var, b: Var },
    SliceChannels { x: Var, start: usize },
    PadReflect { x: Var },
    CropTime { x: Var },
    Reshape { x: Var },
    Add { a: Var, b: Var },
    Scale { x: Var, c: f64 },
    Sum { x: Var },
    L1 { pred: Var, target: Var },
    L2 { pred: Var, target: Var, norms: Vec<f64> },
    Bce { prob: Var, labels: Vec<f64> },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Records a forward computation for later differentiation.
///
/// A graph is single-use and single-threaded; build a new one per step.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

/// Gradients of leaf nodes produced by [`Graph::backward`].
#[derive(Debug)]
pub struct Gradients {
    leaf_grads: Vec<Option<Vec<f64>>>,
    params: Vec<(ParamKey, usize)>,
}

impl Gradients {
    /// Gradient with respect to a leaf (input or parameter), if it was reached.
    pub fn get(&self, var: Var) -> Option<&[f64]> {
        self.leaf_grads.get(var.0).and_then(|g| g.as_deref())
    }

    /// Iterates over `(key, gradient)` for every bound parameter that was reached.
    pub fn param_grads(&self) -> impl Iterator<Item = (ParamKey, &[f64])> {
        self.params.iter().filter_map(|&(k, idx)| self.leaf_grads[idx].as_deref().map(|g| (k, g)))
    }
}

fn same_rank3(a: &Tensor, b: &Tensor, what: &str) -> Result<()> {
    if a.rank() != b.rank() {
        return shape_err(format!("{what}: rank mismatch {:?} vs {:?}", a.shape(), b.shape()));
    }
    Ok(())
}

fn with_nct(template: &Tensor, n: usize, c: usize, t: usize) -> Vec<usize> {
    if template.rank() == 2 {
        vec![c, t]
    } else {
        vec![n, c, t]
    }
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

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    /// Scalar value of a one-element node.
    pub fn item(&self, v: Var) -> Result<f64> {
        self.nodes[v.0].value.item()
    }

    fn push(&mut self, value: Tensor, op: Op, op_name: &'static str, inputs: &[Var]) -> Result<Var> {
        if !value.all_finite() {
            return Err(AutogradError::NonFinite(op_name));
        }
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.nodes.push(Node { value, op, requires_grad });
        Ok(Var(self.nodes.len() - 1))
    }

    /// Leaf that does not receive gradients.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node { value, op: Op::Leaf, requires_grad: false });
        Var(self.nodes.len() - 1)
    }

    /// Leaf whose gradient is reported by [`Gradients::get`].
    pub fn input(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node { value, op: Op::Leaf, requires_grad: true });
        Var(self.nodes.len() - 1)
    }

    pub(crate) fn param_leaf(&mut self, key: ParamKey, value: Tensor) -> Var {
        self.nodes.push(Node { value, op: Op::Param(key), requires_grad: true });
        Var(self.nodes.len() - 1)
    }

    /// Same-padded, stride-1 cross-correlation with a width-3 kernel.
    ///
    /// `x` is `[C_in, T]` or `[N, C_in, T]`, `w` is `[C_out, C_in, 3]`, `b` is `[C_out]`.
    pub fn conv1d(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (xv, wv, bv) = (self.value(x), self.value(w), self.value(b));
        let (n, cin, t) = xv.nct()?;
        let [cout, wcin, k] = wv.shape() else {
            return shape_err(format!("conv1d weight must be rank 3, got {:?}", wv.shape()));
        };
        if *k != 3 {
            return shape_err(format!("conv1d kernel size must be 3, got {k}"));
        }
        if *wcin != cin {
            return shape_err(format!("conv1d channel mismatch: input has {cin}, weight expects {wcin}"));
        }
        if bv.shape() != [*cout] {
            return shape_err(format!("conv1d bias must be [{cout}], got {:?}", bv.shape()));
        }
        let cout = *cout;
        let out = kernels::conv1d_forward(xv.data(), wv.data(), bv.data(), n, cin, cout, t);
        let value = Tensor::new(with_nct(xv, n, cout, t), out)?;
        self.push(value, Op::Conv1d { x, w, b }, "conv1d", &[x, w, b])
    }

    /// Per-channel normalization over batch and time.
    ///
    /// Train mode uses batch statistics and folds them into `state`; eval mode
    /// uses the running statistics and fails if none were ever recorded.
    pub fn batchnorm1d(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        state: &mut BatchNormState,
        mode: Mode,
    ) -> Result<Var> {
        let xv = self.value(x);
        let (n, c, t) = xv.nct()?;
        if self.value(gamma).shape() != [c] || self.value(beta).shape() != [c] {
            return shape_err(format!("batchnorm affine parameters must be [{c}]"));
        }
        if state.channels() != c {
            return shape_err(format!(
                "batchnorm state {} tracks {} channels, input has {c}",
                state.name,
                state.channels()
            ));
        }
        let count = n * t;
        let (mean, var) = match mode {
            Mode::Train => {
                if count < 2 {
                    return Err(AutogradError::Contract(
                        "batchnorm train mode needs at least 2 values per channel".into(),
                    ));
                }
                let (mean, var) = kernels::channel_moments(xv.data(), n, c, t);
                let unbias = count as f64 / (count as f64 - 1.0);
                for ch in 0..c {
                    state.running_mean[ch] = (1.0 - BN_MOMENTUM) * state.running_mean[ch] + BN_MOMENTUM * mean[ch];
                    state.running_var[ch] =
                        (1.0 - BN_MOMENTUM) * state.running_var[ch] + BN_MOMENTUM * var[ch] * unbias;
                }
                state.batches_tracked += 1;
                (mean, var)
            }
            Mode::Eval => {
                if state.batches_tracked == 0 {
                    return Err(AutogradError::State(format!(
                        "batchnorm {} has no running statistics yet",
                        state.name
                    )));
                }
                (state.running_mean.clone(), state.running_var.clone())
            }
        };
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
        let (g, bt) = (self.value(gamma).data(), self.value(beta).data());
        let xd = xv.data();
        let mut xhat = vec![0.0; xd.len()];
        let mut out = vec![0.0; xd.len()];
        for bi in 0..n {
            for ch in 0..c {
                let off = (bi * c + ch) * t;
                for i in off..off + t {
                    xhat[i] = (xd[i] - mean[ch]) * inv_std[ch];
                    out[i] = g[ch] * xhat[i] + bt[ch];
                }
            }
        }
        let value = Tensor::new(xv.shape().to_vec(), out)?;
        let op = Op::BatchNorm { x, gamma, beta, xhat, inv_std, train: mode == Mode::Train };
        self.push(value, op, "batchnorm1d", &[x, gamma, beta])
    }

    /// Kernel-2, stride-2 max pooling over time. Ties go to the earlier frame.
    pub fn maxpool1d(&mut self, x: Var) -> Result<Var> {
        let xv = self.value(x);
        let (n, c, t) = xv.nct()?;
        if t % 2 != 0 {
            return shape_err(format!("maxpool1d needs an even temporal length, got {t}"));
        }
        let half = t / 2;
        let xd = xv.data();
        let mut out = Vec::with_capacity(n * c * half);
        let mut argmax = Vec::with_capacity(n * c * half);
        for row in 0..n * c {
            for j in 0..half {
                let i = row * t + 2 * j;
                let pick = if xd[i] >= xd[i + 1] { i } else { i + 1 };
                out.push(xd[pick]);
                argmax.push(pick);
            }
        }
        let value = Tensor::new(with_nct(xv, n, c, half), out)?;
        self.push(value, Op::MaxPool { x, argmax }, "maxpool1d", &[x])
    }

    /// Nearest-neighbour upsampling by a factor of two over time.
    pub fn upsample_nearest(&mut self, x: Var) -> Result<Var> {
        let xv = self.value(x);
        let (n, c, t) = xv.nct()?;
        let out: Vec<f64> = xv.data().iter().flat_map(|&v| [v, v]).collect();
        let value = Tensor::new(with_nct(xv, n, c, 2 * t), out)?;
        self.push(value, Op::Upsample { x }, "upsample_nearest", &[x])
    }

    pub fn relu(&mut self, x: Var) -> Result<Var> {
        let xv = self.value(x);
        let out = xv.data().iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();
        let value = Tensor::new(xv.shape().to_vec(), out)?;
        self.push(value, Op::Relu { x }, "relu", &[x])
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var> {
        let xv = self.value(x);
        let out = xv.data().iter().map(|&v| kernels::sigmoid(v)).collect();
        let value = Tensor::new(xv.shape().to_vec(), out)?;
        self.push(value, Op::Sigmoid { x }, "sigmoid", &[x])
    }

    /// Affine map `W x + b`; `x` is `[D_in]` or `[N, D_in]`, `w` is `[D_out, D_in]`.
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (xv, wv, bv) = (self.value(x), self.value(w), self.value(b));
        let (n, din) = match xv.shape() {
            [d] => (1, *d),
            [n, d] => (*n, *d),
            s => return shape_err(format!("linear input must be [D] or [N, D], got {s:?}")),
        };
        let [dout, wdin] = wv.shape() else {
            return shape_err(format!("linear weight must be rank 2, got {:?}", wv.shape()));
        };
        if *wdin != din || bv.shape() != [*dout] {
            return shape_err(format!(
                "linear shape mismatch: input {:?}, weight {:?}, bias {:?}",
                xv.shape(),
                wv.shape(),
                bv.shape()
            ));
        }
        let dout = *dout;
        let (xd, wd, bd) = (xv.data(), wv.data(), bv.data());
        let mut out = vec![0.0; n * dout];
        for r in 0..n {
            let xr = &xd[r * din..(r + 1) * din];
            for o in 0..dout {
                let wr = &wd[o * din..(o + 1) * din];
                out[r * dout + o] = bd[o] + kernels::dot(wr, xr);
            }
        }
        let shape = if xv.rank() == 1 { vec![dout] } else { vec![n, dout] };
        let value = Tensor::new(shape, out)?;
        self.push(value, Op::Linear { x, w, b }, "linear", &[x, w, b])
    }

    /// Concatenates along the channel axis; batch and time must agree.
    pub fn concat_channels(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        same_rank3(av, bv, "concat_channels")?;
        let (na, ca, ta) = av.nct()?;
        let (nb, cb, tb) = bv.nct()?;
        if na != nb || ta != tb {
            return shape_err(format!(
                "concat_channels: {:?} and {:?} differ outside the channel axis",
                av.shape(),
                bv.shape()
            ));
        }
        let mut out = Vec::with_capacity(av.len() + bv.len());
        for bi in 0..na {
            out.extend_from_slice(&av.data()[bi * ca * ta..(bi + 1) * ca * ta]);
            out.extend_from_slice(&bv.data()[bi * cb * tb..(bi + 1) * cb * tb]);
        }
        let value = Tensor::new(with_nct(av, na, ca + cb, ta), out)?;
        self.push(value, Op::Concat { a, b }, "concat_channels", &[a, b])
    }

    /// Channels `start..start + len` of `x`.
    pub fn slice_channels(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let xv = self.value(x);
        let (n, c, t) = xv.nct()?;
        if len == 0 || start + len > c {
            return shape_err(format!("slice_channels {start}..{} out of {c}", start + len));
        }
        let mut out = Vec::with_capacity(n * len * t);
        for bi in 0..n {
            let off = (bi * c + start) * t;
            out.extend_from_slice(&xv.data()[off..off + len * t]);
        }
        let value = Tensor::new(with_nct(xv, n, len, t), out)?;
        self.push(value, Op::SliceChannels { x, start }, "slice_channels", &[x])
    }

    /// Appends `pad` frames mirrored about the last frame (`x[T-2], x[T-3], ...`).
    pub fn pad_reflect_end(&mut self, x: Var, pad: usize) -> Result<Var> {
        let xv = self.value(x);
        let (n, c, t) = xv.nct()?;
        if pad >= t {
            return shape_err(format!("reflect pad of {pad} needs more than {pad} frames, got {t}"));
        }
        let nt = t + pad;
        let mut out = Vec::with_capacity(n * c * nt);
        for row in xv.data().chunks(t) {
            out.extend_from_slice(row);
            out.extend((0..pad).map(|j| row[t - 2 - j]));
        }
        let value = Tensor::new(with_nct(xv, n, c, nt), out)?;
        self.push(value, Op::PadReflect { x }, "pad_reflect_end", &[x])
    }

    /// Keeps the first `len` frames.
    pub fn crop_time(&mut self, x: Var, len: usize) -> Result<Var> {
        let xv = self.value(x);
        let (n, c, t) = xv.nct()?;
        if len == 0 || len > t {
            return shape_err(format!("crop_time to {len} frames from {t}"));
        }
        let out: Vec<f64> = xv.data().chunks(t).flat_map(|row| row[..len].iter().copied()).collect();
        let value = Tensor::new(with_nct(xv, n, c, len), out)?;
        self.push(value, Op::CropTime { x }, "crop_time", &[x])
    }

    pub fn reshape(&mut self, x: Var, shape: Vec<usize>) -> Result<Var> {
        let value = self.value(x).clone().reshape(shape)?;
        self.push(value, Op::Reshape { x }, "reshape", &[x])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape() != bv.shape() {
            return shape_err(format!("add: {:?} vs {:?}", av.shape(), bv.shape()));
        }
        let out = av.data().iter().zip(bv.data()).map(|(x, y)| x + y).collect();
        let value = Tensor::new(av.shape().to_vec(), out)?;
        self.push(value, Op::Add { a, b }, "add", &[a, b])
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Result<Var> {
        let xv = self.value(x);
        let out = xv.data().iter().map(|v| v * c).collect();
        let value = Tensor::new(xv.shape().to_vec(), out)?;
        self.push(value, Op::Scale { x, c }, "scale", &[x])
    }

    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let s = self.value(x).data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum { x }, "sum", &[x])
    }

    /// Sum of absolute residuals over channels and time, averaged over the batch.
    pub fn l1_loss(&mut self, pred: Var, target: Var) -> Result<Var> {
        let n = self.loss_batch(pred, target, "l1_loss")?;
        let s: f64 = self.value(pred).data().iter().zip(self.value(target).data()).map(|(p, y)| (p - y).abs()).sum();
        self.push(Tensor::scalar(s / n as f64), Op::L1 { pred, target }, "l1_loss", &[pred, target])
    }

    /// Sum over time of the per-frame Euclidean residual norm, averaged over the batch.
    pub fn l2_loss(&mut self, pred: Var, target: Var) -> Result<Var> {
        let n = self.loss_batch(pred, target, "l2_loss")?;
        let (_, c, t) = self.value(pred).nct()?;
        let (pd, yd) = (self.value(pred).data(), self.value(target).data());
        let mut norms = vec![0.0; n * t];
        for bi in 0..n {
            for ch in 0..c {
                let off = (bi * c + ch) * t;
                for ti in 0..t {
                    let d = pd[off + ti] - yd[off + ti];
                    norms[bi * t + ti] += d * d;
                }
            }
        }
        norms.iter_mut().for_each(|v| *v = v.sqrt());
        let s: f64 = norms.iter().sum();
        self.push(Tensor::scalar(s / n as f64), Op::L2 { pred, target, norms }, "l2_loss", &[pred, target])
    }

    fn loss_batch(&self, pred: Var, target: Var, what: &str) -> Result<usize> {
        let (pv, yv) = (self.value(pred), self.value(target));
        if pv.shape() != yv.shape() {
            return shape_err(format!("{what}: {:?} vs {:?}", pv.shape(), yv.shape()));
        }
        Ok(pv.nct()?.0)
    }

    /// Mean binary cross-entropy; probabilities are clamped to `[1e-7, 1 - 1e-7]`.
    pub fn bce_loss(&mut self, prob: Var, labels: &[f64]) -> Result<Var> {
        let pv = self.value(prob);
        if pv.len() != labels.len() {
            return shape_err(format!("bce_loss: {} probabilities, {} labels", pv.len(), labels.len()));
        }
        let s: f64 = pv
            .data()
            .iter()
            .zip(labels)
            .map(|(&p, &y)| {
                let p = p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
                -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
            })
            .sum();
        let mean = s / labels.len() as f64;
        self.push(Tensor::scalar(mean), Op::Bce { prob, labels: labels.to_vec() }, "bce_loss", &[prob])
    }

    /// Reverse sweep from a one-element `loss`, seeded with 1.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lv = self.value(loss);
        if lv.len() != 1 {
            return Err(AutogradError::Contract(format!("backward needs a scalar loss, got shape {:?}", lv.shape())));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        let mut params = Vec::new();
        grads[loss.0] = Some(vec![1.0]);
        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if let Op::Param(key) = node.op {
                params.push((key, idx));
            }
            if matches!(node.op, Op::Leaf | Op::Param(_)) {
                continue;
            }
            let Some(gy) = grads[idx].take() else {
                continue;
            };
            if !node.requires_grad {
                continue;
            }
            self.backward_node(node, &gy, &mut grads)?;
        }
        params.reverse();
        Ok(Gradients { leaf_grads: grads, params })
    }

    fn wants(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn backward_node(&self, node: &Node, gy: &[f64], grads: &mut [Option<Vec<f64>>]) -> Result<()> {
        fn buf(grads: &mut [Option<Vec<f64>>], v: Var, len: usize) -> &mut Vec<f64> {
            grads[v.0].get_or_insert_with(|| vec![0.0; len])
        }
        match &node.op {
            Op::Leaf | Op::Param(_) => {}
            Op::Conv1d { x, w, b } => {
                let xv = self.value(*x);
                let wv = self.value(*w);
                let (n, cin, t) = xv.nct()?;
                let cout = wv.shape()[0];
                if self.wants(*x) {
                    let gx = buf(grads, *x, xv.len());
                    kernels::conv1d_backward_input(gy, wv.data(), gx, n, cin, cout, t);
                }
                if self.wants(*w) {
                    let gw = buf(grads, *w, wv.len());
                    kernels::conv1d_backward_weight(gy, xv.data(), gw, n, cin, cout, t);
                }
                if self.wants(*b) {
                    let gb = buf(grads, *b, cout);
                    for bi in 0..n {
                        for o in 0..cout {
                            let off = (bi * cout + o) * t;
                            gb[o] += gy[off..off + t].iter().sum::<f64>();
                        }
                    }
                }
            }
            Op::BatchNorm { x, gamma, beta, xhat, inv_std, train } => {
                let (n, c, t) = self.value(*x).nct()?;
                let g = self.value(*gamma).data();
                let m = (n * t) as f64;
                let mut sum_dy = vec![0.0; c];
                let mut sum_dy_xhat = vec![0.0; c];
                for bi in 0..n {
                    for ch in 0..c {
                        let off = (bi * c + ch) * t;
                        for i in off..off + t {
                            sum_dy[ch] += gy[i];
                            sum_dy_xhat[ch] += gy[i] * xhat[i];
                        }
                    }
                }
                if self.wants(*x) {
                    let gx = buf(grads, *x, gy.len());
                    for bi in 0..n {
                        for ch in 0..c {
                            let off = (bi * c + ch) * t;
                            let k = g[ch] * inv_std[ch];
                            for i in off..off + t {
                                gx[i] += if *train {
                                    k * (gy[i] - sum_dy[ch] / m - xhat[i] * sum_dy_xhat[ch] / m)
                                } else {
                                    k * gy[i]
                                };
                            }
                        }
                    }
                }
                if self.wants(*gamma) {
                    let gg = buf(grads, *gamma, c);
                    gg.iter_mut().zip(&sum_dy_xhat).for_each(|(a, s)| *a += s);
                }
                if self.wants(*beta) {
                    let gb = buf(grads, *beta, c);
                    gb.iter_mut().zip(&sum_dy).for_each(|(a, s)| *a += s);
                }
            }
            Op::MaxPool { x, argmax } => {
                if self.wants(*x) {
                    let gx = buf(grads, *x, self.value(*x).len());
                    for (g, &i) in gy.iter().zip(argmax) {
                        gx[i] += g;
                    }
                }
            }
            Op::Upsample { x } => {
                if self.wants(*x) {
                    let gx = buf(grads, *x, self.value(*x).len());
                    for (i, g) in gx.iter_mut().enumerate() {
                        *g += gy[2 * i] + gy[2 * i + 1];
                    }
                }
            }
            Op::Relu { x } => {
                if self.wants(*x) {
                    let xd = self.value(*x).data();
                    let gx = buf(grads, *x, xd.len());
                    for i in 0..xd.len() {
                        if xd[i] > 0.0 {
                            gx[i] += gy[i];
                        }
                    }
                }
            }
            Op::Sigmoid { x } => {
                if self.wants(*x) {
                    let yd = node.value.data();
                    let gx = buf(grads, *x, yd.len());
                    for i in 0..yd.len() {
                        gx[i] += gy[i] * yd[i] * (1.0 - yd[i]);
                    }
                }
            }
            Op::Linear { x, w, b } => {
                let (xv, wv) = (self.value(*x), self.value(*w));
                let (dout, din) = (wv.shape()[0], wv.shape()[1]);
                let n = xv.len() / din;
                if self.wants(*x) {
                    let gx = buf(grads, *x, xv.len());
                    for r in 0..n {
                        for o in 0..dout {
                            let g = gy[r * dout + o];
                            let wr = &wv.data()[o * din..(o + 1) * din];
                            kernels::axpy(g, wr, &mut gx[r * din..(r + 1) * din]);
                        }
                    }
                }
                if self.wants(*w) {
                    let gw = buf(grads, *w, wv.len());
                    for r in 0..n {
                        let xr = &xv.data()[r * din..(r + 1) * din];
                        for o in 0..dout {
                            kernels::axpy(gy[r * dout + o], xr, &mut gw[o * din..(o + 1) * din]);
                        }
                    }
                }
                if self.wants(*b) {
                    let gb = buf(grads, *b, dout);
                    for r in 0..n {
                        for o in 0..dout {
                            gb[o] += gy[r * dout + o];
                        }
                    }
                }
            }
            Op::Concat { a, b } => {
                let (na, ca, t) = self.value(*a).nct()?;
                let cb = self.value(*b).nct()?.1;
                let row = (ca + cb) * t;
                if self.wants(*a) {
                    let ga = buf(grads, *a, na * ca * t);
                    for bi in 0..na {
                        kernels::add_into(&mut ga[bi * ca * t..(bi + 1) * ca * t], &gy[bi * row..bi * row + ca * t]);
                    }
                }
                if self.wants(*b) {
                    let gb = buf(grads, *b, na * cb * t);
                    for bi in 0..na {
                        kernels::add_into(
                            &mut gb[bi * cb * t..(bi + 1) * cb * t],
                            &gy[bi * row + ca * t..(bi + 1) * row],
                        );
                    }
                }
            }
            Op::SliceChannels { x, start } => {
                if self.wants(*x) {
                    let (n, c, t) = self.value(*x).nct()?;
                    let len = node.value.nct()?.1;
                    let gx = buf(grads, *x, n * c * t);
                    for bi in 0..n {
                        let off = (bi * c + start) * t;
                        kernels::add_into(&mut gx[off..off + len * t], &gy[bi * len * t..(bi + 1) * len * t]);
                    }
                }
            }
            Op::PadReflect { x } => {
                if self.wants(*x) {
                    let (n, c, t) = self.value(*x).nct()?;
                    let nt = node.value.nct()?.2;
                    let pad = nt - t;
                    let gx = buf(grads, *x, n * c * t);
                    for r in 0..n * c {
                        let (src, dst) = (&gy[r * nt..(r + 1) * nt], &mut gx[r * t..(r + 1) * t]);
                        kernels::add_into(dst, &src[..t]);
                        for j in 0..pad {
                            dst[t - 2 - j] += src[t + j];
                        }
                    }
                }
            }
            Op::CropTime { x } => {
                if self.wants(*x) {
                    let (n, c, t) = self.value(*x).nct()?;
                    let len = node.value.nct()?.2;
                    let gx = buf(grads, *x, n * c * t);
                    for r in 0..n * c {
                        kernels::add_into(&mut gx[r * t..r * t + len], &gy[r * len..(r + 1) * len]);
                    }
                }
            }
            Op::Reshape { x } => {
                if self.wants(*x) {
                    let gx = buf(grads, *x, gy.len());
                    kernels::add_into(gx, gy);
                }
            }
            Op::Add { a, b } => {
                for v in [a, b] {
                    if self.wants(*v) {
                        let g = buf(grads, *v, gy.len());
                        kernels::add_into(g, gy);
                    }
                }
            }
            Op::Scale { x, c } => {
                if self.wants(*x) {
                    let gx = buf(grads, *x, gy.len());
                    kernels::axpy(*c, gy, gx);
                }
            }
            Op::Sum { x } => {
                if self.wants(*x) {
                    let len = self.value(*x).len();
                    let gx = buf(grads, *x, len);
                    gx.iter_mut().for_each(|g| *g += gy[0]);
                }
            }
            Op::L1 { pred, target } => {
                let (pv, yv) = (self.value(*pred), self.value(*target));
                let n = pv.nct()?.0 as f64;
                let sign: Vec<f64> = pv
                    .data()
                    .iter()
                    .zip(yv.data())
                    .map(|(p, y)| {
                        let d = p - y;
                        if d > 0.0 {
                            gy[0] / n
                        } else if d < 0.0 {
                            -gy[0] / n
                        } else {
                            0.0
                        }
                    })
                    .collect();
                if self.wants(*pred) {
                    kernels::add_into(buf(grads, *pred, sign.len()), &sign);
                }
                if self.wants(*target) {
                    kernels::axpy(-1.0, &sign, buf(grads, *target, sign.len()));
                }
            }
            Op::L2 { pred, target, norms } => {
                let (pv, yv) = (self.value(*pred), self.value(*target));
                let (n, c, t) = pv.nct()?;
                let mut d = vec![0.0; pv.len()];
                for bi in 0..n {
                    for ch in 0..c {
                        let off = (bi * c + ch) * t;
                        for ti in 0..t {
                            let norm = norms[bi * t + ti];
                            if norm > 0.0 {
                                let i = off + ti;
                                d[i] = gy[0] * (pv.data()[i] - yv.data()[i]) / (norm * n as f64);
                            }
                        }
                    }
                }
                if self.wants(*pred) {
                    kernels::add_into(buf(grads, *pred, d.len()), &d);
                }
                if self.wants(*target) {
                    kernels::axpy(-1.0, &d, buf(grads, *target, d.len()));
                }
            }
            Op::Bce { prob, labels } => {
                if self.wants(*prob) {
                    let pd = self.value(*prob).data();
                    let n = labels.len() as f64;
                    let gp = buf(grads, *prob, pd.len());
                    for i in 0..pd.len() {
                        let (p, y) = (pd[i], labels[i]);
                        if p > BCE_CLAMP && p < 1.0 - BCE_CLAMP {
                            gp[i] += gy[0] * (-y / p + (1.0 - y) / (1.0 - p)) / n;
                        }
                    }
                }
            }
        }
        Ok(())
    }
}
