use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tensor::{matmul, Mat, Scalar, Tensor};
use crate::error::{Error, Result};

/// One layer of a sequential network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    /// Valid (unpadded) 2-D convolution.
    Conv {
        out_channels: usize,
        kernel: usize,
        stride: usize,
    },
    MaxPool {
        size: usize,
        stride: usize,
    },
    Relu,
    /// Inverted dropout: kept activations are scaled by `1/(1-p)` in training,
    /// evaluation is the identity.
    Dropout {
        p: f64,
    },
    FullyConnected {
        units: usize,
    },
    Softmax,
}

impl LayerSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            LayerSpec::Conv { .. } => "conv",
            LayerSpec::MaxPool { .. } => "max_pool",
            LayerSpec::Relu => "relu",
            LayerSpec::Dropout { .. } => "dropout",
            LayerSpec::FullyConnected { .. } => "fully_connected",
            LayerSpec::Softmax => "softmax",
        }
    }
}

/// Input geometry plus the layer stack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    /// `[channels, height, width]` of one sample.
    pub input: [usize; 3],
    pub layers: Vec<LayerSpec>,
}

impl NetworkSpec {
    /// Glyph-classifier topology: conv 20@5×5 → pool → conv 50@5×5 → pool →
    /// dropout → FC 500 → ReLU → FC `classes` → softmax.
    pub fn symbol_net(side: usize, classes: usize) -> Self {
        NetworkSpec {
            input: [1, side, side],
            layers: vec![
                LayerSpec::Conv {
                    out_channels: 20,
                    kernel: 5,
                    stride: 1,
                },
                LayerSpec::MaxPool { size: 2, stride: 2 },
                LayerSpec::Conv {
                    out_channels: 50,
                    kernel: 5,
                    stride: 1,
                },
                LayerSpec::MaxPool { size: 2, stride: 2 },
                LayerSpec::Dropout { p: 0.5 },
                LayerSpec::FullyConnected { units: 500 },
                LayerSpec::Relu,
                LayerSpec::FullyConnected { units: classes },
                LayerSpec::Softmax,
            ],
        }
    }

    /// Per-sample `[c, h, w]` after each layer (fully-connected outputs are
    /// `[units, 1, 1]`).
    pub fn output_shapes(&self) -> Result<Vec<[usize; 3]>> {
        let [c, h, w] = self.input;
        if c == 0 || h == 0 || w == 0 {
            return Err(Error::InvalidNetwork(format!("empty input shape {:?}", self.input)));
        }
        let mut cur = self.input;
        let mut shapes = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let [c, h, w] = cur;
            let bad = |msg: String| Error::InvalidNetwork(format!("layer {i} ({}): {msg}", layer.kind()));
            cur = match *layer {
                LayerSpec::Conv {
                    out_channels,
                    kernel,
                    stride,
                } => {
                    if kernel == 0 || stride == 0 || out_channels == 0 {
                        return Err(bad("zero-sized hyperparameter".into()));
                    }
                    if kernel > h || kernel > w {
                        return Err(bad(format!("kernel {kernel} exceeds input {h}x{w}")));
                    }
                    [out_channels, (h - kernel) / stride + 1, (w - kernel) / stride + 1]
                }
                LayerSpec::MaxPool { size, stride } => {
                    if size == 0 || stride == 0 {
                        return Err(bad("zero-sized hyperparameter".into()));
                    }
                    if size > h || size > w {
                        return Err(bad(format!("window {size} exceeds input {h}x{w}")));
                    }
                    [c, (h - size) / stride + 1, (w - size) / stride + 1]
                }
                LayerSpec::Relu => cur,
                LayerSpec::Dropout { p } => {
                    if !(0.0..1.0).contains(&p) {
                        return Err(bad(format!("dropout probability {p} outside [0, 1)")));
                    }
                    cur
                }
                LayerSpec::FullyConnected { units } => {
                    if units == 0 {
                        return Err(bad("zero units".into()));
                    }
                    [units, 1, 1]
                }
                LayerSpec::Softmax => {
                    if i + 1 != self.layers.len() {
                        return Err(bad("softmax must be the final layer".into()));
                    }
                    cur
                }
            };
            shapes.push(cur);
        }
        Ok(shapes)
    }
}

/// Forward-pass mode. Training mode draws dropout masks from `dropout_seed`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Eval,
    Train { dropout_seed: u64 },
}

fn numel(s: &[usize; 3]) -> usize {
    s[0] * s[1] * s[2]
}

/// A sequential CNN with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Network<T> {
    spec: NetworkSpec,
    /// Input shape of every layer, followed by the final output shape.
    shapes: Vec<[usize; 3]>,
    /// Weight then bias for every parametrized layer, in layer order.
    params: Vec<Vec<T>>,
    /// For each layer, the index of its weight in `params`.
    param_slot: Vec<Option<usize>>,
}

/// Per-parameter gradients, aligned with [`Network::params`].
pub type Gradients<T> = Vec<Vec<T>>;

enum Cache<T> {
    Conv { cols: Vec<T> },
    Pool { argmax: Vec<usize> },
    Relu { out: Vec<T> },
    Dropout { mask: Option<Vec<T>> },
    Fc { input: Vec<T> },
    Softmax { logits: Vec<T> },
}

/// Activations retained by a training-mode forward pass.
pub struct ForwardPass<T> {
    batch: usize,
    caches: Vec<Cache<T>>,
    output: Tensor<T>,
}

impl<T: Scalar> ForwardPass<T> {
    pub fn output(&self) -> &Tensor<T> {
        &self.output
    }
}

impl<T: Scalar> Network<T> {
    /// He-uniform weights (`U(±√(6/fan_in))`) and zero biases.
    pub fn new(spec: NetworkSpec, seed: u64) -> Result<Self> {
        let mut net = Self::zeroed(spec)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (i, layer) in net.spec.layers.iter().enumerate() {
            let fan_in = match *layer {
                LayerSpec::Conv { kernel, .. } => net.shapes[i][0] * kernel * kernel,
                LayerSpec::FullyConnected { .. } => numel(&net.shapes[i]),
                _ => continue,
            };
            let limit = (6.0 / fan_in as f64).sqrt();
            let slot = net.param_slot[i].expect("parametrized layer");
            for w in net.params[slot].iter_mut() {
                *w = T::from_f64(rng.gen_range(-limit..limit));
            }
        }
        Ok(net)
    }

    /// All parameters zero.
    pub fn zeroed(spec: NetworkSpec) -> Result<Self> {
        let outs = spec.output_shapes()?;
        let mut shapes = vec![spec.input];
        shapes.extend(outs);
        let mut params = Vec::new();
        let mut param_slot = Vec::new();
        for (i, layer) in spec.layers.iter().enumerate() {
            let (wlen, blen) = match *layer {
                LayerSpec::Conv {
                    out_channels,
                    kernel,
                    ..
                } => (out_channels * shapes[i][0] * kernel * kernel, out_channels),
                LayerSpec::FullyConnected { units } => (units * numel(&shapes[i]), units),
                _ => {
                    param_slot.push(None);
                    continue;
                }
            };
            param_slot.push(Some(params.len()));
            params.push(vec![T::ZERO; wlen]);
            params.push(vec![T::ZERO; blen]);
        }
        Ok(Self {
            spec,
            shapes,
            params,
            param_slot,
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn params(&self) -> &[Vec<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Vec<T>] {
        &mut self.params
    }

    /// Shapes of the parameter tensors: conv weights `[out, in, k, k]`, FC
    /// weights `[units, in_features]`, biases `[n]`.
    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for (i, layer) in self.spec.layers.iter().enumerate() {
            match *layer {
                LayerSpec::Conv {
                    out_channels,
                    kernel,
                    ..
                } => {
                    out.push(vec![out_channels, self.shapes[i][0], kernel, kernel]);
                    out.push(vec![out_channels]);
                }
                LayerSpec::FullyConnected { units } => {
                    out.push(vec![units, numel(&self.shapes[i])]);
                    out.push(vec![units]);
                }
                _ => {}
            }
        }
        out
    }

    /// Replaces all parameters; lengths must match [`Self::param_shapes`].
    pub fn set_params(&mut self, params: Vec<Vec<T>>) -> Result<()> {
        let shapes = self.param_shapes();
        if params.len() != shapes.len()
            || params
                .iter()
                .zip(&shapes)
                .any(|(p, s)| p.len() != s.iter().product::<usize>())
        {
            return Err(Error::InvalidNetwork(
                "parameter blocks do not match the network layout".into(),
            ));
        }
        self.params = params;
        Ok(())
    }

    pub fn input_shape(&self) -> [usize; 3] {
        self.spec.input
    }

    pub fn output_len(&self) -> usize {
        numel(self.shapes.last().expect("non-empty shape list"))
    }

    pub fn cast<U: Scalar>(&self) -> Network<U> {
        Network {
            spec: self.spec.clone(),
            shapes: self.shapes.clone(),
            params: self
                .params
                .iter()
                .map(|p| p.iter().map(|v| U::from_f64(v.to_f64())).collect())
                .collect(),
            param_slot: self.param_slot.clone(),
        }
    }

    fn check_input(&self, input: &Tensor<T>) -> Result<usize> {
        let shape = input.shape();
        let expected = self.spec.input;
        if shape.len() != 4 || shape[1..] != expected[..] || shape[0] == 0 {
            return Err(Error::ShapeMismatch {
                layer: 0,
                kind: self.spec.layers.first().map_or("input", LayerSpec::kind),
                expected: [&[0usize][..], &expected[..]].concat(),
                actual: shape.to_vec(),
            });
        }
        Ok(shape[0])
    }

    /// Batched forward pass over `[n, c, h, w]` input.
    pub fn forward(&self, input: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        Ok(self.run_forward(input, mode, false)?.output)
    }

    /// Training-mode forward pass that keeps what [`Self::backward`] needs.
    pub fn forward_train(&self, input: &Tensor<T>, dropout_seed: u64) -> Result<ForwardPass<T>> {
        self.run_forward(input, Mode::Train { dropout_seed }, true)
    }

    fn run_forward(&self, input: &Tensor<T>, mode: Mode, keep: bool) -> Result<ForwardPass<T>> {
        let n = self.check_input(input)?;
        let mut x = input.data().to_vec();
        let mut caches = Vec::with_capacity(self.spec.layers.len());
        for (li, layer) in self.spec.layers.iter().enumerate() {
            let in_shape = self.shapes[li];
            let out_shape = self.shapes[li + 1];
            let (next, cache) = match *layer {
                LayerSpec::Conv { kernel, stride, .. } => {
                    let slot = self.param_slot[li].expect("conv params");
                    let (w, b) = (&self.params[slot], &self.params[slot + 1]);
                    conv_forward(&x, n, in_shape, out_shape, kernel, stride, w, b, keep)
                }
                LayerSpec::MaxPool { size, stride } => {
                    pool_forward(&x, n, in_shape, out_shape, size, stride)
                }
                LayerSpec::Relu => {
                    let out: Vec<T> = x.iter().map(|&v| if v > T::ZERO { v } else { T::ZERO }).collect();
                    let cache = Cache::Relu {
                        out: if keep { out.clone() } else { Vec::new() },
                    };
                    (out, cache)
                }
                LayerSpec::Dropout { p } => match mode {
                    Mode::Eval => (x, Cache::Dropout { mask: None }),
                    Mode::Train { dropout_seed } => {
                        let mask = dropout_mask::<T>(x.len(), p, dropout_seed, li);
                        let out = x.iter().zip(&mask).map(|(&v, &m)| v * m).collect();
                        (out, Cache::Dropout { mask: Some(mask) })
                    }
                },
                LayerSpec::FullyConnected { units } => {
                    let slot = self.param_slot[li].expect("fc params");
                    let (w, b) = (&self.params[slot], &self.params[slot + 1]);
                    let features = numel(&in_shape);
                    let mut out = vec![T::ZERO; n * units];
                    for row in out.chunks_exact_mut(units) {
                        row.copy_from_slice(b);
                    }
                    matmul(Mat::new(&x, n, features), Mat::new(w, units, features).t(), T::ONE, &mut out);
                    let cache = Cache::Fc {
                        input: if keep { x } else { Vec::new() },
                    };
                    (out, cache)
                }
                LayerSpec::Softmax => {
                    let classes = numel(&in_shape);
                    let mut out = x.clone();
                    for row in out.chunks_exact_mut(classes) {
                        softmax_in_place(row);
                    }
                    (out, Cache::Softmax { logits: x })
                }
            };
            x = next;
            if keep {
                caches.push(cache);
            }
        }
        let out_shape = self.shapes.last().expect("shape list");
        let output = Tensor::from_vec(&[n, out_shape[0], out_shape[1], out_shape[2]], x)
            .reshape(&[n, numel(out_shape)]);
        Ok(ForwardPass {
            batch: n,
            caches,
            output,
        })
    }

    /// Mean softmax cross-entropy over the batch and its parameter gradients.
    pub fn backward(&self, pass: &ForwardPass<T>, targets: &[usize]) -> Result<(f64, Gradients<T>)> {
        let n = pass.batch;
        if targets.len() != n {
            return Err(Error::InvalidNetwork(format!(
                "{} targets for a batch of {n}",
                targets.len()
            )));
        }
        let last = self.spec.layers.len() - 1;
        let Some(Cache::Softmax { logits }) = pass.caches.last() else {
            return Err(Error::InvalidNetwork("loss requires a final softmax layer".into()));
        };
        let classes = self.output_len();
        if let Some(&bad) = targets.iter().find(|&&t| t >= classes) {
            return Err(Error::InvalidNetwork(format!("target {bad} outside {classes} classes")));
        }

        let probs = pass.output.data();
        let inv_n = T::from_f64(1.0 / n as f64);
        let mut loss = 0.0;
        let mut grad = vec![T::ZERO; n * classes];
        for (s, &t) in targets.iter().enumerate() {
            let z = &logits[s * classes..(s + 1) * classes];
            let zmax = z.iter().map(|v| v.to_f64()).fold(f64::NEG_INFINITY, f64::max);
            let lse = zmax + z.iter().map(|v| (v.to_f64() - zmax).exp()).sum::<f64>().ln();
            loss += lse - z[t].to_f64();
            for c in 0..classes {
                let y = if c == t { T::ONE } else { T::ZERO };
                grad[s * classes + c] = (probs[s * classes + c] - y) * inv_n;
            }
        }
        loss /= n as f64;

        let mut grads: Gradients<T> = self.params.iter().map(|p| vec![T::ZERO; p.len()]).collect();
        for li in (0..last).rev() {
            let in_shape = self.shapes[li];
            let out_shape = self.shapes[li + 1];
            let need_input_grad = li > 0;
            grad = match (&self.spec.layers[li], &pass.caches[li]) {
                (LayerSpec::Conv { kernel, stride, .. }, Cache::Conv { cols }) => {
                    let slot = self.param_slot[li].expect("conv params");
                    let (dw, rest) = grads[slot..].split_at_mut(1);
                    conv_backward(
                        &grad,
                        n,
                        in_shape,
                        out_shape,
                        *kernel,
                        *stride,
                        &self.params[slot],
                        cols,
                        &mut dw[0],
                        &mut rest[0],
                        need_input_grad,
                    )
                }
                (LayerSpec::MaxPool { .. }, Cache::Pool { argmax }) => {
                    let mut dx = vec![T::ZERO; n * numel(&in_shape)];
                    for (g, &src) in grad.iter().zip(argmax) {
                        dx[src] += *g;
                    }
                    dx
                }
                (LayerSpec::Relu, Cache::Relu { out }) => grad
                    .iter()
                    .zip(out)
                    .map(|(&g, &o)| if o > T::ZERO { g } else { T::ZERO })
                    .collect(),
                (LayerSpec::Dropout { .. }, Cache::Dropout { mask }) => match mask {
                    Some(mask) => grad.iter().zip(mask).map(|(&g, &m)| g * m).collect(),
                    None => grad,
                },
                (LayerSpec::FullyConnected { units }, Cache::Fc { input }) => {
                    let slot = self.param_slot[li].expect("fc params");
                    let features = numel(&in_shape);
                    let units = *units;
                    matmul(
                        Mat::new(&grad, n, units).t(),
                        Mat::new(input, n, features),
                        T::ZERO,
                        &mut grads[slot],
                    );
                    let db = &mut grads[slot + 1];
                    for row in grad.chunks_exact(units) {
                        for (d, &g) in db.iter_mut().zip(row) {
                            *d += g;
                        }
                    }
                    if need_input_grad {
                        let mut dx = vec![T::ZERO; n * features];
                        matmul(
                            Mat::new(&grad, n, units),
                            Mat::new(&self.params[slot], units, features),
                            T::ZERO,
                            &mut dx,
                        );
                        dx
                    } else {
                        Vec::new()
                    }
                }
                (spec, _) => {
                    return Err(Error::InvalidNetwork(format!(
                        "layer {li} ({}) has no cached activations",
                        spec.kind()
                    )))
                }
            };
        }
        Ok((loss, grads))
    }

    /// Forward in training mode then backward, in one call.
    pub fn loss_and_gradients(
        &self,
        input: &Tensor<T>,
        targets: &[usize],
        dropout_seed: u64,
    ) -> Result<(f64, Gradients<T>)> {
        let pass = self.forward_train(input, dropout_seed)?;
        self.backward(&pass, targets)
    }
}

fn softmax_in_place<T: Scalar>(row: &mut [T]) {
    let max = row
        .iter()
        .copied()
        .fold(row[0], |m, v| if v > m { v } else { m });
    let mut sum = T::ZERO;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v = *v / sum;
    }
}

fn dropout_mask<T: Scalar>(len: usize, p: f64, seed: u64, layer: usize) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (layer as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let keep = T::from_f64(1.0 / (1.0 - p));
    (0..len)
        .map(|_| if rng.gen::<f64>() < p { T::ZERO } else { keep })
        .collect()
}

fn im2col<T: Scalar>(x: &[T], [c, h, w]: [usize; 3], oh: usize, ow: usize, k: usize, stride: usize, cols: &mut [T]) {
    let p = oh * ow;
    for ci in 0..c {
        let plane = &x[ci * h * w..(ci + 1) * h * w];
        for ky in 0..k {
            for kx in 0..k {
                let row = &mut cols[((ci * k + ky) * k + kx) * p..][..p];
                for oy in 0..oh {
                    let src = &plane[(oy * stride + ky) * w + kx..];
                    let dst = &mut row[oy * ow..(oy + 1) * ow];
                    if stride == 1 {
                        dst.copy_from_slice(&src[..ow]);
                    } else {
                        for (ox, d) in dst.iter_mut().enumerate() {
                            *d = src[ox * stride];
                        }
                    }
                }
            }
        }
    }
}

fn col2im<T: Scalar>(cols: &[T], [c, h, w]: [usize; 3], oh: usize, ow: usize, k: usize, stride: usize, dx: &mut [T]) {
    let p = oh * ow;
    for ci in 0..c {
        let plane = &mut dx[ci * h * w..(ci + 1) * h * w];
        for ky in 0..k {
            for kx in 0..k {
                let row = &cols[((ci * k + ky) * k + kx) * p..][..p];
                for oy in 0..oh {
                    let base = (oy * stride + ky) * w + kx;
                    for ox in 0..ow {
                        plane[base + ox * stride] += row[oy * ow + ox];
                    }
                }
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn conv_forward<T: Scalar>(
    x: &[T],
    n: usize,
    in_shape: [usize; 3],
    out_shape: [usize; 3],
    k: usize,
    stride: usize,
    weight: &[T],
    bias: &[T],
    keep: bool,
) -> (Vec<T>, Cache<T>) {
    let [o, oh, ow] = out_shape;
    let kk = in_shape[0] * k * k;
    let p = oh * ow;
    let in_len = numel(&in_shape);
    let mut out = vec![T::ZERO; n * o * p];
    let mut all_cols = if keep { vec![T::ZERO; n * kk * p] } else { Vec::new() };
    let mut scratch = if keep { Vec::new() } else { vec![T::ZERO; kk * p] };
    for s in 0..n {
        let cols: &mut [T] = if keep {
            &mut all_cols[s * kk * p..(s + 1) * kk * p]
        } else {
            &mut scratch
        };
        im2col(&x[s * in_len..(s + 1) * in_len], in_shape, oh, ow, k, stride, cols);
        let dst = &mut out[s * o * p..(s + 1) * o * p];
        for (ch, row) in dst.chunks_exact_mut(p).enumerate() {
            row.fill(bias[ch]);
        }
        matmul(Mat::new(weight, o, kk), Mat::new(cols, kk, p), T::ONE, dst);
    }
    (out, Cache::Conv { cols: all_cols })
}

#[allow(clippy::too_many_arguments)]
fn conv_backward<T: Scalar>(
    grad: &[T],
    n: usize,
    in_shape: [usize; 3],
    out_shape: [usize; 3],
    k: usize,
    stride: usize,
    weight: &[T],
    cols: &[T],
    dw: &mut [T],
    db: &mut [T],
    need_input_grad: bool,
) -> Vec<T> {
    let [o, oh, ow] = out_shape;
    let kk = in_shape[0] * k * k;
    let p = oh * ow;
    let in_len = numel(&in_shape);
    let mut dx = if need_input_grad { vec![T::ZERO; n * in_len] } else { Vec::new() };
    let mut dcols = if need_input_grad { vec![T::ZERO; kk * p] } else { Vec::new() };
    for s in 0..n {
        let g = &grad[s * o * p..(s + 1) * o * p];
        let c = &cols[s * kk * p..(s + 1) * kk * p];
        matmul(Mat::new(g, o, p), Mat::new(c, kk, p).t(), T::ONE, dw);
        for (ch, row) in g.chunks_exact(p).enumerate() {
            let mut acc = T::ZERO;
            for &v in row {
                acc += v;
            }
            db[ch] += acc;
        }
        if need_input_grad {
            matmul(Mat::new(weight, o, kk).t(), Mat::new(g, o, p), T::ZERO, &mut dcols);
            col2im(&dcols, in_shape, oh, ow, k, stride, &mut dx[s * in_len..(s + 1) * in_len]);
        }
    }
    dx
}

fn pool_forward<T: Scalar>(
    x: &[T],
    n: usize,
    in_shape: [usize; 3],
    out_shape: [usize; 3],
    size: usize,
    stride: usize,
) -> (Vec<T>, Cache<T>) {
    let [c, h, w] = in_shape;
    let [_, oh, ow] = out_shape;
    let mut out = Vec::with_capacity(n * c * oh * ow);
    let mut argmax = Vec::with_capacity(n * c * oh * ow);
    for s in 0..n {
        for ci in 0..c {
            let base = (s * c + ci) * h * w;
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut best = base + oy * stride * w + ox * stride;
                    for ky in 0..size {
                        for kx in 0..size {
                            let idx = base + (oy * stride + ky) * w + ox * stride + kx;
                            if x[idx] > x[best] {
                                best = idx;
                            }
                        }
                    }
                    out.push(x[best]);
                    argmax.push(best);
                }
            }
        }
    }
    (out, Cache::Pool { argmax })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_spec() -> NetworkSpec {
        NetworkSpec {
            input: [1, 8, 8],
            layers: vec![
                LayerSpec::Conv {
                    out_channels: 2,
                    kernel: 3,
                    stride: 1,
                },
                LayerSpec::MaxPool { size: 2, stride: 2 },
                LayerSpec::Conv {
                    out_channels: 3,
                    kernel: 2,
                    stride: 1,
                },
                LayerSpec::MaxPool { size: 2, stride: 2 },
                LayerSpec::Dropout { p: 0.5 },
                LayerSpec::FullyConnected { units: 10 },
                LayerSpec::Relu,
                LayerSpec::FullyConnected { units: 2 },
                LayerSpec::Softmax,
            ],
        }
    }

    #[test]
    fn symbol_net_shape_trace() {
        let shapes = NetworkSpec::symbol_net(32, 2).output_shapes().unwrap();
        assert_eq!(
            shapes,
            vec![
                [20, 28, 28],
                [20, 14, 14],
                [50, 10, 10],
                [50, 5, 5],
                [50, 5, 5],
                [500, 1, 1],
                [500, 1, 1],
                [2, 1, 1],
                [2, 1, 1],
            ]
        );
        let net = Network::<f32>::new(NetworkSpec::symbol_net(32, 2), 0).unwrap();
        let shapes = net.param_shapes();
        assert_eq!(shapes[0], vec![20, 1, 5, 5]);
        assert_eq!(shapes[2], vec![50, 20, 5, 5]);
        assert_eq!(shapes[4], vec![500, 1250]);
        assert_eq!(shapes[6], vec![2, 500]);
    }

    #[test]
    fn zero_weights_give_uniform_softmax() {
        let net = Network::<f64>::zeroed(NetworkSpec::symbol_net(32, 2)).unwrap();
        let input = Tensor::from_vec(&[1, 1, 32, 32], (0..1024).map(|i| (i % 7) as f64).collect());
        let out = net.forward(&input, Mode::Eval).unwrap();
        assert_eq!(out.shape(), &[1, 2]);
        assert!((out.data()[0] - 0.5).abs() < 1e-12);
        assert!((out.data()[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn eval_is_deterministic_and_normalized() {
        let net = Network::<f32>::new(tiny_spec(), 3).unwrap();
        let input = Tensor::from_vec(&[3, 1, 8, 8], (0..192).map(|i| ((i * 37) % 11) as f32 / 11.0).collect());
        let a = net.forward(&input, Mode::Eval).unwrap();
        let b = net.forward(&input, Mode::Eval).unwrap();
        assert_eq!(a, b);
        for row in a.data().chunks(2) {
            assert!(row.iter().all(|&p| p > 0.0));
            assert!((row.iter().sum::<f32>() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn shape_mismatch_names_the_layer() {
        let net = Network::<f32>::new(tiny_spec(), 0).unwrap();
        let err = net.forward(&Tensor::zeros(&[1, 1, 9, 8]), Mode::Eval).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch { layer: 0, kind: "conv", .. }));
        let bad = NetworkSpec {
            input: [1, 4, 4],
            layers: vec![LayerSpec::Conv {
                out_channels: 1,
                kernel: 5,
                stride: 1,
            }],
        };
        let msg = Network::<f32>::zeroed(bad).unwrap_err().to_string();
        assert!(msg.contains("layer 0 (conv)"), "{msg}");
    }

    #[test]
    fn identity_one_by_one_conv() {
        let spec = NetworkSpec {
            input: [2, 3, 3],
            layers: vec![LayerSpec::Conv {
                out_channels: 2,
                kernel: 1,
                stride: 1,
            }],
        };
        let mut net = Network::<f64>::zeroed(spec).unwrap();
        net.set_params(vec![vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let input = Tensor::from_vec(&[1, 2, 3, 3], (0..18).map(|v| v as f64 - 4.0).collect());
        let out = net.forward(&input, Mode::Eval).unwrap();
        assert_eq!(out.data(), input.data());
    }

    #[test]
    fn dropout_eval_is_identity_and_train_is_seeded() {
        let spec = NetworkSpec {
            input: [1, 4, 4],
            layers: vec![LayerSpec::Dropout { p: 0.5 }],
        };
        let net = Network::<f32>::zeroed(spec).unwrap();
        let input = Tensor::from_vec(&[1, 1, 4, 4], (1..=16).map(|v| v as f32).collect());
        assert_eq!(net.forward(&input, Mode::Eval).unwrap().data(), input.data());
        let a = net.forward(&input, Mode::Train { dropout_seed: 9 }).unwrap();
        let b = net.forward(&input, Mode::Train { dropout_seed: 9 }).unwrap();
        assert_eq!(a, b);
        for (o, i) in a.data().iter().zip(input.data()) {
            assert!(*o == 0.0 || *o == 2.0 * i);
        }
    }

    #[test]
    fn duplicated_batch_leaves_mean_gradients_unchanged() {
        let spec = NetworkSpec {
            layers: tiny_spec()
                .layers
                .into_iter()
                .filter(|l| !matches!(l, LayerSpec::Dropout { .. }))
                .collect(),
            ..tiny_spec()
        };
        let net = Network::<f64>::new(spec, 11).unwrap();
        let sample: Vec<f64> = (0..64).map(|i| ((i * 13) % 17) as f64 / 17.0).collect();
        let single = Tensor::from_vec(&[1, 1, 8, 8], sample.clone());
        let double = Tensor::from_vec(&[2, 1, 8, 8], [sample.clone(), sample].concat());
        let (l1, g1) = net.loss_and_gradients(&single, &[1], 0).unwrap();
        let (l2, g2) = net.loss_and_gradients(&double, &[1, 1], 0).unwrap();
        assert!((l1 - l2).abs() < 1e-12);
        for (a, b) in g1.iter().flatten().zip(g2.iter().flatten()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn saturated_correct_prediction_has_vanishing_gradient() {
        let spec = NetworkSpec {
            input: [1, 1, 2],
            layers: vec![LayerSpec::FullyConnected { units: 2 }, LayerSpec::Softmax],
        };
        let mut net = Network::<f64>::zeroed(spec).unwrap();
        net.set_params(vec![vec![0.0; 4], vec![40.0, -40.0]]).unwrap();
        let input = Tensor::from_vec(&[1, 1, 1, 2], vec![0.3, -0.2]);
        let (loss, grads) = net.loss_and_gradients(&input, &[0], 0).unwrap();
        assert!(loss < 1e-6);
        let norm: f64 = grads.iter().flatten().map(|g| g * g).sum::<f64>().sqrt();
        assert!(norm < 1e-6);
    }
}
