use std::rc::Rc;

use serde::{Deserialize, Serialize};

use super::graph::{Graph, NodeId, PAD};
use super::tensor::Tensor;
use crate::channels::ChannelInstance;
use crate::datasets::SamplePair;
use crate::error::{Error, Result};
use crate::numerics::RandomStream;

/// Elementwise map applied to each complex channel entry before standardization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputTransform {
    /// Real and imaginary parts as they are.
    Linear,
    /// `z ↦ z/|z| · ln(1 + |z|)`: keeps the phase, compresses the magnitude.
    LogMagnitude,
    /// Log-magnitude of `z / r`, where `r` is the instance's RMS entry
    /// magnitude, so the encoding depends only on relative gains.
    RelativeLog,
}

impl InputTransform {
    /// Transformed `(re, im)` pairs of every entry of `inst.h`, row-major.
    pub fn encode(self, inst: &ChannelInstance<f64>) -> impl Iterator<Item = (f64, f64)> + '_ {
        let scale = match self {
            Self::RelativeLog => {
                let s = inst.h.as_slice();
                let rms = (s.iter().map(|z| z.norm_sqr()).sum::<f64>() / s.len().max(1) as f64).sqrt();
                if rms > 0.0 { 1.0 / rms } else { 1.0 }
            }
            _ => 1.0,
        };
        inst.h.as_slice().iter().map(move |z| self.apply(z.re * scale, z.im * scale))
    }

    pub fn apply(self, re: f64, im: f64) -> (f64, f64) {
        match self {
            Self::Linear => (re, im),
            Self::LogMagnitude | Self::RelativeLog => {
                let r = re.hypot(im);
                if r == 0.0 {
                    (0.0, 0.0)
                } else {
                    let s = r.ln_1p() / r;
                    (re * s, im * s)
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub m: usize,
    pub k: usize,
    #[serde(default = "NetworkConfig::default_channels")]
    pub channels: usize,
    #[serde(default = "NetworkConfig::default_kernel")]
    pub kernel: usize,
    #[serde(default = "NetworkConfig::default_eps")]
    pub bn_epsilon: f64,
    #[serde(default = "NetworkConfig::default_momentum")]
    pub bn_momentum: f64,
    #[serde(default = "NetworkConfig::default_transform")]
    pub input_transform: InputTransform,
}

impl NetworkConfig {
    fn default_channels() -> usize {
        8
    }
    fn default_kernel() -> usize {
        3
    }
    fn default_eps() -> f64 {
        1e-5
    }
    fn default_momentum() -> f64 {
        0.1
    }
    fn default_transform() -> InputTransform {
        InputTransform::LogMagnitude
    }

    pub fn new(m: usize, k: usize) -> Self {
        Self {
            m,
            k,
            channels: 8,
            kernel: 3,
            bn_epsilon: 1e-5,
            bn_momentum: 0.1,
            input_transform: Self::default_transform(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.k == 0 || self.channels == 0 {
            return Err(Error::InvalidConfig("network dimensions must be positive".into()));
        }
        if self.kernel % 2 == 0 {
            return Err(Error::InvalidConfig("kernel size must be odd".into()));
        }
        if !(self.bn_epsilon > 0.0) || !(0.0..=1.0).contains(&self.bn_momentum) {
            return Err(Error::InvalidConfig("bn epsilon must be positive and momentum in [0, 1]".into()));
        }
        Ok(())
    }

    /// Pixels per channel image: the K×M grid.
    pub fn pixels(&self) -> usize {
        self.k * self.m
    }

    /// Names and shapes of the trainable tensors, in their fixed order.
    pub fn layout(&self) -> Vec<(&'static str, (usize, usize))> {
        let (c, kk) = (self.channels, self.kernel * self.kernel);
        vec![
            ("conv1.weight", (c, 2 * kk)),
            ("conv1.bias", (c, 1)),
            ("bn1.gamma", (c, 1)),
            ("bn1.beta", (c, 1)),
            ("conv2.weight", (c, c * kk)),
            ("conv2.bias", (c, 1)),
            ("bn2.gamma", (c, 1)),
            ("bn2.beta", (c, 1)),
            ("fc.weight", (self.k, c * self.pixels())),
            ("fc.bias", (1, self.k)),
        ]
    }

    /// Number of trainable scalars; 1284 for M = K = 4 with the default layers.
    pub fn param_count(&self) -> usize {
        self.layout().iter().map(|(_, (r, c))| r * c).sum()
    }
}

/// Ordered named tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterSet {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ParameterSet {
    pub fn new(names: Vec<String>, tensors: Vec<Tensor>) -> Result<Self> {
        if names.len() != tensors.len() {
            return Err(Error::ShapeMismatch(format!("{} names for {} tensors", names.len(), tensors.len())));
        }
        Ok(Self { names, tensors })
    }

    /// Uniform fan-in initialization of weights, zero biases, unit BN scale.
    pub fn init(cfg: &NetworkConfig, rng: &mut RandomStream) -> Self {
        let mut names = Vec::new();
        let mut tensors = Vec::new();
        for (name, (r, c)) in cfg.layout() {
            let t = if name.ends_with(".weight") {
                let bound = 1.0 / (c as f64).sqrt();
                let data = (0..r * c).map(|_| rng.uniform_range(-bound, bound)).collect();
                Tensor::from_vec(r, c, data).expect("layout shape")
            } else if name.ends_with(".gamma") {
                Tensor::filled(r, c, 1.0)
            } else {
                Tensor::zeros(r, c)
            };
            names.push(name.to_string());
            tensors.push(t);
        }
        Self { names, tensors }
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.index_of(name).map(|i| &self.tensors[i])
    }

    pub fn scalar_count(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            names: self.names.clone(),
            tensors: self.tensors.iter().map(|t| Tensor::zeros(t.rows(), t.cols())).collect(),
        }
    }

    /// Indices of the fully connected layer's tensors.
    pub fn fc_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|i| self.names[*i].starts_with("fc.")).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(Tensor::is_finite)
    }

    pub fn check_same_layout(&self, other: &Self) -> Result<()> {
        if self.names != other.names || self.tensors.iter().zip(&other.tensors).any(|(a, b)| a.shape() != b.shape())
        {
            return Err(Error::ShapeMismatch("parameter sets have different layouts".into()));
        }
        Ok(())
    }
}

/// Running mean and (unbiased) variance per BN layer, used in eval mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunningStats {
    pub mean: Vec<Vec<f64>>,
    pub var: Vec<Vec<f64>>,
}

impl RunningStats {
    pub fn new(cfg: &NetworkConfig) -> Self {
        Self { mean: vec![vec![0.0; cfg.channels]; 2], var: vec![vec![1.0; cfg.channels]; 2] }
    }

    pub fn update(&mut self, batch: &[BnBatchStats], momentum: f64) {
        for (layer, s) in batch.iter().enumerate() {
            for (r, b) in self.mean[layer].iter_mut().zip(&s.mean) {
                *r = (1.0 - momentum) * *r + momentum * b;
            }
            for (r, b) in self.var[layer].iter_mut().zip(&s.var) {
                *r = (1.0 - momentum) * *r + momentum * b;
            }
        }
    }
}

/// Per-channel mean and unbiased variance observed by one train-mode BN layer.
#[derive(Clone, Debug, PartialEq)]
pub struct BnBatchStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

/// Frozen per-part statistics of the (transformed) network inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean_re: f64,
    pub std_re: f64,
    pub mean_im: f64,
    pub std_im: f64,
}

impl Standardization {
    pub fn identity() -> Self {
        Self { mean_re: 0.0, std_re: 1.0, mean_im: 0.0, std_im: 1.0 }
    }

    pub fn fit<'a>(cfg: &NetworkConfig, instances: impl IntoIterator<Item = &'a ChannelInstance<f64>>) -> Self {
        let (mut n, mut s_re, mut s_im, mut q_re, mut q_im) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for inst in instances {
            for (re, im) in cfg.input_transform.encode(inst) {
                n += 1.0;
                s_re += re;
                s_im += im;
                q_re += re * re;
                q_im += im * im;
            }
        }
        if n == 0.0 {
            return Self::identity();
        }
        let (m_re, m_im) = (s_re / n, s_im / n);
        let sd = |q: f64, m: f64| (q / n - m * m).max(0.0).sqrt().max(1e-12);
        Self { mean_re: m_re, std_re: sd(q_re, m_re), mean_im: m_im, std_im: sd(q_im, m_im) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

pub struct ForwardOutput {
    /// `[N, K]` Sigmoid outputs.
    pub output: NodeId,
    /// Batch statistics of both BN layers (train mode only).
    pub batch_stats: Vec<BnBatchStats>,
}

/// Packs instances into the `[2, N·K·M]` input tensor: real parts in row 0,
/// imaginary parts in row 1, one K×M image per sample.
pub fn encode_batch(cfg: &NetworkConfig, std: &Standardization, instances: &[&ChannelInstance<f64>]) -> Result<Tensor> {
    let p = cfg.pixels();
    let n = instances.len();
    let mut data = vec![0.0; 2 * n * p];
    for (i, inst) in instances.iter().enumerate() {
        if inst.users() != cfg.k || inst.antennas() != cfg.m {
            return Err(Error::ShapeMismatch(format!(
                "instance is {}x{}, network expects {}x{}",
                inst.users(),
                inst.antennas(),
                cfg.k,
                cfg.m
            )));
        }
        for (j, (re, im)) in cfg.input_transform.encode(inst).enumerate() {
            data[i * p + j] = (re - std.mean_re) / std.std_re;
            data[n * p + i * p + j] = (im - std.mean_im) / std.std_im;
        }
    }
    Tensor::from_vec(2, n * p, data)
}

/// Gather indices turning a `[cin, N·K·M]` map into `[cin·k², N·K·M]`
/// patches for a stride-1, same-padded convolution.
fn im2col_indices(cin: usize, n: usize, rows: usize, cols: usize, kernel: usize) -> Rc<[u32]> {
    let p = rows * cols;
    let np = n * p;
    let pad = (kernel / 2) as isize;
    let mut idx = Vec::with_capacity(cin * kernel * kernel * np);
    for c in 0..cin {
        for ky in 0..kernel as isize {
            for kx in 0..kernel as isize {
                for s in 0..n {
                    for y in 0..rows as isize {
                        for x in 0..cols as isize {
                            let (sy, sx) = (y + ky - pad, x + kx - pad);
                            if sy < 0 || sx < 0 || sy >= rows as isize || sx >= cols as isize {
                                idx.push(PAD);
                            } else {
                                idx.push((c * np + s * p + sy as usize * cols + sx as usize) as u32);
                            }
                        }
                    }
                }
            }
        }
    }
    idx.into()
}

/// Gather indices turning `[C, N·P]` into `[N, C·P]`.
fn flatten_indices(c: usize, n: usize, p: usize) -> Rc<[u32]> {
    let mut idx = Vec::with_capacity(c * n * p);
    for s in 0..n {
        for ch in 0..c {
            for px in 0..p {
                idx.push((ch * n * p + s * p + px) as u32);
            }
        }
    }
    idx.into()
}

fn conv(g: &mut Graph, cfg: &NetworkConfig, x: NodeId, w: NodeId, b: NodeId, cin: usize, n: usize) -> Result<NodeId> {
    let np = n * cfg.pixels();
    let idx = im2col_indices(cin, n, cfg.k, cfg.m, cfg.kernel);
    let patches = g.gather(x, idx, cin * cfg.kernel * cfg.kernel, np)?;
    let y = g.matmul(w, patches, false, false)?;
    let bias = g.broadcast_cols(b, np)?;
    g.add(y, bias)
}

fn batch_norm(
    g: &mut Graph,
    cfg: &NetworkConfig,
    x: NodeId,
    gamma: NodeId,
    beta: NodeId,
    running: (&[f64], &[f64]),
    mode: Mode,
    stats: &mut Vec<BnBatchStats>,
) -> Result<NodeId> {
    let (c, l) = g.value(x).shape();
    let (centered, inv_std) = match mode {
        Mode::Train => {
            let s = g.sum_cols(x)?;
            let mean = g.scale(s, 1.0 / l as f64)?;
            let mean_b = g.broadcast_cols(mean, l)?;
            let centered = g.sub(x, mean_b)?;
            let sq = g.square(centered)?;
            let ss = g.sum_cols(sq)?;
            let var = g.scale(ss, 1.0 / l as f64)?;
            let unbiased = if l > 1 { l as f64 / (l - 1) as f64 } else { 1.0 };
            stats.push(BnBatchStats {
                mean: g.value(mean).data().to_vec(),
                var: g.value(var).data().iter().map(|v| v * unbiased).collect(),
            });
            let ve = g.add_scalar(var, cfg.bn_epsilon)?;
            (centered, g.powf(ve, -0.5)?)
        }
        Mode::Eval => {
            let mean = g.constant(Tensor::from_vec(c, 1, running.0.to_vec())?);
            let inv = running.1.iter().map(|v| 1.0 / (v + cfg.bn_epsilon).sqrt()).collect();
            let inv = g.constant(Tensor::from_vec(c, 1, inv)?);
            let mean_b = g.broadcast_cols(mean, l)?;
            (g.sub(x, mean_b)?, inv)
        }
    };
    let inv_b = g.broadcast_cols(inv_std, l)?;
    let xhat = g.mul(centered, inv_b)?;
    let gamma_b = g.broadcast_cols(gamma, l)?;
    let scaled = g.mul(xhat, gamma_b)?;
    let beta_b = g.broadcast_cols(beta, l)?;
    g.add(scaled, beta_b)
}

/// Same-padded convolution, eval-mode BN and ReLU on one sample; `input`
/// holds one K×M map per channel and `out` receives `channels` maps.
fn conv_bn_relu(
    cfg: &NetworkConfig,
    input: &[&[f64]],
    [w, b, gamma, beta]: [&Tensor; 4],
    (mean, var): (&[f64], &[f64]),
    out: &mut [f64],
) {
    let (rows, cols, kernel) = (cfg.k, cfg.m, cfg.kernel);
    let pad = kernel / 2;
    let width = w.cols();
    for (o, map) in out.chunks_mut(cfg.pixels()).enumerate() {
        let wrow = &w.data()[o * width..(o + 1) * width];
        map.fill(0.0);
        // Taps in (channel, ky, kx) order, each added to every pixel it reaches.
        for (ci, chan) in input.iter().enumerate() {
            for ky in 0..kernel {
                for kx in 0..kernel {
                    let wv = wrow[(ci * kernel + ky) * kernel + kx];
                    if wv == 0.0 {
                        continue;
                    }
                    let (y0, y1) = (pad.saturating_sub(ky), (rows + pad - ky).min(rows));
                    let (x0, x1) = (pad.saturating_sub(kx), (cols + pad - kx).min(cols));
                    for y in y0..y1 {
                        let src = &chan[(y + ky - pad) * cols + x0 + kx - pad..][..x1 - x0];
                        let dst = &mut map[y * cols + x0..y * cols + x1];
                        for (d, v) in dst.iter_mut().zip(src) {
                            *d += wv * v;
                        }
                    }
                }
            }
        }
        let inv = 1.0 / (var[o] + cfg.bn_epsilon).sqrt();
        let (bias, g, bt, mu) = (b.data()[o], gamma.data()[o], beta.data()[o], mean[o]);
        for v in map.iter_mut() {
            *v = (((*v + bias) - mu) * inv * g + bt).max(0.0);
        }
    }
}

/// conv → BN → ReLU → conv → BN → ReLU → flatten → FC → Sigmoid.
///
/// `params` are graph nodes in [`NetworkConfig::layout`] order; `input` is a
/// `[2, N·K·M]` node from [`encode_batch`].
pub fn forward(
    g: &mut Graph,
    cfg: &NetworkConfig,
    params: &[NodeId],
    running: &RunningStats,
    input: NodeId,
    mode: Mode,
) -> Result<ForwardOutput> {
    let layout = cfg.layout();
    if params.len() != layout.len() {
        return Err(Error::ShapeMismatch(format!("{} parameter nodes, expected {}", params.len(), layout.len())));
    }
    for (node, (name, shape)) in params.iter().zip(&layout) {
        if g.value(*node).shape() != *shape {
            return Err(Error::ShapeMismatch(format!("{name} has shape {:?}, expected {shape:?}", g.value(*node).shape())));
        }
    }
    let p = cfg.pixels();
    let (rows, cols) = g.value(input).shape();
    if rows != 2 || cols == 0 || cols % p != 0 {
        return Err(Error::ShapeMismatch(format!("input is {rows}x{cols}, expected 2x(N*{p})")));
    }
    let n = cols / p;
    let c = cfg.channels;
    let mut stats = Vec::new();

    let h = conv(g, cfg, input, params[0], params[1], 2, n)?;
    let h = batch_norm(g, cfg, h, params[2], params[3], (&running.mean[0], &running.var[0]), mode, &mut stats)?;
    let h = g.relu(h)?;
    let h = conv(g, cfg, h, params[4], params[5], c, n)?;
    let h = batch_norm(g, cfg, h, params[6], params[7], (&running.mean[1], &running.var[1]), mode, &mut stats)?;
    let h = g.relu(h)?;
    let flat = g.gather(h, flatten_indices(c, n, p), n, c * p)?;
    let z = g.matmul(flat, params[8], false, true)?;
    let bias = g.broadcast_rows(params[9], n)?;
    let z = g.add(z, bias)?;
    let output = g.sigmoid(z)?;
    Ok(ForwardOutput { output, batch_stats: stats })
}

/// `(1/N)·Σ_i ‖pred_i − label_i‖²` over `[N, K]` nodes.
pub fn mse_loss(g: &mut Graph, pred: NodeId, labels: NodeId) -> Result<NodeId> {
    let n = g.value(pred).rows();
    if g.value(pred).shape() != g.value(labels).shape() || n == 0 {
        return Err(Error::ShapeMismatch(format!(
            "predictions {:?} vs labels {:?}",
            g.value(pred).shape(),
            g.value(labels).shape()
        )));
    }
    let d = g.sub(pred, labels)?;
    let sq = g.square(d)?;
    let s = g.sum(sq)?;
    g.scale(s, 1.0 / n as f64)
}

pub fn label_tensor(batch: &[SamplePair]) -> Result<Tensor> {
    let k = batch.first().map_or(0, |p| p.label.len());
    Tensor::from_vec(batch.len(), k, batch.iter().flat_map(|p| p.label.iter().copied()).collect())
}

/// Maps Sigmoid outputs to uplink powers `P·s/‖s‖₁`, which sum to `P` exactly.
pub fn output_to_power(s: &[f64], power: f64) -> Vec<f64> {
    let total: f64 = s.iter().sum();
    s.iter().map(|x| power * x / total).collect()
}

/// Parameters, BN running statistics and frozen input statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub config: NetworkConfig,
    pub params: ParameterSet,
    pub running: RunningStats,
    pub standardization: Standardization,
}

impl Model {
    pub fn new(config: NetworkConfig, standardization: Standardization, rng: &mut RandomStream) -> Self {
        let params = ParameterSet::init(&config, rng);
        let running = RunningStats::new(&config);
        Self { config, params, running, standardization }
    }

    /// Records `params` on `g`, as differentiable leaves where `trainable[i]` holds.
    pub fn leaves(g: &mut Graph, params: &ParameterSet, trainable: impl Fn(usize) -> bool) -> Vec<NodeId> {
        params
            .tensors()
            .iter()
            .enumerate()
            .map(|(i, t)| if trainable(i) { g.param(t.clone()) } else { g.constant(t.clone()) })
            .collect()
    }

    pub fn encode(&self, instances: &[&ChannelInstance<f64>]) -> Result<Tensor> {
        encode_batch(&self.config, &self.standardization, instances)
    }

    /// Eval-mode Sigmoid outputs, one K-vector per instance.
    ///
    /// Computed directly rather than on a graph; the arithmetic follows the
    /// same order as [`forward`] in eval mode.
    pub fn predict(&self, instances: &[&ChannelInstance<f64>]) -> Result<Vec<Vec<f64>>> {
        let cfg = &self.config;
        let x = self.encode(instances)?;
        let (n, p, c) = (instances.len(), cfg.pixels(), cfg.channels);
        let t = self.params.tensors();
        let (fc_w, fc_b) = (t[8].data(), t[9].data());
        let mut h1 = vec![0.0; c * p];
        let mut h2 = vec![0.0; c * p];
        let mut out = Vec::with_capacity(n);
        for s in 0..n {
            let input = [&x.data()[s * p..(s + 1) * p], &x.data()[(n + s) * p..(n + s + 1) * p]];
            conv_bn_relu(cfg, &input, [&t[0], &t[1], &t[2], &t[3]], (&self.running.mean[0], &self.running.var[0]), &mut h1);
            let hidden: Vec<&[f64]> = h1.chunks(p).collect();
            conv_bn_relu(cfg, &hidden, [&t[4], &t[5], &t[6], &t[7]], (&self.running.mean[1], &self.running.var[1]), &mut h2);
            let scores = (0..cfg.k)
                .map(|k| {
                    let w = &fc_w[k * c * p..(k + 1) * c * p];
                    let z = h2.iter().zip(w).fold(0.0, |acc, (a, b)| if *a == 0.0 { acc } else { acc + a * b });
                    1.0 / (1.0 + (-(z + fc_b[k])).exp())
                })
                .collect();
            out.push(scores);
        }
        Ok(out)
    }

    /// Predicted uplink powers for one instance, summing to its budget.
    pub fn predict_power(&self, inst: &ChannelInstance<f64>) -> Result<Vec<f64>> {
        let s = self.predict(&[inst])?.remove(0);
        Ok(output_to_power(&s, inst.power))
    }
}

/// Mean-squared loss of `params` on `batch` together with the loss value and
/// train-mode BN statistics.
pub fn batch_loss(
    g: &mut Graph,
    model: &Model,
    params: &[NodeId],
    batch: &[SamplePair],
    mode: Mode,
) -> Result<(NodeId, Vec<BnBatchStats>)> {
    let refs: Vec<&ChannelInstance<f64>> = batch.iter().map(|p| &p.instance).collect();
    let input = g.constant(model.encode(&refs)?);
    let out = forward(g, &model.config, params, &model.running, input, mode)?;
    let labels = g.constant(label_tensor(batch)?);
    let loss = mse_loss(g, out.output, labels)?;
    Ok((loss, out.batch_stats))
}

/// First-order loss and gradients of the tensors selected by `trainable`
/// (other entries of the returned gradient list are zero).
pub fn loss_and_grads(
    model: &Model,
    params: &ParameterSet,
    batch: &[SamplePair],
    mode: Mode,
    trainable: impl Fn(usize) -> bool,
) -> Result<(f64, ParameterSet, Vec<BnBatchStats>)> {
    let mut g = Graph::new();
    let leaves = Model::leaves(&mut g, params, &trainable);
    let (loss, stats) = batch_loss(&mut g, model, &leaves, batch, mode)?;
    let grads = g.grad(loss, &leaves, false)?;
    let tensors = grads.iter().map(|id| g.value(*id).clone()).collect();
    Ok((g.value(loss).item(), ParameterSet::new(params.names().to_vec(), tensors)?, stats))
}
