//! Feed-forward ReLU classifier with a softmax head.
//!
//! Weights are stored `fan_in × fan_out` row-major, so a layer computes
//! `z_j = b_j + Σ_i a_i W[i][j]`. All arithmetic is `f64`. Per-sample
//! gradients are accumulated sequentially in sample order, which keeps
//! training bit-reproducible.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{self, Stream};

pub const DEFAULT_HIDDEN: [usize; 2] = [64, 32];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Softmax,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `fan_in × fan_out`.
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn fan_in(&self) -> usize {
        self.weights.rows()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.cols()
    }

    fn affine_into(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&self.bias);
        for (i, &a) in input.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (o, w) in out.iter_mut().zip(self.weights.row(i)) {
                *o += a * w;
            }
        }
    }
}

/// Parameters of a stack of dense layers: ReLU hidden layers, softmax output.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    layers: Vec<DenseLayer>,
}

/// Gradient (or Adam moment) buffers with the same shapes as [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(params: &ModelParams) -> Self {
        Self {
            weights: params
                .layers
                .iter()
                .map(|l| Matrix::zeros(l.fan_in(), l.fan_out()))
                .collect(),
            biases: params
                .layers
                .iter()
                .map(|l| vec![0.0; l.fan_out()])
                .collect(),
        }
    }

    fn scale(&mut self, s: f64) {
        for w in &mut self.weights {
            w.as_mut_slice().iter_mut().for_each(|v| *v *= s);
        }
        for b in &mut self.biases {
            b.iter_mut().for_each(|v| *v *= s);
        }
    }

    /// All entries, layer by layer (weights then bias).
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b);
        }
        out
    }

    fn same_shape(&self, params: &ModelParams) -> bool {
        self.weights.len() == params.layers.len()
            && self
                .weights
                .iter()
                .zip(&self.biases)
                .zip(&params.layers)
                .all(|((w, b), l)| {
                    w.rows() == l.fan_in() && w.cols() == l.fan_out() && b.len() == l.fan_out()
                })
    }
}

/// Reusable activation buffers for repeated forward passes.
#[derive(Debug, Default, Clone)]
pub struct Scratch {
    front: Vec<f64>,
    back: Vec<f64>,
}

impl ModelParams {
    /// Validates the shape chain and activation layout.
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArgument(
                "model needs at least one layer".into(),
            ));
        }
        for (k, l) in layers.iter().enumerate() {
            if l.bias.len() != l.fan_out() {
                return Err(Error::DimensionMismatch {
                    expected: l.fan_out(),
                    got: l.bias.len(),
                });
            }
            if k > 0 && layers[k - 1].fan_out() != l.fan_in() {
                return Err(Error::DimensionMismatch {
                    expected: layers[k - 1].fan_out(),
                    got: l.fan_in(),
                });
            }
            let want = if k + 1 == layers.len() {
                Activation::Softmax
            } else {
                Activation::Relu
            };
            if l.activation != want {
                return Err(Error::InvalidArgument(format!(
                    "layer {k} must use {want:?} activation"
                )));
            }
            if !l.weights.all_finite() || l.bias.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("layer {k} parameters")));
            }
        }
        if layers[0].fan_in() == 0 || layers.last().unwrap().fan_out() < 2 {
            return Err(Error::InvalidArgument(
                "need d_in >= 1 and at least 2 classes".into(),
            ));
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn n_classes(&self) -> usize {
        self.layers.last().unwrap().fan_out()
    }

    /// `(rows, cols)` per weight matrix followed by bias length, layer by layer.
    pub fn shapes(&self) -> Vec<(usize, usize, usize)> {
        self.layers
            .iter()
            .map(|l| (l.fan_in(), l.fan_out(), l.bias.len()))
            .collect()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(l.weights.as_slice());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    /// Mutable references to every scalar parameter in [`flatten`](Self::flatten) order.
    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.as_mut_slice().iter_mut().chain(l.bias.iter_mut()))
    }

    /// Raw logits for one sample, written through `scratch`.
    pub fn logits_into<'s>(&self, x: &[f64], scratch: &'s mut Scratch) -> &'s [f64] {
        let Scratch { front, back } = scratch;
        front.clear();
        front.extend_from_slice(x);
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            layer.affine_into(front, back);
            if k < last {
                back.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            std::mem::swap(front, back);
        }
        front
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.logits_into(x, &mut Scratch::default()).to_vec()
    }

    /// Class probabilities for one sample.
    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.logits(x))
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("model input".into()));
        }
        Ok(())
    }

    fn check_batch(&self, x: &Matrix, y: Option<&[usize]>) -> Result<()> {
        if x.cols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.cols(),
            });
        }
        if !x.all_finite() {
            return Err(Error::NonFinite("model input".into()));
        }
        if let Some(y) = y {
            if y.len() != x.rows() {
                return Err(Error::DimensionMismatch {
                    expected: x.rows(),
                    got: y.len(),
                });
            }
            let c = self.n_classes();
            if let Some(bad) = y.iter().find(|&&v| v >= c) {
                return Err(Error::InvalidArgument(format!(
                    "label {bad} outside 0..{c}"
                )));
            }
        }
        Ok(())
    }

    /// Forward pass keeping every layer's post-activation output.
    fn trace(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::with_capacity(layer.fan_out());
            layer.affine_into(&acts[k], &mut out);
            if k < last {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(out);
        }
        // last entry holds logits
        acts
    }

    /// Loss and backprop for one sample. Adds parameter gradients into `grads`
    /// when given and returns the input gradient when `want_input`.
    fn backprop(
        &self,
        x: &[f64],
        y: usize,
        grads: Option<&mut Gradients>,
        want_input: bool,
    ) -> (f64, Option<Vec<f64>>) {
        let acts = self.trace(x);
        let logits = acts.last().unwrap();
        let lse = log_sum_exp(logits);
        let loss = lse - logits[y];
        // dL/dz = softmax(z) - onehot(y)
        let mut delta: Vec<f64> = logits.iter().map(|z| (z - lse).exp()).collect();
        delta[y] -= 1.0;

        let mut grads = grads;
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            let input = &acts[k];
            if let Some(g) = grads.as_deref_mut() {
                let gw = &mut g.weights[k];
                for (i, &a) in input.iter().enumerate() {
                    if a == 0.0 {
                        continue;
                    }
                    for (w, d) in gw.row_mut(i).iter_mut().zip(&delta) {
                        *w += a * d;
                    }
                }
                for (b, d) in g.biases[k].iter_mut().zip(&delta) {
                    *b += d;
                }
            }
            if k == 0 && !want_input {
                break;
            }
            let mut prev: Vec<f64> = (0..layer.fan_in())
                .map(|i| dot(layer.weights.row(i), &delta))
                .collect();
            if k > 0 {
                // ReLU derivative, taken as 0 at the kink
                for (p, &a) in prev.iter_mut().zip(input) {
                    if a <= 0.0 {
                        *p = 0.0;
                    }
                }
            }
            delta = prev;
        }
        let input_grad = if want_input {
            #[cfg(feature = "fault-injection")]
            delta.iter_mut().for_each(|v| *v *= 1.05);
            Some(delta)
        } else {
            None
        };
        (loss, input_grad)
    }
}

/// Glorot-uniform weights in `±sqrt(6/(fan_in+fan_out))`, zero biases, with the
/// default 64/32 hidden layout.
pub fn init_params(d_in: usize, n_classes: usize, seed: u64) -> Result<ModelParams> {
    init_params_with(d_in, &DEFAULT_HIDDEN, n_classes, seed)
}

pub fn init_params_with(
    d_in: usize,
    hidden: &[usize],
    n_classes: usize,
    seed: u64,
) -> Result<ModelParams> {
    if d_in == 0 || n_classes < 2 || hidden.contains(&0) {
        return Err(Error::InvalidArgument(format!(
            "invalid architecture: d_in={d_in}, hidden={hidden:?}, classes={n_classes}"
        )));
    }
    let mut rng = rng::derived(seed, Stream::Init, 0);
    let mut dims = vec![d_in];
    dims.extend_from_slice(hidden);
    dims.push(n_classes);
    let layers = dims
        .windows(2)
        .enumerate()
        .map(|(k, w)| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let data = (0..fan_in * fan_out)
                .map(|_| rng.random_range(-limit..limit))
                .collect();
            DenseLayer {
                weights: Matrix::from_vec(fan_in, fan_out, data).expect("shape"),
                bias: vec![0.0; fan_out],
                activation: if k + 2 == dims.len() {
                    Activation::Softmax
                } else {
                    Activation::Relu
                },
            }
        })
        .collect();
    ModelParams::new(layers)
}

pub fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(z);
    z.iter().map(|v| (v - lse).exp()).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// First index of the maximum.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Probability rows for each input row.
pub fn forward(params: &ModelParams, x: &Matrix) -> Result<Matrix> {
    params.check_batch(x, None)?;
    let c = params.n_classes();
    let mut out = Matrix::zeros(x.rows(), c);
    let mut scratch = Scratch::default();
    for (i, row) in x.iter_rows().enumerate() {
        let z = params.logits_into(row, &mut scratch);
        let lse = log_sum_exp(z);
        for (o, v) in out.row_mut(i).iter_mut().zip(z) {
            *o = (v - lse).exp();
        }
    }
    Ok(out)
}

/// Mean cross-entropy over the batch.
pub fn loss(params: &ModelParams, x: &Matrix, y: &[usize]) -> Result<f64> {
    params.check_batch(x, Some(y))?;
    let mut scratch = Scratch::default();
    let total: f64 = x
        .iter_rows()
        .zip(y)
        .map(|(row, &c)| {
            let z = params.logits_into(row, &mut scratch);
            log_sum_exp(z) - z[c]
        })
        .sum();
    Ok(total / x.rows().max(1) as f64)
}

/// Per-sample cross-entropy.
pub fn sample_loss(params: &ModelParams, x: &[f64], y: usize) -> f64 {
    let z = params.logits(x);
    log_sum_exp(&z) - z[y]
}

/// Mean loss and its exact gradient with respect to every parameter.
pub fn loss_and_grad(params: &ModelParams, x: &Matrix, y: &[usize]) -> Result<(f64, Gradients)> {
    params.check_batch(x, Some(y))?;
    if x.rows() == 0 {
        return Err(Error::Data("empty batch".into()));
    }
    let mut grads = Gradients::zeros_like(params);
    let mut total = 0.0;
    for (row, &c) in x.iter_rows().zip(y) {
        total += params.backprop(row, c, Some(&mut grads), false).0;
    }
    let n = x.rows() as f64;
    grads.scale(1.0 / n);
    Ok((total / n, grads))
}

pub fn grad_params(params: &ModelParams, x: &Matrix, y: &[usize]) -> Result<Gradients> {
    loss_and_grad(params, x, y).map(|(_, g)| g)
}

/// Gradient of the per-sample loss with respect to each input row (not averaged).
pub fn grad_input(params: &ModelParams, x: &Matrix, y: &[usize]) -> Result<Matrix> {
    params.check_batch(x, Some(y))?;
    let mut out = Matrix::zeros(x.rows(), x.cols());
    for (i, (row, &c)) in x.iter_rows().zip(y).enumerate() {
        let g = params.backprop(row, c, None, true).1.unwrap();
        out.row_mut(i).copy_from_slice(&g);
    }
    Ok(out)
}

/// Input gradient for a single sample.
pub fn grad_input_one(params: &ModelParams, x: &[f64], y: usize) -> Result<Vec<f64>> {
    params.check_input(x)?;
    if y >= params.n_classes() {
        return Err(Error::InvalidArgument(format!("label {y} out of range")));
    }
    Ok(params.backprop(x, y, None, true).1.unwrap())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_adam: f64,
    pub hidden: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            batch_size: 128,
            epochs: 20,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps_adam: 1e-8,
            hidden: DEFAULT_HIDDEN.to_vec(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be >= 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("Adam betas must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Gradients,
    pub v: Gradients,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        Self {
            m: Gradients::zeros_like(params),
            v: Gradients::zeros_like(params),
            t: 0,
        }
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(
    state: &mut AdamState,
    params: &mut ModelParams,
    grads: &Gradients,
    config: &TrainConfig,
) -> Result<()> {
    if !grads.same_shape(params) || !state.m.same_shape(params) || !state.v.same_shape(params) {
        return Err(Error::InvalidArgument(
            "gradient/optimizer shapes do not match parameters".into(),
        ));
    }
    state.t += 1;
    let (b1, b2) = (config.beta1, config.beta2);
    let t = state.t.min(i32::MAX as u64) as i32;
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    let lr = config.learning_rate;
    let eps = config.eps_adam;

    let update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
        for (((p, &g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    };
    for (k, layer) in params.layers.iter_mut().enumerate() {
        update(
            layer.weights.as_mut_slice(),
            grads.weights[k].as_slice(),
            state.m.weights[k].as_mut_slice(),
            state.v.weights[k].as_mut_slice(),
        );
        update(
            &mut layer.bias,
            &grads.biases[k],
            &mut state.m.biases[k],
            &mut state.v.biases[k],
        );
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean of the per-batch training losses, weighted by batch size.
    pub loss: f64,
    /// Full training-set accuracy after the epoch.
    pub accuracy: f64,
}

pub fn train(data: &Dataset, config: &TrainConfig) -> Result<(ModelParams, Vec<EpochRecord>)> {
    fit(data, config, |_, _, _, _| Ok(()))
}

/// Shared training loop. `hook` sees the current parameters, the batch
/// features/labels and the dataset indices making up the batch.
pub(crate) fn fit<F>(
    data: &Dataset,
    config: &TrainConfig,
    mut hook: F,
) -> Result<(ModelParams, Vec<EpochRecord>)>
where
    F: FnMut(&ModelParams, &mut Matrix, &mut Vec<usize>, &[usize]) -> Result<()>,
{
    config.validate()?;
    if data.is_empty() {
        return Err(Error::Data("cannot train on an empty dataset".into()));
    }
    let mut params = init_params_with(
        data.n_features(),
        &config.hidden,
        data.n_classes.max(2),
        config.seed,
    )?;
    let mut adam = AdamState::new(&params);
    let n = data.len();
    let mut history = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..n).collect();

    for epoch in 0..config.epochs {
        order.sort_unstable();
        order.shuffle(&mut rng::derived(
            config.seed,
            Stream::Shuffle,
            epoch as u64,
        ));
        let mut loss_sum = 0.0;
        let mut seen = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let mut bx = data.x.select_rows(chunk);
            let mut by: Vec<usize> = chunk.iter().map(|&i| data.y[i]).collect();
            hook(&params, &mut bx, &mut by, chunk)?;
            let (l, g) = loss_and_grad(&params, &bx, &by)?;
            if !l.is_finite() {
                return Err(Error::NonFinite(format!("training loss at epoch {epoch}")));
            }
            adam_step(&mut adam, &mut params, &g, config)?;
            loss_sum += l * by.len() as f64;
            seen += by.len();
        }
        let accuracy = evaluate(&params, data)?.accuracy;
        history.push(EpochRecord {
            epoch: epoch + 1,
            loss: loss_sum / seen as f64,
            accuracy,
        });
    }
    Ok((params, history))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub predictions: Vec<usize>,
    /// Probability assigned to the positive class.
    pub scores: Vec<f64>,
}

/// Accuracy, argmax predictions and class-1 probabilities.
pub fn evaluate(params: &ModelParams, data: &Dataset) -> Result<Evaluation> {
    evaluate_with(params, &data.x, &data.y, 1)
}

pub fn evaluate_with(
    params: &ModelParams,
    x: &Matrix,
    y: &[usize],
    positive_class: usize,
) -> Result<Evaluation> {
    params.check_batch(x, Some(y))?;
    if x.rows() == 0 {
        return Err(Error::Data("cannot evaluate on an empty dataset".into()));
    }
    if positive_class >= params.n_classes() {
        return Err(Error::InvalidArgument(format!(
            "positive class {positive_class} out of range"
        )));
    }
    let probs = forward(params, x)?;
    let predictions: Vec<usize> = probs.iter_rows().map(argmax).collect();
    let scores = probs.iter_rows().map(|p| p[positive_class]).collect();
    let correct = predictions.iter().zip(y).filter(|(p, t)| p == t).count();
    Ok(Evaluation {
        accuracy: correct as f64 / x.rows() as f64,
        predictions,
        scores,
    })
}

pub const CHECKPOINT_FORMAT: &str = "advdrift-mlp";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    layers: Vec<LayerRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LayerRecord {
    inputs: usize,
    outputs: usize,
    activation: Activation,
    /// Row-major `inputs × outputs`.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

/// JSON checkpoint; floats are written in shortest round-trip form so reloading is exact.
pub fn checkpoint_to_string(params: &ModelParams) -> Result<String> {
    let ck = Checkpoint {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        layers: params
            .layers
            .iter()
            .map(|l| LayerRecord {
                inputs: l.fan_in(),
                outputs: l.fan_out(),
                activation: l.activation,
                weights: l.weights.as_slice().to_vec(),
                bias: l.bias.clone(),
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&ck)?)
}

pub fn checkpoint_from_str(s: &str) -> Result<ModelParams> {
    let ck: Checkpoint = serde_json::from_str(s)?;
    if ck.format != CHECKPOINT_FORMAT {
        return Err(Error::Schema(format!(
            "unknown checkpoint format `{}`",
            ck.format
        )));
    }
    if ck.version != CHECKPOINT_VERSION {
        return Err(Error::Schema(format!(
            "unsupported checkpoint version {}",
            ck.version
        )));
    }
    let layers = ck
        .layers
        .into_iter()
        .map(|r| {
            Ok(DenseLayer {
                weights: Matrix::from_vec(r.inputs, r.outputs, r.weights)?,
                bias: r.bias,
                activation: r.activation,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ModelParams::new(layers)
}

pub fn save_checkpoint(params: &ModelParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, checkpoint_to_string(params)?).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ModelParams> {
    let path = path.as_ref();
    let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    checkpoint_from_str(&s)
}
