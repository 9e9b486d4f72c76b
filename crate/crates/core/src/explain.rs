//! Gradient feature sensitivity and Shapley attribution drift.
//!
//! Shapley values use the interventional value function: a coalition's
//! value is the model output with absent features taken from a background
//! row, averaged over the background set. [`shapley_exact`] enumerates all
//! coalitions and serves as the oracle for the permutation sampler
//! [`shapley_sample`].

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attacks::{self, AttackKind, AttackSpec, EpsilonGrid};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{self, ModelParams};
use crate::rng::{self, Stream};

/// Largest feature count accepted by [`shapley_exact`].
pub const MAX_EXACT_FEATURES: usize = 12;

/// Scalar model output being attributed.
pub trait Predictor: Sync {
    fn predict(&self, x: &[f64]) -> f64;
}

impl<F> Predictor for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn predict(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "class")]
pub enum AttributionTarget {
    /// Softmax probability of the class.
    Probability(usize),
    /// Raw logit of the class.
    Logit(usize),
}

impl Default for AttributionTarget {
    fn default() -> Self {
        AttributionTarget::Probability(1)
    }
}

/// A model paired with the output it is explained through.
#[derive(Debug, Clone, Copy)]
pub struct ModelOutput<'a> {
    pub params: &'a ModelParams,
    pub target: AttributionTarget,
}

impl Predictor for ModelOutput<'_> {
    fn predict(&self, x: &[f64]) -> f64 {
        let z = self.params.logits(x);
        match self.target {
            AttributionTarget::Logit(c) => z[c],
            AttributionTarget::Probability(c) => (z[c] - model::log_sum_exp(&z)).exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    /// Mean absolute input gradient of the loss, per feature.
    pub s: Vec<f64>,
    pub feature_names: Vec<String>,
    pub n_samples: usize,
    /// Rows of the evaluated dataset that were averaged.
    pub indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub phi: Vec<f64>,
    /// Mean model output over the background set.
    pub base_value: f64,
    /// Per-feature standard error; `None` for exact values.
    pub stderr: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ShapleyEstimator {
    Exact,
    Sampling { permutations: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplainConfig {
    pub estimator: ShapleyEstimator,
    pub target: AttributionTarget,
    /// Master seed for the Shapley sampler; each sample gets its own stream.
    pub seed: u64,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        Self {
            estimator: ShapleyEstimator::Sampling { permutations: 100 },
            target: AttributionTarget::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub feature_names: Vec<String>,
    pub attack: AttackKind,
    /// Budget at which `delta_phi` was measured.
    pub drift_epsilon: f64,
    pub delta_phi: Vec<f64>,
    pub grid_epsilons: Vec<f64>,
    /// `grid_epsilons.len() × d` mean absolute attribution change.
    pub grid: Vec<Vec<f64>>,
    /// Feature indices ranked by drift at the largest grid budget.
    pub top_k: Vec<usize>,
    pub sample_indices: Vec<usize>,
}

/// First `k` entries of a seeded permutation of `0..n`.
pub fn subsample_indices(n: usize, k: usize, seed: u64, stream: Stream) -> Result<Vec<usize>> {
    if k > n {
        return Err(Error::InvalidArgument(format!(
            "requested {k} samples from a set of {n}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::derived(seed, stream, 0));
    idx.truncate(k);
    Ok(idx)
}

/// Seeded background rows drawn without replacement from `data`.
pub fn sample_background(data: &Dataset, size: usize, seed: u64) -> Result<Matrix> {
    let idx = subsample_indices(data.len(), size.min(data.len()), seed, Stream::Background)?;
    Ok(data.x.select_rows(&idx))
}

/// `S_i = E|∂L/∂x_i|` over a seeded subsample of `n_samples` rows.
pub fn feature_sensitivity(
    params: &ModelParams,
    data: &Dataset,
    n_samples: usize,
    seed: u64,
) -> Result<SensitivityReport> {
    if data.is_empty() {
        return Err(Error::Data("sensitivity of an empty dataset".into()));
    }
    if n_samples == 0 {
        return Err(Error::InvalidArgument(
            "sensitivity needs at least one sample".into(),
        ));
    }
    let indices = subsample_indices(data.len(), n_samples, seed, Stream::Subsample)?;
    let grads: Vec<Vec<f64>> = indices
        .par_iter()
        .map(|&i| model::grad_input_one(params, data.x.row(i), data.y[i]))
        .collect::<Result<_>>()?;
    let mut s = vec![0.0; data.n_features()];
    for g in &grads {
        for (acc, v) in s.iter_mut().zip(g) {
            *acc += v.abs();
        }
    }
    let n = indices.len() as f64;
    s.iter_mut().for_each(|v| *v /= n);
    Ok(SensitivityReport {
        s,
        feature_names: data.feature_names.clone(),
        n_samples: indices.len(),
        indices,
    })
}

fn check_background(x: &[f64], background: &Matrix) -> Result<()> {
    if background.rows() == 0 {
        return Err(Error::InvalidArgument("background set is empty".into()));
    }
    if background.cols() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: background.cols(),
        });
    }
    if x.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot attribute a zero-feature input".into(),
        ));
    }
    Ok(())
}

fn background_mean<P: Predictor + ?Sized>(predict: &P, background: &Matrix) -> f64 {
    background
        .iter_rows()
        .map(|b| predict.predict(b))
        .sum::<f64>()
        / background.rows() as f64
}

/// Exact Shapley values by enumerating all `2^d` coalitions.
pub fn shapley_exact<P: Predictor + ?Sized>(
    predict: &P,
    x: &[f64],
    background: &Matrix,
) -> Result<Attribution> {
    check_background(x, background)?;
    let d = x.len();
    if d > MAX_EXACT_FEATURES {
        return Err(Error::InvalidArgument(format!(
            "exact Shapley values support at most {MAX_EXACT_FEATURES} features, got {d}; \
             use the sampling estimator"
        )));
    }
    let m = background.rows() as f64;
    let values: Vec<f64> = (0..1usize << d)
        .into_par_iter()
        .map(|mask| {
            let mut z = vec![0.0; d];
            let mut total = 0.0;
            for b in background.iter_rows() {
                for j in 0..d {
                    z[j] = if mask & (1 << j) != 0 { x[j] } else { b[j] };
                }
                total += predict.predict(&z);
            }
            total / m
        })
        .collect();

    // |S|!(d-|S|-1)!/d!
    let fact: Vec<f64> = (0..=d)
        .scan(1.0, |acc, k| {
            if k > 0 {
                *acc *= k as f64;
            }
            Some(*acc)
        })
        .collect();
    let weight: Vec<f64> = (0..d)
        .map(|s| fact[s] * fact[d - s - 1] / fact[d])
        .collect();

    let phi = (0..d)
        .map(|i| {
            let bit = 1usize << i;
            (0..1usize << d)
                .filter(|mask| mask & bit == 0)
                .map(|mask| {
                    weight[mask.count_ones() as usize] * (values[mask | bit] - values[mask])
                })
                .sum()
        })
        .collect();
    Ok(Attribution {
        phi,
        base_value: values[0],
        stderr: None,
    })
}

/// Monte-Carlo Shapley values from random feature orderings.
///
/// Permutation `k` is paired with background row `k mod m`, so when
/// `n_permutations` is a multiple of the background size the estimates sum
/// exactly to `f(x) − base_value`.
pub fn shapley_sample<P: Predictor + ?Sized>(
    predict: &P,
    x: &[f64],
    background: &Matrix,
    n_permutations: usize,
    seed: u64,
) -> Result<Attribution> {
    check_background(x, background)?;
    if n_permutations == 0 {
        return Err(Error::InvalidArgument(
            "need at least one permutation".into(),
        ));
    }
    let d = x.len();
    let mut rng = rng::derived(seed, Stream::Shapley, 0);
    let mut order: Vec<usize> = (0..d).collect();
    let mut sum = vec![0.0; d];
    let mut sum_sq = vec![0.0; d];
    let mut z = vec![0.0; d];
    for k in 0..n_permutations {
        order.shuffle(&mut rng);
        z.copy_from_slice(background.row(k % background.rows()));
        let mut prev = predict.predict(&z);
        for &j in &order {
            z[j] = x[j];
            let cur = predict.predict(&z);
            let delta = cur - prev;
            sum[j] += delta;
            sum_sq[j] += delta * delta;
            prev = cur;
        }
    }
    let p = n_permutations as f64;
    let phi: Vec<f64> = sum.iter().map(|s| s / p).collect();
    let stderr = sum
        .iter()
        .zip(&sum_sq)
        .map(|(s, sq)| {
            if n_permutations < 2 {
                return 0.0;
            }
            let mean = s / p;
            let var = ((sq - p * mean * mean) / (p - 1.0)).max(0.0);
            (var / p).sqrt()
        })
        .collect();
    Ok(Attribution {
        phi,
        base_value: background_mean(predict, background),
        stderr: Some(stderr),
    })
}

fn attribute(
    predict: &ModelOutput<'_>,
    x: &[f64],
    background: &Matrix,
    config: &ExplainConfig,
    sample_seed: u64,
) -> Result<Vec<f64>> {
    let a = match config.estimator {
        ShapleyEstimator::Exact => shapley_exact(predict, x, background)?,
        ShapleyEstimator::Sampling { permutations } => {
            shapley_sample(predict, x, background, permutations, sample_seed)?
        }
    };
    Ok(a.phi)
}

/// Per-budget mean absolute attribution change over a seeded subsample.
/// Clean and attacked inputs of one sample share a Shapley seed.
fn drift_rows(
    params: &ModelParams,
    data: &Dataset,
    background: &Matrix,
    spec: &AttackSpec,
    epsilons: &[f64],
    config: &ExplainConfig,
    indices: &[usize],
) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    if data.is_empty() || indices.is_empty() {
        return Err(Error::Data(
            "attribution drift needs at least one sample".into(),
        ));
    }
    let predict = ModelOutput {
        params,
        target: config.target,
    };
    let d = data.n_features();
    // per sample: one |Δφ| vector per budget
    let per_sample: Vec<Vec<Vec<f64>>> = indices
        .par_iter()
        .map(|&i| {
            let x = data.x.row(i);
            let y = data.y[i];
            let sample_seed: u64 = rng::derived(config.seed, Stream::Shapley, i as u64).random();
            let clean = attribute(&predict, x, background, config, sample_seed)?;
            epsilons
                .iter()
                .map(|&eps| {
                    let adv = attacks::attack_one(params, x, y, &spec.with_epsilon(eps), i as u64)?;
                    if adv == x {
                        return Ok(vec![0.0; d]);
                    }
                    let moved = attribute(&predict, &adv, background, config, sample_seed)?;
                    Ok(moved
                        .iter()
                        .zip(&clean)
                        .map(|(a, b)| (a - b).abs())
                        .collect())
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let n = indices.len() as f64;
    Ok((0..epsilons.len())
        .map(|e| {
            let mut row = vec![0.0; d];
            for s in &per_sample {
                for (acc, v) in row.iter_mut().zip(&s[e]) {
                    *acc += v;
                }
            }
            row.iter_mut().for_each(|v| *v /= n);
            row
        })
        .collect())
}

/// `Δφ_i = E|φ_i(x′) − φ_i(x)|` with `x′` produced by `spec`.
pub fn attribution_drift(
    params: &ModelParams,
    data: &Dataset,
    background: &Matrix,
    spec: &AttackSpec,
    config: &ExplainConfig,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let indices = subsample_indices(data.len(), n_samples, seed, Stream::Subsample)?;
    let mut rows = drift_rows(
        params,
        data,
        background,
        spec,
        &[spec.epsilon],
        config,
        &indices,
    )?;
    Ok(rows.pop().unwrap())
}

/// Drift at every budget of `grid`; features ranked by drift at the largest budget.
#[allow(clippy::too_many_arguments)]
pub fn drift_grid(
    params: &ModelParams,
    data: &Dataset,
    background: &Matrix,
    spec: &AttackSpec,
    grid: &EpsilonGrid,
    top_k: usize,
    config: &ExplainConfig,
    n_samples: usize,
    seed: u64,
) -> Result<DriftReport> {
    let indices = subsample_indices(data.len(), n_samples, seed, Stream::Subsample)?;
    let rows = drift_rows(
        params,
        data,
        background,
        spec,
        grid.values(),
        config,
        &indices,
    )?;
    let last = rows.last().unwrap().clone();
    Ok(DriftReport {
        feature_names: data.feature_names.clone(),
        attack: spec.kind,
        drift_epsilon: grid.max(),
        top_k: rank_desc(&last, top_k),
        delta_phi: last,
        grid_epsilons: grid.values().to_vec(),
        grid: rows,
        sample_indices: indices,
    })
}

/// Indices of the `k` largest values, ties broken by index.
pub fn rank_desc(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}
