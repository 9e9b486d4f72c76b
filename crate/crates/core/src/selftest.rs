//! Built-in consistency checks on synthetic data.
//!
//! Each check compares an implementation against an independent oracle
//! (finite differences, brute-force sums, closed forms). The CLI `selftest`
//! command prints one line per check and exits nonzero if any fails.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::attacks::{self, AttackSpec};
use crate::data::{self, Dataset};
use crate::error::Result;
use crate::explain::{self, AttributionTarget, ExplainConfig, ShapleyEstimator};
use crate::matrix::Matrix;
use crate::metrics;
use crate::model::{self, ModelParams};
use crate::rng::{self, Stream};

/// Central-difference step.
pub const FD_STEP: f64 = 1e-3;
/// Maximum relative error between analytic and numeric gradients.
pub const FD_TOLERANCE: f64 = 1e-4;
/// Coordinates whose hidden pre-activations pass within this distance of a
/// ReLU kink are excluded from the comparison.
pub const KINK_MARGIN: f64 = 1e-6;
/// Denominator floor guarding exactly-zero gradients of dead units.
pub const FD_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name,
            passed,
            detail: detail.into(),
        }
    }

    fn from_result(name: &'static str, r: Result<CheckOutcome>) -> Self {
        r.unwrap_or_else(|e| CheckOutcome::new(name, false, format!("error: {e}")))
    }
}

impl std::fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {:<22} {}", self.name, self.detail)
    }
}

/// Runs every check; the order is fixed.
pub fn run_all() -> Vec<CheckOutcome> {
    vec![
        CheckOutcome::from_result("gradient", check_gradients()),
        CheckOutcome::from_result("shapley-exact", check_shapley()),
        CheckOutcome::from_result("robustness-index", check_ri()),
        CheckOutcome::from_result("ball-containment", check_ball()),
        CheckOutcome::from_result("pgd-single-step", check_pgd_fgsm()),
        CheckOutcome::from_result("drift-at-zero", check_drift_zero()),
    ]
}

pub fn all_passed(outcomes: &[CheckOutcome]) -> bool {
    outcomes.iter().all(|o| o.passed)
}

fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(FD_FLOOR)
}

/// All hidden-layer pre-activations of every row, in a fixed order.
fn hidden_preactivations(params: &ModelParams, x: &Matrix) -> Vec<f64> {
    let layers = params.layers();
    let mut out = Vec::new();
    for row in x.iter_rows() {
        let mut a = row.to_vec();
        for layer in &layers[..layers.len() - 1] {
            let z: Vec<f64> = (0..layer.fan_out())
                .map(|j| {
                    layer.bias[j]
                        + a.iter()
                            .enumerate()
                            .map(|(i, v)| v * layer.weights.get(i, j))
                            .sum::<f64>()
                })
                .collect();
            out.extend(&z);
            a = z.into_iter().map(|v| v.max(0.0)).collect();
        }
    }
    out
}

/// True when some pre-activation lies within the kink margin at the base
/// point or changes sign between the two probe points.
fn near_kink(base: &[f64], minus: &[f64], plus: &[f64]) -> bool {
    base.iter().zip(minus).zip(plus).any(|((&z, &m), &p)| {
        z.abs() < KINK_MARGIN || (m > 0.0) != (z > 0.0) || (p > 0.0) != (z > 0.0)
    })
}

fn random_problem(index: u64) -> Result<(ModelParams, Matrix, Vec<usize>)> {
    let mut r = rng::derived(0x5e1f, Stream::Synth, index);
    let d = r.random_range(2..=8);
    let c = r.random_range(2..=3);
    let hidden = [r.random_range(3..=8), r.random_range(2..=6)];
    let mut params = model::init_params_with(d, &hidden, c, index)?;
    for layer in params.layers_mut() {
        layer
            .bias
            .iter_mut()
            .for_each(|b| *b = r.random_range(-0.3..0.3));
    }
    let n = 4;
    let x: Vec<f64> = (0..n * d).map(|_| r.sample(StandardNormal)).collect();
    let y = (0..n).map(|_| r.random_range(0..c)).collect();
    Ok((params, Matrix::from_vec(n, d, x)?, y))
}

/// Worst relative error of parameter and input gradients over 20 random nets.
fn check_gradients() -> Result<CheckOutcome> {
    let (mut worst, mut compared, mut skipped) = (0.0f64, 0usize, 0usize);
    for net in 0..20 {
        let (params, x, y) = random_problem(net)?;
        let base_z = hidden_preactivations(&params, &x);

        let analytic = model::grad_params(&params, &x, &y)?.flatten();
        for (k, &g) in analytic.iter().enumerate() {
            let probe = |delta: f64| -> Result<(f64, Vec<f64>)> {
                let mut p = params.clone();
                *p.params_mut().nth(k).unwrap() += delta;
                Ok((model::loss(&p, &x, &y)?, hidden_preactivations(&p, &x)))
            };
            let (lp, zp) = probe(FD_STEP)?;
            let (lm, zm) = probe(-FD_STEP)?;
            if near_kink(&base_z, &zm, &zp) {
                skipped += 1;
                continue;
            }
            worst = worst.max(relative_error(g, (lp - lm) / (2.0 * FD_STEP)));
            compared += 1;
        }

        let gx = model::grad_input(&params, &x, &y)?;
        for (i, (row, &label)) in x.iter_rows().zip(&y).enumerate() {
            let base = hidden_preactivations(&params, &Matrix::from_rows(&[row])?);
            for j in 0..x.cols() {
                let probe = |delta: f64| -> Result<(f64, Vec<f64>)> {
                    let mut v = row.to_vec();
                    v[j] += delta;
                    let m = Matrix::from_rows(&[&v])?;
                    Ok((
                        model::sample_loss(&params, &v, label),
                        hidden_preactivations(&params, &m),
                    ))
                };
                let (lp, zp) = probe(FD_STEP)?;
                let (lm, zm) = probe(-FD_STEP)?;
                if near_kink(&base, &zm, &zp) {
                    skipped += 1;
                    continue;
                }
                worst = worst.max(relative_error(gx.get(i, j), (lp - lm) / (2.0 * FD_STEP)));
                compared += 1;
            }
        }
    }
    Ok(CheckOutcome::new(
        "gradient",
        worst <= FD_TOLERANCE && compared > 0,
        format!("max rel err {worst:.2e} over {compared} coords ({skipped} near kinks skipped)"),
    ))
}

/// Efficiency and the linear closed form `φ_i = w_i (x_i − E[b_i])`.
fn check_shapley() -> Result<CheckOutcome> {
    let mut r = rng::derived(0x5a, Stream::Synth, 0);
    let d = 6;
    let w: Vec<f64> = (0..d).map(|_| r.random_range(-2.0..2.0)).collect();
    let linear = |v: &[f64]| v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + 0.5;
    let bg = Matrix::from_vec(8, d, (0..8 * d).map(|_| r.sample(StandardNormal)).collect())?;
    let x: Vec<f64> = (0..d).map(|_| r.sample(StandardNormal)).collect();
    let a = explain::shapley_exact(&linear, &x, &bg)?;
    let mut worst = 0.0f64;
    for j in 0..d {
        let mean_b = bg.column(j).iter().sum::<f64>() / bg.rows() as f64;
        worst = worst.max((a.phi[j] - w[j] * (x[j] - mean_b)).abs());
    }

    let (params, _, _) = random_problem(3)?;
    let target = explain::ModelOutput {
        params: &params,
        target: AttributionTarget::Probability(1),
    };
    let dim = params.input_dim();
    let bg = Matrix::from_vec(
        5,
        dim,
        (0..5 * dim).map(|_| r.sample(StandardNormal)).collect(),
    )?;
    let x: Vec<f64> = (0..dim).map(|_| r.sample(StandardNormal)).collect();
    let a = explain::shapley_exact(&target, &x, &bg)?;
    let gap = (a.phi.iter().sum::<f64>()
        - (explain::Predictor::predict(&target, &x) - a.base_value))
        .abs();
    worst = worst.max(gap);
    Ok(CheckOutcome::new(
        "shapley-exact",
        worst <= 1e-9,
        format!("max closed-form/efficiency error {worst:.2e}"),
    ))
}

fn check_ri() -> Result<CheckOutcome> {
    let grid = attacks::EpsilonGrid::linspace(0.3, 10)?;
    let eps = grid.values();
    let linear: Vec<f64> = eps.iter().map(|e| 1.0 - e / 0.3).collect();
    let constant = vec![0.73; eps.len()];
    let e1 = (metrics::robustness_index(eps, &linear)? - 0.5).abs();
    let e2 = (metrics::robustness_index(eps, &constant)? - 0.73).abs();
    let worst = e1.max(e2);
    Ok(CheckOutcome::new(
        "robustness-index",
        worst <= 1e-12,
        format!("linear/constant curve error {worst:.2e}"),
    ))
}

fn synthetic_model() -> Result<(ModelParams, Dataset)> {
    let raw = data::synth_gaussian(400, 6, 1.5, 5)?;
    let norm = data::fit_normalizer(&raw)?;
    let ds = data::apply_normalizer(&norm, &raw)?;
    let cfg = model::TrainConfig {
        epochs: 3,
        hidden: vec![16, 8],
        seed: 5,
        ..Default::default()
    };
    Ok((model::train(&ds, &cfg)?.0, ds))
}

fn check_ball() -> Result<CheckOutcome> {
    let (params, ds) = synthetic_model()?;
    let mut worst = 0.0f64;
    for &eps in &[0.05, 0.1, 0.3] {
        for (i, x) in ds.x.iter_rows().enumerate() {
            let f = attacks::fgsm(&params, x, ds.y[i], eps)?;
            worst = worst.max(attacks::linf_distance(&f, x) - eps);
            let spec = AttackSpec::pgd(eps);
            attacks::pgd_observed(&params, x, ds.y[i], &spec, i as u64, |it| {
                worst = worst.max(attacks::linf_distance(it, x) - eps);
            })?;
        }
    }
    Ok(CheckOutcome::new(
        "ball-containment",
        worst <= 1e-12,
        format!("max excess over budget {:.2e}", worst.max(0.0)),
    ))
}

fn check_pgd_fgsm() -> Result<CheckOutcome> {
    let (params, ds) = synthetic_model()?;
    let mut mismatches = 0;
    for (i, x) in ds.x.iter_rows().enumerate() {
        let eps = 0.1;
        let spec = AttackSpec {
            alpha: eps,
            iters: 1,
            ..AttackSpec::pgd(eps)
        };
        if attacks::pgd(&params, x, ds.y[i], &spec)? != attacks::fgsm(&params, x, ds.y[i], eps)? {
            mismatches += 1;
        }
    }
    Ok(CheckOutcome::new(
        "pgd-single-step",
        mismatches == 0,
        format!("{mismatches} of {} samples differ from FGSM", ds.len()),
    ))
}

fn check_drift_zero() -> Result<CheckOutcome> {
    let (params, ds) = synthetic_model()?;
    let bg = explain::sample_background(&ds, 10, 1)?;
    let cfg = ExplainConfig {
        estimator: ShapleyEstimator::Sampling { permutations: 20 },
        ..Default::default()
    };
    let drift = explain::attribution_drift(&params, &ds, &bg, &AttackSpec::fgsm(0.0), &cfg, 16, 1)?;
    let max = drift.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(CheckOutcome::new(
        "drift-at-zero",
        max == 0.0,
        format!("max |Δφ| at ε=0: {max:.2e}"),
    ))
}
