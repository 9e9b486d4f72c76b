//! L∞-bounded evasion attacks and ε sweeps.
//!
//! Attacks work in standardized feature space with no domain clipping and
//! ascend the cross-entropy of the true label. `sign(0)` is taken as 0.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::{CurveMeta, RobustnessCurve};
use crate::model::{self, ModelParams};
use crate::rng::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackKind {
    Fgsm,
    Pgd,
}

impl AttackKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AttackKind::Fgsm => "fgsm",
            AttackKind::Pgd => "pgd",
        }
    }
}

impl std::str::FromStr for AttackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fgsm" => Ok(AttackKind::Fgsm),
            "pgd" => Ok(AttackKind::Pgd),
            other => Err(Error::Config(format!("unknown attack `{other}`"))),
        }
    }
}

impl std::fmt::Display for AttackKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackSpec {
    pub kind: AttackKind,
    /// Radius of the L∞ ball, in z-score units.
    pub epsilon: f64,
    /// PGD step size.
    pub alpha: f64,
    /// PGD iteration count.
    pub iters: usize,
    pub random_start: bool,
    /// Seed for the random start; unused otherwise.
    pub seed: u64,
}

impl AttackSpec {
    pub fn fgsm(epsilon: f64) -> Self {
        Self {
            kind: AttackKind::Fgsm,
            epsilon,
            alpha: 0.01,
            iters: 1,
            random_start: false,
            seed: 0,
        }
    }

    pub fn pgd(epsilon: f64) -> Self {
        Self {
            kind: AttackKind::Pgd,
            epsilon,
            alpha: 0.01,
            iters: 10,
            random_start: false,
            seed: 0,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be finite and >= 0, got {}",
                self.epsilon
            )));
        }
        if self.kind == AttackKind::Pgd {
            if self.iters == 0 {
                return Err(Error::InvalidArgument(
                    "PGD needs at least one iteration".into(),
                ));
            }
            if !(self.alpha > 0.0 && self.alpha.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "PGD step size must be > 0, got {}",
                    self.alpha
                )));
            }
        }
        Ok(())
    }
}

/// Strictly increasing perturbation budgets starting at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonGrid {
    values: Vec<f64>,
}

impl EpsilonGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.first() != Some(&0.0) {
            return Err(Error::InvalidArgument(
                "epsilon grid must start at 0".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "epsilon grid values must be finite".into(),
            ));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "epsilon grid must be strictly increasing".into(),
            ));
        }
        Ok(Self { values })
    }

    /// `steps` evenly spaced values from 0 to `max` inclusive.
    pub fn linspace(max: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidArgument(
                "epsilon grid needs at least one point".into(),
            ));
        }
        if steps == 1 {
            return Self::new(vec![0.0]);
        }
        let last = (steps - 1) as f64;
        Self::new((0..steps).map(|i| max * i as f64 / last).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl Default for EpsilonGrid {
    fn default() -> Self {
        Self::linspace(0.3, 10).expect("default grid")
    }
}

#[inline]
pub fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Clamps each coordinate of `point` into `[center − ε, center + ε]`.
pub fn project_linf(center: &[f64], point: &[f64], epsilon: f64) -> Vec<f64> {
    let mut out = point.to_vec();
    project_linf_in_place(center, &mut out, epsilon);
    out
}

pub fn project_linf_in_place(center: &[f64], point: &mut [f64], epsilon: f64) {
    for (p, &c) in point.iter_mut().zip(center) {
        *p = p.clamp(c - epsilon, c + epsilon);
    }
}

/// L∞ distance between two points.
pub fn linf_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn input_gradient(params: &ModelParams, x: &[f64], y: usize) -> Result<Vec<f64>> {
    let g = model::grad_input_one(params, x, y)?;
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("input gradient during attack".into()));
    }
    Ok(g)
}

/// One signed-gradient step of size ε.
pub fn fgsm(params: &ModelParams, x: &[f64], y: usize, epsilon: f64) -> Result<Vec<f64>> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be >= 0, got {epsilon}"
        )));
    }
    if epsilon == 0.0 {
        return Ok(x.to_vec());
    }
    let g = input_gradient(params, x, y)?;
    Ok(x.iter()
        .zip(&g)
        .map(|(v, gi)| v + epsilon * sign(*gi))
        .collect())
}

/// Projected signed-gradient ascent; `observe` sees every iterate, starting point included.
pub fn pgd_observed<F: FnMut(&[f64])>(
    params: &ModelParams,
    x: &[f64],
    y: usize,
    spec: &AttackSpec,
    sample_index: u64,
    mut observe: F,
) -> Result<Vec<f64>> {
    spec.validate()?;
    if spec.epsilon == 0.0 {
        observe(x);
        return Ok(x.to_vec());
    }
    let eps = spec.epsilon;
    let mut cur = x.to_vec();
    if spec.random_start {
        let mut rng = rng::derived(spec.seed, Stream::RandomStart, sample_index);
        for v in cur.iter_mut() {
            *v += rng.random_range(-eps..=eps);
        }
        project_linf_in_place(x, &mut cur, eps);
    }
    observe(&cur);
    for _ in 0..spec.iters {
        let g = input_gradient(params, &cur, y)?;
        for (c, gi) in cur.iter_mut().zip(&g) {
            *c += spec.alpha * sign(*gi);
        }
        project_linf_in_place(x, &mut cur, eps);
        observe(&cur);
    }
    Ok(cur)
}

pub fn pgd(params: &ModelParams, x: &[f64], y: usize, spec: &AttackSpec) -> Result<Vec<f64>> {
    pgd_observed(params, x, y, spec, 0, |_| {})
}

/// Dispatches on `spec.kind`. `sample_index` selects the random-start stream.
pub fn attack_one(
    params: &ModelParams,
    x: &[f64],
    y: usize,
    spec: &AttackSpec,
    sample_index: u64,
) -> Result<Vec<f64>> {
    match spec.kind {
        AttackKind::Fgsm => fgsm(params, x, y, spec.epsilon),
        AttackKind::Pgd => pgd_observed(params, x, y, spec, sample_index, |_| {}),
    }
}

/// Attacks every row; rows are processed in parallel and written back by index.
pub fn attack_batch(
    params: &ModelParams,
    x: &Matrix,
    y: &[usize],
    spec: &AttackSpec,
) -> Result<Matrix> {
    spec.validate()?;
    if y.len() != x.rows() {
        return Err(Error::DimensionMismatch {
            expected: x.rows(),
            got: y.len(),
        });
    }
    if spec.epsilon == 0.0 {
        return Ok(x.clone());
    }
    let rows: Vec<Vec<f64>> = (0..x.rows())
        .into_par_iter()
        .map(|i| attack_one(params, x.row(i), y[i], spec, i as u64))
        .collect::<Result<_>>()?;
    Matrix::from_rows(&rows)
}

/// Accuracy under `spec` at each budget of `grid`.
pub fn sweep(
    params: &ModelParams,
    data: &Dataset,
    spec: &AttackSpec,
    grid: &EpsilonGrid,
) -> Result<RobustnessCurve> {
    if data.is_empty() {
        return Err(Error::Data("cannot sweep an empty dataset".into()));
    }
    spec.validate()?;
    let accuracies = grid
        .values()
        .iter()
        .map(|&eps| {
            let adv = attack_batch(params, &data.x, &data.y, &spec.with_epsilon(eps))?;
            Ok(
                model::evaluate_with(params, &adv, &data.y, 1.min(params.n_classes() - 1))?
                    .accuracy,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    RobustnessCurve::new(
        grid.values().to_vec(),
        accuracies,
        CurveMeta::for_attack(spec),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Activation, DenseLayer};

    fn binary_linear(w: &[f64], b: f64) -> ModelParams {
        // class-1 logit = w·x + b, class-0 logit = 0
        let rows: Vec<[f64; 2]> = w.iter().map(|&v| [0.0, v]).collect();
        ModelParams::new(vec![DenseLayer {
            weights: Matrix::from_rows(&rows).unwrap(),
            bias: vec![0.0, b],
            activation: Activation::Softmax,
        }])
        .unwrap()
    }

    #[test]
    fn sign_of_zero_is_zero() {
        assert_eq!(sign(0.0), 0.0);
        assert_eq!(sign(-0.0), 0.0);
        assert_eq!(sign(2.0), 1.0);
        assert_eq!(sign(-0.5), -1.0);
    }

    #[test]
    fn projection_clamps() {
        assert_eq!(
            project_linf(&[0.0, 0.0], &[0.5, -0.5], 0.1),
            vec![0.1, -0.1]
        );
        assert_eq!(
            project_linf(&[1.0, 1.0], &[1.05, 0.95], 0.1),
            vec![1.05, 0.95]
        );
    }

    #[test]
    fn fgsm_zero_budget_is_identity() {
        let p = binary_linear(&[1.0, -2.0], 0.0);
        assert_eq!(fgsm(&p, &[0.3, 0.4], 1, 0.0).unwrap(), vec![0.3, 0.4]);
    }

    #[test]
    fn fgsm_moves_by_sign_of_gradient() {
        // input gradient for y=1 is w (p1 - 1), so its sign is -sign(w)
        let p = binary_linear(&[-2.0, 0.5, 0.0], 0.0);
        let x = [0.0, 0.0, 0.0];
        let g = model::grad_input_one(&p, &x, 1).unwrap();
        assert!(g[0] > 0.0 && g[1] < 0.0 && g[2] == 0.0);
        let adv = fgsm(&p, &x, 1, 0.1).unwrap();
        assert_eq!(adv, vec![0.1, -0.1, 0.0]);
    }

    #[test]
    fn fgsm_reduces_linear_margin_by_l1_norm() {
        let w = [0.7, -1.3, 0.2, 2.0];
        let p = binary_linear(&w, 0.1);
        let x = [0.5, 0.1, -0.3, 0.2];
        let margin = |v: &[f64]| {
            let z = p.logits(v);
            z[1] - z[0]
        };
        let eps = 0.05;
        let adv = fgsm(&p, &x, 1, eps).unwrap();
        let l1: f64 = w.iter().map(|v| v.abs()).sum();
        assert!((margin(&x) - margin(&adv) - eps * l1).abs() < 1e-12);
    }

    #[test]
    fn pgd_zero_budget_is_identity() {
        let p = binary_linear(&[1.0, 1.0], 0.0);
        let spec = AttackSpec::pgd(0.0);
        assert_eq!(pgd(&p, &[0.2, 0.1], 0, &spec).unwrap(), vec![0.2, 0.1]);
    }

    #[test]
    fn pgd_reaches_ball_corner_on_linear_model() {
        let p = binary_linear(&[1.0, -1.0, 0.5], 0.0);
        let x = [0.1, 0.2, -0.3];
        let eps = 0.05;
        let spec = AttackSpec {
            iters: (eps / 0.01f64).ceil() as usize,
            ..AttackSpec::pgd(eps)
        };
        let adv = pgd(&p, &x, 1, &spec).unwrap();
        let corner = fgsm(&p, &x, 1, eps).unwrap();
        for (a, c) in adv.iter().zip(&corner) {
            assert!((a - c).abs() < 1e-12);
        }
    }

    #[test]
    fn pgd_random_start_stays_in_ball_and_is_seeded() {
        let p = crate::model::init_params_with(3, &[4], 2, 2).unwrap();
        let spec = AttackSpec {
            random_start: true,
            seed: 5,
            ..AttackSpec::pgd(0.1)
        };
        let x = [0.2, -0.4, 1.0];
        let mut worst: f64 = 0.0;
        let a = pgd_observed(&p, &x, 0, &spec, 3, |it| {
            worst = worst.max(linf_distance(it, &x))
        })
        .unwrap();
        let b = pgd_observed(&p, &x, 0, &spec, 3, |_| {}).unwrap();
        assert_eq!(a, b);
        assert!(worst <= 0.1 + 1e-12);
    }

    #[test]
    fn spec_and_grid_validation() {
        assert!(AttackSpec::fgsm(-0.1).validate().is_err());
        assert!(AttackSpec {
            iters: 0,
            ..AttackSpec::pgd(0.1)
        }
        .validate()
        .is_err());
        assert!(AttackSpec {
            alpha: 0.0,
            ..AttackSpec::pgd(0.1)
        }
        .validate()
        .is_err());
        assert!(EpsilonGrid::new(vec![0.1, 0.2]).is_err());
        assert!(EpsilonGrid::new(vec![0.0, 0.2, 0.2]).is_err());
        let g = EpsilonGrid::default();
        assert_eq!(g.len(), 10);
        assert_eq!(g.values()[0], 0.0);
        assert_eq!(g.max(), 0.3);
        assert!("PGD".parse::<AttackKind>().unwrap() == AttackKind::Pgd);
        assert!("l2".parse::<AttackKind>().is_err());
    }

    #[test]
    fn single_point_sweep_reports_clean_accuracy() {
        let p = binary_linear(&[1.0], 0.0);
        let data = Dataset::new(
            Matrix::from_rows(&[[1.0], [-1.0], [0.5]]).unwrap(),
            vec![1, 0, 0],
            vec!["a".into()],
            2,
        )
        .unwrap();
        let curve = sweep(
            &p,
            &data,
            &AttackSpec::fgsm(0.0),
            &EpsilonGrid::new(vec![0.0]).unwrap(),
        )
        .unwrap();
        let clean = model::evaluate(&p, &data).unwrap().accuracy;
        assert_eq!(curve.epsilons, vec![0.0]);
        assert_eq!(curve.accuracies, vec![clean]);
    }
}
