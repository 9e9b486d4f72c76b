//! Robustness Index and classification metrics.

use serde::{Deserialize, Serialize};

use crate::attacks::{AttackKind, AttackSpec};
use crate::error::{Error, Result};

/// Quadrature used for the Robustness Index, recorded in reports.
pub const RI_QUADRATURE: &str = "trapezoid";

/// Identifies which attack and model produced a curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub attack: AttackKind,
    pub alpha: f64,
    pub iters: usize,
    pub random_start: bool,
    /// Model variant label, e.g. `baseline` or `adv-trained`.
    pub model: String,
    /// Training seed; `None` for a mean over seeds.
    pub seed: Option<u64>,
}

impl CurveMeta {
    pub fn for_attack(spec: &AttackSpec) -> Self {
        Self {
            attack: spec.kind,
            alpha: spec.alpha,
            iters: spec.iters,
            random_start: spec.random_start,
            model: "baseline".into(),
            seed: None,
        }
    }

    pub fn with_model(mut self, model: impl Into<String>, seed: Option<u64>) -> Self {
        self.model = model.into();
        self.seed = seed;
        self
    }
}

/// Accuracy as a function of the perturbation budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessCurve {
    pub epsilons: Vec<f64>,
    pub accuracies: Vec<f64>,
    /// Normalized area under the curve. A single-point curve reports its
    /// only accuracy, the limit of the normalized area as ε_max → 0.
    pub ri: f64,
    pub meta: CurveMeta,
}

impl RobustnessCurve {
    pub fn new(epsilons: Vec<f64>, accuracies: Vec<f64>, meta: CurveMeta) -> Result<Self> {
        validate_curve(&epsilons, &accuracies, 1)?;
        if accuracies.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::InvalidArgument(
                "accuracies must lie in [0, 1]".into(),
            ));
        }
        let ri = if epsilons.len() >= 2 {
            robustness_index(&epsilons, &accuracies)?
        } else {
            accuracies[0]
        };
        Ok(Self {
            epsilons,
            accuracies,
            ri,
            meta,
        })
    }

    pub fn slope_at_zero(&self) -> Result<f64> {
        curve_slope_at_zero(&self.epsilons, &self.accuracies)
    }

    /// Pointwise mean of curves sharing one ε grid.
    pub fn mean(curves: &[RobustnessCurve]) -> Result<RobustnessCurve> {
        let first = curves
            .first()
            .ok_or_else(|| Error::InvalidArgument("no curves to average".into()))?;
        if curves.iter().any(|c| c.epsilons != first.epsilons) {
            return Err(Error::InvalidArgument(
                "curves use different epsilon grids".into(),
            ));
        }
        let n = curves.len() as f64;
        let acc = (0..first.epsilons.len())
            .map(|i| curves.iter().map(|c| c.accuracies[i]).sum::<f64>() / n)
            .collect();
        let mut meta = first.meta.clone();
        meta.seed = None;
        RobustnessCurve::new(first.epsilons.clone(), acc, meta)
    }
}

fn validate_curve(eps: &[f64], acc: &[f64], min_points: usize) -> Result<()> {
    if eps.len() != acc.len() {
        return Err(Error::DimensionMismatch {
            expected: eps.len(),
            got: acc.len(),
        });
    }
    if eps.len() < min_points {
        return Err(Error::InvalidArgument(format!(
            "curve needs at least {min_points} points, got {}",
            eps.len()
        )));
    }
    if eps[0] != 0.0 {
        return Err(Error::InvalidArgument(
            "curve must start at epsilon 0".into(),
        ));
    }
    if eps.windows(2).any(|w| w[1] <= w[0]) || eps.iter().chain(acc).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "curve epsilons must be finite and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// `(1/ε_max) ∫ Acc(ε) dε` by the composite trapezoidal rule over the samples.
pub fn robustness_index(epsilons: &[f64], accuracies: &[f64]) -> Result<f64> {
    validate_curve(epsilons, accuracies, 2)?;
    let area: f64 = epsilons
        .windows(2)
        .zip(accuracies.windows(2))
        .map(|(e, a)| 0.5 * (e[1] - e[0]) * (a[0] + a[1]))
        .sum();
    let eps_max = *epsilons.last().unwrap();
    let lo = accuracies.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = accuracies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((area / eps_max).clamp(lo, hi))
}

/// Forward difference between the first two samples.
pub fn curve_slope_at_zero(epsilons: &[f64], accuracies: &[f64]) -> Result<f64> {
    validate_curve(epsilons, accuracies, 2)?;
    Ok((accuracies[1] - accuracies[0]) / (epsilons[1] - epsilons[0]))
}

/// First-order estimate `Acc(0) + ε_max·slope/2`, clamped to `[0, 1]`.
pub fn taylor_ri_estimate(acc0: f64, slope: f64, eps_max: f64) -> Result<f64> {
    if eps_max.is_nan() || eps_max <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "eps_max must be > 0, got {eps_max}"
        )));
    }
    Ok((acc0 + 0.5 * eps_max * slope).clamp(0.0, 1.0))
}

/// One-vs-rest precision and recall. Zero denominators yield 0.
pub fn precision_recall(
    predictions: &[usize],
    labels: &[usize],
    positive_class: usize,
) -> Result<(f64, f64)> {
    if predictions.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: predictions.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::InvalidArgument(
            "precision/recall of empty input".into(),
        ));
    }
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (&p, &t) in predictions.iter().zip(labels) {
        match (p == positive_class, t == positive_class) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            _ => {}
        }
    }
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    Ok((ratio(tp, tp + fp), ratio(tp, tp + fneg)))
}

/// Mann–Whitney AUC: probability that a random positive outscores a random
/// negative, ties counting one half.
pub fn roc_auc(scores: &[f64], labels: &[usize], positive_class: usize) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("AUC scores".into()));
    }
    let ranks = average_ranks(scores);
    let n_pos = labels.iter().filter(|&&l| l == positive_class).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InvalidArgument(
            "AUC needs both classes present".into(),
        ));
    }
    let rank_sum: f64 = ranks
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == positive_class)
        .map(|(r, _)| r)
        .sum();
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation; `None` when either input is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        None
    } else {
        Some(sab / (saa * sbb).sqrt())
    }
}

pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    pearson(&average_ranks(a), &average_ranks(b))
}

/// Accuracy, precision, recall and AUC of a model on (possibly attacked) inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedMetrics {
    pub attack: AttackKind,
    pub epsilon: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    /// `None` when only one class is present.
    pub auc: Option<f64>,
}

impl ExtendedMetrics {
    pub fn compute(
        attack: AttackKind,
        epsilon: f64,
        predictions: &[usize],
        scores: &[f64],
        labels: &[usize],
        positive_class: usize,
    ) -> Result<Self> {
        let (precision, recall) = precision_recall(predictions, labels, positive_class)?;
        let correct = predictions
            .iter()
            .zip(labels)
            .filter(|(p, t)| p == t)
            .count();
        Ok(Self {
            attack,
            epsilon,
            accuracy: correct as f64 / labels.len() as f64,
            precision,
            recall,
            auc: roc_auc(scores, labels, positive_class).ok(),
        })
    }

    /// Average of per-seed metrics at the same attack and budget.
    pub fn mean(items: &[ExtendedMetrics]) -> Result<ExtendedMetrics> {
        let first = items
            .first()
            .ok_or_else(|| Error::InvalidArgument("no metrics to average".into()))?;
        let n = items.len() as f64;
        let avg = |f: fn(&ExtendedMetrics) -> f64| items.iter().map(f).sum::<f64>() / n;
        let auc = items
            .iter()
            .map(|m| m.auc)
            .collect::<Option<Vec<f64>>>()
            .map(|v| v.iter().sum::<f64>() / n);
        Ok(ExtendedMetrics {
            attack: first.attack,
            epsilon: first.epsilon,
            accuracy: avg(|m| m.accuracy),
            precision: avg(|m| m.precision),
            recall: avg(|m| m.recall),
            auc,
        })
    }
}
