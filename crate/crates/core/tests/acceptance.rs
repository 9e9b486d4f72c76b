//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria 1–9 run offline on synthetic data and closed-form oracles.
//! Criterion 10 reproduces published dataset numbers and only runs when
//! `ADVDRIFT_PHISHING_CSV` and/or `ADVDRIFT_UNSW_CSV` point at the CSV files
//! (label column from `ADVDRIFT_PHISHING_LABEL` / `ADVDRIFT_UNSW_LABEL`,
//! default `label`).
//!
//! Run with `cargo test -p advdrift --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use advdrift::advtrain::{self, AdvTrainConfig, ADV_TRAINED, BASELINE};
use advdrift::attacks::{self, AttackSpec, EpsilonGrid};
use advdrift::config::{RunConfig, SyntheticSpec};
use advdrift::data::{self, Dataset};
use advdrift::explain::{
    self, AttributionTarget, ExplainConfig, ModelOutput, Predictor, ShapleyEstimator,
};
use advdrift::metrics;
use advdrift::model::{self, Activation, DenseLayer, ModelParams, TrainConfig};
use advdrift::pipeline::{self, Stages};
use advdrift::report;
use advdrift::Matrix;

type Outcome = Result<String, String>;

struct Criterion {
    id: &'static str,
    name: &'static str,
    required: bool,
    run: fn() -> Option<Outcome>,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            id: "1",
            name: "gradient oracle",
            required: true,
            run: || Some(gradient_oracle()),
        },
        Criterion {
            id: "2",
            name: "robustness index oracle",
            required: true,
            run: || Some(ri_oracle()),
        },
        Criterion {
            id: "3",
            name: "attack-ball invariant",
            required: true,
            run: || Some(ball_invariant()),
        },
        Criterion {
            id: "4",
            name: "PGD/FGSM equivalence",
            required: true,
            run: || Some(pgd_fgsm_equivalence()),
        },
        Criterion {
            id: "5",
            name: "Shapley oracle",
            required: true,
            run: || Some(shapley_oracle()),
        },
        Criterion {
            id: "6",
            name: "drift identities",
            required: true,
            run: || Some(drift_identities()),
        },
        Criterion {
            id: "7",
            name: "adversarial-training ordering",
            required: true,
            run: || Some(adv_training_ordering()),
        },
        Criterion {
            id: "8",
            name: "first-order RI identity",
            required: true,
            run: || Some(taylor_identity()),
        },
        Criterion {
            id: "9",
            name: "determinism",
            required: true,
            run: || Some(determinism()),
        },
        Criterion {
            id: "10",
            name: "dataset reproduction (optional)",
            required: false,
            run: dataset_reproduction,
        },
    ];

    let mut failed_required = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            None => println!(
                "SKIP criterion {:>2} {}: dataset paths not set",
                c.id, c.name
            ),
            Some(Ok(detail)) => println!(
                "PASS criterion {:>2} {}: {detail} [{secs:.1}s]",
                c.id, c.name
            ),
            Some(Err(detail)) => {
                println!(
                    "FAIL criterion {:>2} {}: {detail} [{secs:.1}s]",
                    c.id, c.name
                );
                if c.required {
                    failed_required += 1;
                }
            }
        }
    }
    if failed_required == 0 {
        println!("acceptance: all required criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed_required} required criteria failed");
        ExitCode::FAILURE
    }
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn standardized(n: usize, d: usize, sep: f64, seed: u64) -> Dataset {
    let raw = data::synth_gaussian(n, d, sep, seed).unwrap();
    let norm = data::fit_normalizer(&raw).unwrap();
    data::apply_normalizer(&norm, &raw).unwrap()
}

fn quick_model(ds: &Dataset, hidden: Vec<usize>, epochs: usize, seed: u64) -> ModelParams {
    let cfg = TrainConfig {
        epochs,
        hidden,
        seed,
        ..Default::default()
    };
    model::train(ds, &cfg).unwrap().0
}

fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_vec(
        rows,
        cols,
        (0..rows * cols)
            .map(|_| rng.sample(StandardNormal))
            .collect(),
    )
    .unwrap()
}

// ---------------------------------------------------------------------------
// 1. Gradients against central finite differences of an independent forward pass.

const FD_H: f64 = 1e-3;
const FD_TOL: f64 = 1e-4;
const KINK: f64 = 1e-6;
/// Relative errors use `max(|analytic|, |numeric|, FD_FLOOR)`; the floor only
/// guards exactly-zero gradients of dead units.
const FD_FLOOR: f64 = 1e-12;

/// Mean cross-entropy and every hidden pre-activation, computed from the raw
/// weights without calling into the library's forward pass.
fn reference_loss(params: &ModelParams, x: &Matrix, y: &[usize]) -> (f64, Vec<f64>) {
    let layers = params.layers();
    let mut total = 0.0;
    let mut pre = Vec::new();
    for (r, row) in x.iter_rows().enumerate() {
        let mut a = row.to_vec();
        for (k, layer) in layers.iter().enumerate() {
            let mut z = layer.bias.clone();
            for (i, ai) in a.iter().enumerate() {
                for (j, zj) in z.iter_mut().enumerate() {
                    *zj += ai * layer.weights.get(i, j);
                }
            }
            if k + 1 < layers.len() {
                pre.extend(&z);
                a = z.iter().map(|v| if *v > 0.0 { *v } else { 0.0 }).collect();
            } else {
                a = z;
            }
        }
        let m = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + a.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        total += lse - a[y[r]];
    }
    (total / x.rows() as f64, pre)
}

fn crosses_kink(base: &[f64], lo: &[f64], hi: &[f64]) -> bool {
    base.iter()
        .zip(lo)
        .zip(hi)
        .any(|((&z, &l), &h)| z.abs() < KINK || (l > 0.0) != (z > 0.0) || (h > 0.0) != (z > 0.0))
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(FD_FLOOR)
}

fn gradient_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut worst_p, mut worst_x, mut compared, mut skipped) = (0.0f64, 0.0f64, 0, 0);
    for net in 0..20u64 {
        let d = rng.random_range(1..=8);
        let classes = rng.random_range(2..=4);
        let depth = rng.random_range(1..=3);
        let hidden: Vec<usize> = (0..depth).map(|_| rng.random_range(2..=7)).collect();
        let mut params = model::init_params_with(d, &hidden, classes, net).unwrap();
        for v in params.params_mut() {
            *v += 0.2 * rng.sample::<f64, _>(StandardNormal);
        }
        let n = 3;
        let x = normal_matrix(&mut rng, n, d);
        let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..classes)).collect();
        let (_, base_pre) = reference_loss(&params, &x, &y);

        let analytic = model::grad_params(&params, &x, &y).unwrap().flatten();
        for (k, &g) in analytic.iter().enumerate() {
            let shifted = |h: f64| {
                let mut p = params.clone();
                *p.params_mut().nth(k).unwrap() += h;
                reference_loss(&p, &x, &y)
            };
            let ((lp, zp), (lm, zm)) = (shifted(FD_H), shifted(-FD_H));
            if crosses_kink(&base_pre, &zm, &zp) {
                skipped += 1;
                continue;
            }
            worst_p = worst_p.max(rel_err(g, (lp - lm) / (2.0 * FD_H)));
            compared += 1;
        }

        let gx = model::grad_input(&params, &x, &y).unwrap();
        for r in 0..n {
            let row = Matrix::from_rows(&[x.row(r)]).unwrap();
            let (_, base) = reference_loss(&params, &row, &y[r..=r]);
            for j in 0..d {
                let shifted = |h: f64| {
                    let mut m = row.clone();
                    m.set(0, j, m.get(0, j) + h);
                    reference_loss(&params, &m, &y[r..=r])
                };
                let ((lp, zp), (lm, zm)) = (shifted(FD_H), shifted(-FD_H));
                if crosses_kink(&base, &zm, &zp) {
                    skipped += 1;
                    continue;
                }
                worst_x = worst_x.max(rel_err(gx.get(r, j), (lp - lm) / (2.0 * FD_H)));
                compared += 1;
            }
        }
    }
    check(
        worst_p <= FD_TOL && worst_x <= FD_TOL,
        format!(
            "max rel err params {worst_p:.2e}, inputs {worst_x:.2e} over {compared} coordinates ({skipped} near kinks excluded)"
        ),
    )
}

// ---------------------------------------------------------------------------
// 2. Robustness Index: closed forms, monotonicity and scaling.

fn reference_trapezoid(eps: &[f64], acc: &[f64]) -> f64 {
    let mut area = 0.0;
    for i in 1..eps.len() {
        area += (eps[i] - eps[i - 1]) * (acc[i] + acc[i - 1]) / 2.0;
    }
    area / eps[eps.len() - 1]
}

fn ri_oracle() -> Outcome {
    let grid = EpsilonGrid::linspace(0.3, 10).unwrap();
    let eps = grid.values();
    let linear: Vec<f64> = eps.iter().map(|e| 1.0 - e / 0.3).collect();
    let lin_err = (metrics::robustness_index(eps, &linear).unwrap() - 0.5).abs();
    let mut const_err = 0.0f64;
    for c in [0.0, 0.25, 0.5, 0.91, 1.0] {
        let ri = metrics::robustness_index(eps, &vec![c; eps.len()]).unwrap();
        const_err = const_err.max((ri - c).abs());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut violations = Vec::new();
    for t in 0..1000 {
        let n = rng.random_range(2..=20);
        let mut e: Vec<f64> = (0..n - 1).map(|_| rng.random_range(0.001..1.0)).collect();
        e.sort_by(f64::total_cmp);
        e.dedup();
        e.insert(0, 0.0);
        let a: Vec<f64> = (0..e.len()).map(|_| rng.random::<f64>()).collect();
        let ri = metrics::robustness_index(&e, &a).unwrap();
        if (ri - reference_trapezoid(&e, &a)).abs() > 1e-12 {
            violations.push(format!("curve {t}: trapezoid mismatch"));
        }
        let lo = a.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if ri < lo - 1e-12 || ri > hi + 1e-12 {
            violations.push(format!("curve {t}: RI outside [min, max]"));
        }
        // Pointwise-larger curve cannot have a smaller RI.
        let b: Vec<f64> = a
            .iter()
            .map(|v| (v + rng.random_range(0.0..0.2)).min(1.0))
            .collect();
        if metrics::robustness_index(&e, &b).unwrap() < ri - 1e-12 {
            violations.push(format!("curve {t}: monotonicity"));
        }
        // Scaling accuracies scales RI; stretching the ε axis leaves it unchanged.
        let s = rng.random_range(0.0..1.0);
        let scaled: Vec<f64> = a.iter().map(|v| v * s).collect();
        if (metrics::robustness_index(&e, &scaled).unwrap() - s * ri).abs() > 1e-12 {
            violations.push(format!("curve {t}: accuracy scaling"));
        }
        let k = rng.random_range(0.5..4.0);
        let stretched: Vec<f64> = e.iter().map(|v| v * k).collect();
        if (metrics::robustness_index(&stretched, &a).unwrap() - ri).abs() > 1e-12 {
            violations.push(format!("curve {t}: epsilon scaling"));
        }
    }
    check(
        lin_err <= 1e-12 && const_err <= 1e-12 && violations.is_empty(),
        format!(
            "linear {lin_err:.1e}, constant {const_err:.1e}, {} property violations on 1000 curves{}",
            violations.len(),
            violations.first().map(|v| format!(" (first: {v})")).unwrap_or_default()
        ),
    )
}

// ---------------------------------------------------------------------------
// 3. Every attacked point and every PGD iterate stays in the ε-ball.

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(u, v)| (u - v).abs())
        .fold(0.0, f64::max)
}

fn ball_invariant() -> Outcome {
    let ds = standardized(500, 8, 1.0, 3);
    let params = quick_model(&ds, vec![32, 16], 5, 3);
    let grid = EpsilonGrid::default();
    let (mut attacked, mut iterates, mut outside) = (0usize, 0usize, 0usize);
    let mut worst = f64::NEG_INFINITY;
    for &eps in grid.values() {
        for (i, x) in ds.x.iter_rows().enumerate() {
            let f = attacks::fgsm(&params, x, ds.y[i], eps).unwrap();
            let specs = [
                AttackSpec::pgd(eps),
                AttackSpec {
                    random_start: true,
                    seed: 9,
                    ..AttackSpec::pgd(eps)
                },
            ];
            let mut dists = vec![linf(&f, x)];
            for spec in &specs {
                let out = attacks::pgd_observed(&params, x, ds.y[i], spec, i as u64, |it| {
                    let dist = linf(it, x);
                    iterates += 1;
                    worst = worst.max(dist - eps);
                    if dist > eps + 1e-12 {
                        outside += 1;
                    }
                })
                .unwrap();
                dists.push(linf(&out, x));
            }
            for dist in dists {
                attacked += 1;
                worst = worst.max(dist - eps);
                if dist > eps + 1e-12 {
                    outside += 1;
                }
            }
        }
    }
    check(
        outside == 0 && attacked >= 10_000,
        format!(
            "{attacked} attacked samples and {iterates} PGD iterates, {outside} outside the ball (max excess {:.1e})",
            worst.max(0.0)
        ),
    )
}

// ---------------------------------------------------------------------------
// 4. A single PGD step with α ≥ ε is FGSM.

fn pgd_fgsm_equivalence() -> Outcome {
    let ds = standardized(1000, 6, 1.2, 4);
    let params = quick_model(&ds, vec![16, 8], 3, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut mismatches = 0;
    for (i, x) in ds.x.iter_rows().enumerate() {
        let eps = rng.random_range(0.001..0.5);
        let alpha = eps * rng.random_range(1.0..3.0);
        let spec = AttackSpec {
            alpha,
            iters: 1,
            random_start: false,
            ..AttackSpec::pgd(eps)
        };
        let p = attacks::pgd(&params, x, ds.y[i], &spec).unwrap();
        let f = attacks::fgsm(&params, x, ds.y[i], eps).unwrap();
        if p.iter().zip(&f).any(|(a, b)| a.to_bits() != b.to_bits()) {
            mismatches += 1;
        }
    }
    check(
        mismatches == 0,
        format!("{mismatches} of 1000 samples differ bitwise"),
    )
}

// ---------------------------------------------------------------------------
// 5. Shapley values: brute-force subset formula, closed form, sampler accuracy.

/// Shapley values straight from the subset-weight formula.
fn reference_shapley(f: &dyn Fn(&[f64]) -> f64, x: &[f64], background: &Matrix) -> Vec<f64> {
    let d = x.len();
    let value = |mask: usize| {
        background
            .iter_rows()
            .map(|b| {
                let z: Vec<f64> = (0..d)
                    .map(|j| if mask >> j & 1 == 1 { x[j] } else { b[j] })
                    .collect();
                f(&z)
            })
            .sum::<f64>()
            / background.rows() as f64
    };
    let fact = |n: usize| (1..=n).map(|v| v as f64).product::<f64>();
    let mut phi = vec![0.0; d];
    for (i, p) in phi.iter_mut().enumerate() {
        for mask in 0..1usize << d {
            if mask >> i & 1 == 1 {
                continue;
            }
            let s = mask.count_ones() as usize;
            let w = fact(s) * fact(d - s - 1) / fact(d);
            *p += w * (value(mask | 1 << i) - value(mask));
        }
    }
    phi
}

fn shapley_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);

    // Closed form on a linear function.
    let d = 7;
    let w: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
    let linear = |v: &[f64]| 0.3 + v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
    let bg = normal_matrix(&mut rng, 16, d);
    let mut closed_err = 0.0f64;
    for _ in 0..5 {
        let x: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let a = explain::shapley_exact(&linear, &x, &bg).unwrap();
        for j in 0..d {
            let mu = bg.column(j).iter().sum::<f64>() / bg.rows() as f64;
            closed_err = closed_err.max((a.phi[j] - w[j] * (x[j] - mu)).abs());
        }
    }

    // Efficiency and the subset formula on a trained MLP.
    let ds = standardized(600, 10, 1.5, 5);
    let params = quick_model(&ds, vec![32, 16], 10, 5);
    let target = ModelOutput {
        params: &params,
        target: AttributionTarget::Probability(1),
    };
    let bg = explain::sample_background(&ds, 32, 5).unwrap();
    let (mut eff_err, mut formula_err) = (0.0f64, 0.0f64);
    let (mut mae_sum, mut mae_n, mut scale) = (0.0, 0, 0.0f64);
    for i in 0..6 {
        let x = ds.x.row(i * 37);
        let exact = explain::shapley_exact(&target, x, &bg).unwrap();
        let fx = target.predict(x);
        eff_err = eff_err.max((exact.phi.iter().sum::<f64>() - (fx - exact.base_value)).abs());
        if i < 2 {
            let f = |v: &[f64]| target.predict(v);
            let reference = reference_shapley(&f, x, &bg);
            for (a, b) in exact.phi.iter().zip(&reference) {
                formula_err = formula_err.max((a - b).abs());
            }
        }
        let sampled = explain::shapley_sample(&target, x, &bg, 2000, 50 + i as u64).unwrap();
        for (a, b) in sampled.phi.iter().zip(&exact.phi) {
            mae_sum += (a - b).abs();
            mae_n += 1;
            scale = scale.max(b.abs());
        }
    }
    let mae = mae_sum / mae_n as f64;
    check(
        closed_err <= 1e-9 && eff_err <= 1e-9 && formula_err <= 1e-9 && mae <= 0.02,
        format!(
            "closed form {closed_err:.1e}, efficiency {eff_err:.1e}, subset formula {formula_err:.1e}, \
             sampler MAE {mae:.4} at 2000 permutations (max |φ| {scale:.3})"
        ),
    )
}

// ---------------------------------------------------------------------------
// 6. Attribution drift: zero at ε = 0, |w|ε on a linear model.

fn linear_model(w: &[f64]) -> ModelParams {
    let d = w.len();
    let mut weights = Matrix::zeros(d, 2);
    for (j, wj) in w.iter().enumerate() {
        weights.set(j, 1, *wj);
    }
    ModelParams::new(vec![DenseLayer {
        weights,
        bias: vec![0.0, 0.1],
        activation: Activation::Softmax,
    }])
    .unwrap()
}

fn drift_identities() -> Outcome {
    let ds = standardized(300, 6, 1.5, 6);
    let params = quick_model(&ds, vec![16, 8], 5, 6);
    let bg = explain::sample_background(&ds, 20, 6).unwrap();
    let mut zero_max = 0.0f64;
    for estimator in [
        ShapleyEstimator::Exact,
        ShapleyEstimator::Sampling { permutations: 40 },
    ] {
        for spec in [AttackSpec::fgsm(0.0), AttackSpec::pgd(0.0)] {
            let cfg = ExplainConfig {
                estimator,
                ..Default::default()
            };
            let drift = explain::attribution_drift(&params, &ds, &bg, &spec, &cfg, 40, 6).unwrap();
            zero_max = zero_max.max(drift.iter().fold(0.0, |m, v| m.max(v.abs())));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let w: Vec<f64> = (0..6)
        .map(|_| rng.random_range(0.2..2.0) * if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    let lin = linear_model(&w);
    let mut lin_err = 0.0f64;
    for estimator in [
        ShapleyEstimator::Exact,
        ShapleyEstimator::Sampling { permutations: 40 },
    ] {
        let cfg = ExplainConfig {
            estimator,
            target: AttributionTarget::Logit(1),
            seed: 1,
        };
        for eps in [0.05, 0.1, 0.3] {
            let drift =
                explain::attribution_drift(&lin, &ds, &bg, &AttackSpec::fgsm(eps), &cfg, 50, 7)
                    .unwrap();
            for (dj, wj) in drift.iter().zip(&w) {
                lin_err = lin_err.max((dj - wj.abs() * eps).abs());
            }
        }
    }
    check(
        zero_max == 0.0 && lin_err <= 1e-6,
        format!("max |Δφ| at ε=0 is {zero_max:.1e}; linear model |Δφ − |w|ε| ≤ {lin_err:.1e}"),
    )
}

// ---------------------------------------------------------------------------
// 7. Adversarial training raises RI on synthetic data.

fn adv_training_ordering() -> Outcome {
    // Φ(s·√d / 2) = 0.9 at d = 10 gives s ≈ 0.81.
    let raw = data::synth_gaussian(2000, 10, 0.81, 7).unwrap();
    let (tr, te) = data::split(&raw, 0.8, 42).unwrap();
    let norm = data::fit_normalizer(&tr).unwrap();
    let train = data::apply_normalizer(&norm, &tr).unwrap();
    let test = data::apply_normalizer(&norm, &te).unwrap();
    let grid = EpsilonGrid::default();
    let records: Vec<_> = [0u64, 1, 2]
        .iter()
        .map(|&seed| {
            let cfg = AdvTrainConfig {
                base: TrainConfig {
                    seed,
                    ..Default::default()
                },
                ..Default::default()
            };
            advtrain::run_ablation(
                "synthetic",
                &train,
                &test,
                &cfg,
                false,
                &AttackSpec::fgsm(0.0),
                &AttackSpec::pgd(0.0),
                &grid,
            )
            .unwrap()
        })
        .collect();
    let mean = advtrain::AblationRecord::mean(&records).unwrap();
    let (base, adv) = (mean.row(BASELINE).unwrap(), mean.row(ADV_TRAINED).unwrap());
    let gain = adv.ri_fgsm - base.ri_fgsm;
    let drop = base.clean_acc - adv.clean_acc;
    check(
        gain >= 0.02 && drop <= 0.05,
        format!(
            "clean {:.4} → {:.4} (drop {drop:.4}), RI_FGSM {:.4} → {:.4} (gain {gain:+.4}, need ≥ 0.02), \
             RI_PGD {:.4} → {:.4}",
            base.clean_acc, adv.clean_acc, base.ri_fgsm, adv.ri_fgsm, base.ri_pgd, adv.ri_pgd
        ),
    )
}

// ---------------------------------------------------------------------------
// 8. First-order estimate is exact on affine curves.

fn taylor_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let steps = rng.random_range(2..=15);
        let eps_max = rng.random_range(0.05..1.0);
        let grid = EpsilonGrid::linspace(eps_max, steps).unwrap();
        let a0 = rng.random_range(0.5..1.0);
        let slope = -rng.random_range(0.0..a0 / eps_max);
        let acc: Vec<f64> = grid.values().iter().map(|e| a0 + slope * e).collect();
        let s = metrics::curve_slope_at_zero(grid.values(), &acc).unwrap();
        let est = metrics::taylor_ri_estimate(acc[0], s, eps_max).unwrap();
        let ri = metrics::robustness_index(grid.values(), &acc).unwrap();
        worst = worst.max((est - ri).abs());
    }

    // Reported only: gap on trained models.
    let ds = standardized(1000, 10, 1.0, 8);
    let grid = EpsilonGrid::default();
    let mut gaps = Vec::new();
    for seed in 0..3 {
        let params = quick_model(&ds, vec![64, 32], 10, seed);
        for spec in [AttackSpec::fgsm(0.0), AttackSpec::pgd(0.0)] {
            let c = attacks::sweep(&params, &ds, &spec, &grid).unwrap();
            let est = metrics::taylor_ri_estimate(
                c.accuracies[0],
                c.slope_at_zero().unwrap(),
                grid.max(),
            )
            .unwrap();
            gaps.push((est - c.ri).abs());
        }
    }
    let max_gap = gaps.iter().cloned().fold(0.0, f64::max);
    check(
        worst <= 1e-12,
        format!("affine-curve error {worst:.1e} over 1000 curves; trained-model gap (reported) max {max_gap:.3}"),
    )
}

// ---------------------------------------------------------------------------
// 9. Identical configuration, identical bytes.

fn determinism() -> Outcome {
    let mut cfg = RunConfig {
        synthetic: Some(SyntheticSpec {
            n: 600,
            d: 8,
            separation: 1.0,
            seed: 9,
        }),
        seeds: vec![0, 1],
        ..Default::default()
    };
    cfg.train.epochs = 5;
    cfg.explain.n_samples = 32;
    cfg.explain.background = 20;
    cfg.explain.permutations = 40;
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut bytes = Vec::new();
    for dir in &dirs {
        let out = pipeline::execute(&cfg, Stages::all()).unwrap();
        pipeline::write_outputs(&cfg, &out, dir.path()).unwrap();
        bytes.push(std::fs::read(dir.path().join("report.json")).unwrap());
    }
    let parsed = report::parse_report(std::str::from_utf8(&bytes[0]).unwrap()).unwrap();
    check(
        bytes[0] == bytes[1] && parsed.ablation.is_some() && parsed.drift.is_some(),
        format!(
            "report.json {} bytes, runs {}",
            bytes[0].len(),
            if bytes[0] == bytes[1] {
                "identical"
            } else {
                "differ"
            }
        ),
    )
}

// ---------------------------------------------------------------------------
// 10. Published dataset numbers (optional, needs the CSV files).

struct Published {
    env: &'static str,
    label_env: &'static str,
    name: &'static str,
    max_rows: Option<usize>,
    clean: f64,
    ri_fgsm: f64,
    ri_pgd: f64,
    /// Precision, recall and AUC under FGSM at ε = 0.1.
    fgsm_metrics: [f64; 3],
}

const PUBLISHED: [Published; 2] = [
    Published {
        env: "ADVDRIFT_PHISHING_CSV",
        label_env: "ADVDRIFT_PHISHING_LABEL",
        name: "Phishing",
        max_rows: None,
        clean: 0.91,
        ri_fgsm: 0.615,
        ri_pgd: 0.756,
        fgsm_metrics: [0.74, 0.71, 0.80],
    },
    Published {
        env: "ADVDRIFT_UNSW_CSV",
        label_env: "ADVDRIFT_UNSW_LABEL",
        name: "UNSW-NB15",
        max_rows: Some(20_000),
        clean: 0.74,
        ri_fgsm: 0.692,
        ri_pgd: 0.733,
        fgsm_metrics: [0.70, 0.68, 0.78],
    },
];

fn dataset_reproduction() -> Option<Outcome> {
    let available: Vec<_> = PUBLISHED
        .iter()
        .filter_map(|p| std::env::var(p.env).ok().map(|path| (p, path)))
        .collect();
    if available.is_empty() {
        return None;
    }
    let mut ok = true;
    let mut details = Vec::new();
    for (p, path) in available {
        let mut cfg = RunConfig {
            data: Some(path.into()),
            label_col: std::env::var(p.label_env).unwrap_or_else(|_| "label".into()),
            max_rows: p.max_rows,
            ..Default::default()
        };
        cfg.attack.metrics_eps = vec![0.1];
        let out = match pipeline::execute(
            &cfg,
            Stages {
                sweep: true,
                ..Default::default()
            },
        ) {
            Ok(out) => out,
            Err(e) => return Some(Err(format!("{}: {e}", p.name))),
        };
        let r = &out.report;
        let clean = r.runs.iter().map(|x| x.clean_accuracy).sum::<f64>() / r.runs.len() as f64;
        let ri = |kind| {
            r.mean_curves
                .iter()
                .find(|c| c.meta.attack == kind)
                .unwrap()
                .ri
        };
        let (rf, rp) = (
            ri(advdrift::AttackKind::Fgsm),
            ri(advdrift::AttackKind::Pgd),
        );
        let m = r
            .metrics
            .iter()
            .find(|m| m.attack == advdrift::AttackKind::Fgsm)
            .unwrap();
        let got = [m.precision, m.recall, m.auc.unwrap_or(f64::NAN)];
        let pass = (clean - p.clean).abs() <= 0.03
            && (rf - p.ri_fgsm).abs() <= 0.08
            && (rp - p.ri_pgd).abs() <= 0.08
            && got
                .iter()
                .zip(&p.fgsm_metrics)
                .all(|(a, b)| (a - b).abs() <= 0.05);
        ok &= pass;
        details.push(format!(
            "{}: clean {clean:.3} (paper {}), RI_FGSM {rf:.3} ({}), RI_PGD {rp:.3} ({}), P/R/AUC {:.2}/{:.2}/{:.2} ({:?})",
            p.name, p.clean, p.ri_fgsm, p.ri_pgd, got[0], got[1], got[2], p.fgsm_metrics
        ));
    }
    Some(check(ok, details.join("; ")))
}
