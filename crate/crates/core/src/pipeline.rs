//! End-to-end runs: data preparation, training per seed, attack sweeps,
//! explainability, and the adversarial-training ablation.
//!
//! [`execute`] is pure given the configuration; [`write_outputs`] lays the
//! results out on disk.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::advtrain::{self, AblationRecord};
use crate::attacks::{self, AttackKind};
use crate::config::RunConfig;
use crate::data::{self, Dataset};
use crate::error::{Error, Result};
use crate::explain::{self, MAX_EXACT_FEATURES};
use crate::metrics::{self, ExtendedMetrics, RobustnessCurve, RI_QUADRATURE};
use crate::model::{self, ModelParams};
use crate::report::{self, Diagnostics, Provenance, RunReport, SeedRun, TaylorCheck};
use crate::rng::Stream;

/// Standardized train/test partitions plus provenance.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: Dataset,
    pub test: Dataset,
    pub provenance: Provenance,
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let (mut raw, path, hash) = match (&cfg.data, &cfg.synthetic) {
        (Some(path), _) => {
            let raw = data::load_csv(path, &cfg.label_col)?;
            let hash = report::hash_file(path)?;
            (raw, Some(path.display().to_string()), Some(hash))
        }
        (None, Some(s)) => (
            data::synth_gaussian(s.n, s.d, s.separation, s.seed)?,
            None,
            None,
        ),
        (None, None) => {
            return Err(Error::Config(
                "no dataset: pass --data or configure [synthetic]".into(),
            ))
        }
    };
    let mut subsample_rows = None;
    if let Some(cap) = cfg.max_rows {
        if cap < raw.len() {
            let idx =
                explain::subsample_indices(raw.len(), cap, cfg.split_seed, Stream::Subsample)?;
            raw = crate::data::RawDataset {
                rows: raw.rows.select_rows(&idx),
                labels: idx.iter().map(|&i| raw.labels[i]).collect(),
                ..raw
            };
            subsample_rows = Some(cap);
        }
    }
    if cfg.positive_class >= raw.n_classes() {
        return Err(Error::Config(format!(
            "positive class {} but the data has {} classes",
            cfg.positive_class,
            raw.n_classes()
        )));
    }
    let (train_raw, test_raw) = data::split(&raw, cfg.split, cfg.split_seed)?;
    let norm = data::fit_normalizer(&train_raw)?;
    let train = data::apply_normalizer(&norm, &train_raw)?;
    let test = data::apply_normalizer(&norm, &test_raw)?;
    if test.is_empty() {
        return Err(Error::Data("test split is empty".into()));
    }
    let provenance = Provenance {
        dataset_path: path,
        dataset_sha256: hash,
        label_column: cfg.data.as_ref().map(|_| cfg.label_col.clone()),
        class_names: raw.class_names.clone(),
        n_rows: raw.len(),
        n_features: raw.n_features(),
        subsample_rows,
        seeds: cfg.seeds.clone(),
        config: serde_json::to_value(cfg)?,
        timestamp: cfg.timestamp.clone(),
        ri_quadrature: RI_QUADRATURE.into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
    };
    Ok(Prepared {
        train,
        test,
        provenance,
    })
}

/// Which stages to run after training.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stages {
    pub sweep: bool,
    pub explain: bool,
    pub ablation: bool,
}

impl Stages {
    pub fn all() -> Self {
        Self {
            sweep: true,
            explain: true,
            ablation: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    /// Trained (or loaded) model per seed.
    pub models: Vec<(u64, ModelParams)>,
    pub trained: bool,
}

pub fn execute(cfg: &RunConfig, stages: Stages) -> Result<RunOutput> {
    cfg.validate()?;
    let prepared = prepare(cfg)?;
    let Prepared {
        train,
        test,
        provenance,
    } = prepared;
    let mut report = RunReport::new(provenance);

    let trained = cfg.checkpoint.is_none();
    let models: Vec<(u64, ModelParams, Vec<model::EpochRecord>)> = match &cfg.checkpoint {
        Some(path) => {
            let params = model::load_checkpoint(path)?;
            if params.input_dim() != train.n_features() {
                return Err(Error::Config(format!(
                    "checkpoint expects {} features, data has {}",
                    params.input_dim(),
                    train.n_features()
                )));
            }
            vec![(cfg.seeds[0], params, Vec::new())]
        }
        None => cfg
            .seeds
            .par_iter()
            .map(|&seed| {
                let (p, h) = model::train(&train, &cfg.train_config(seed))?;
                Ok((seed, p, h))
            })
            .collect::<Result<_>>()?,
    };
    for (seed, params, history) in &models {
        report.runs.push(SeedRun {
            seed: *seed,
            clean_accuracy: model::evaluate(params, &test)?.accuracy,
            history: history.clone(),
        });
    }

    let grid = cfg.grid()?;
    let mut diagnostics = Diagnostics::default();
    let mut have_diagnostics = false;

    if stages.sweep {
        let per_seed: Vec<(Vec<RobustnessCurve>, Vec<ExtendedMetrics>)> = models
            .par_iter()
            .map(|(seed, params, _)| {
                let mut curves = Vec::new();
                let mut mets = Vec::new();
                for &kind in &cfg.attack.kinds {
                    let spec = cfg.attack_spec(kind);
                    let mut curve = attacks::sweep(params, &test, &spec, &grid)?;
                    curve.meta = curve.meta.with_model(advtrain::BASELINE, Some(*seed));
                    curves.push(curve);
                    for &eps in &cfg.attack.metrics_eps {
                        let adv = attacks::attack_batch(
                            params,
                            &test.x,
                            &test.y,
                            &spec.with_epsilon(eps),
                        )?;
                        let ev = model::evaluate_with(params, &adv, &test.y, cfg.positive_class)?;
                        mets.push(ExtendedMetrics::compute(
                            kind,
                            eps,
                            &ev.predictions,
                            &ev.scores,
                            &test.y,
                            cfg.positive_class,
                        )?);
                    }
                }
                Ok((curves, mets))
            })
            .collect::<Result<_>>()?;

        for &kind in &cfg.attack.kinds {
            let group: Vec<RobustnessCurve> = per_seed
                .iter()
                .flat_map(|(c, _)| c.iter().filter(|c| c.meta.attack == kind).cloned())
                .collect();
            report.mean_curves.push(RobustnessCurve::mean(&group)?);
            for &eps in &cfg.attack.metrics_eps {
                let group: Vec<ExtendedMetrics> = per_seed
                    .iter()
                    .flat_map(|(_, m)| {
                        m.iter()
                            .filter(|m| m.attack == kind && m.epsilon == eps)
                            .cloned()
                    })
                    .collect();
                report.metrics.push(ExtendedMetrics::mean(&group)?);
            }
        }
        report.curves = per_seed.into_iter().flat_map(|(c, _)| c).collect();

        for c in report.curves.iter().chain(&report.mean_curves) {
            let slope = c.slope_at_zero()?;
            let estimate = metrics::taylor_ri_estimate(c.accuracies[0], slope, grid.max())?;
            diagnostics.taylor.push(TaylorCheck {
                attack: c.meta.attack,
                seed: c.meta.seed,
                ri: c.ri,
                estimate,
                gap: (estimate - c.ri).abs(),
            });
        }
        have_diagnostics = true;
    }

    if stages.explain {
        let (seed, params, _) = &models[0];
        let d = test.n_features();
        if cfg.explain.exact && d > MAX_EXACT_FEATURES {
            return Err(Error::Config(format!(
                "--exact supports at most {MAX_EXACT_FEATURES} features but the data has {d}; \
                 drop --exact to use the sampling estimator"
            )));
        }
        let n = cfg.explain.n_samples.min(test.len());
        let sensitivity = explain::feature_sensitivity(params, &test, n, *seed)?;
        let background = explain::sample_background(&train, cfg.explain.background, *seed)?;
        let ecfg = cfg.explain_config(*seed);
        let spec = cfg.attack_spec(cfg.explain.drift_attack);
        let mut drift = explain::drift_grid(
            params,
            &test,
            &background,
            &spec,
            &grid,
            cfg.explain.top_k.min(d),
            &ecfg,
            n,
            *seed,
        )?;
        let drift_eps = cfg.explain.drift_eps;
        match drift
            .grid_epsilons
            .iter()
            .position(|&e| (e - drift_eps).abs() < 1e-12)
        {
            Some(row) => drift.delta_phi = drift.grid[row].clone(),
            None => {
                drift.delta_phi = explain::attribution_drift(
                    params,
                    &test,
                    &background,
                    &spec.with_epsilon(drift_eps),
                    &ecfg,
                    n,
                    *seed,
                )?;
            }
        }
        drift.drift_epsilon = drift_eps;

        diagnostics.sensitivity_drift_spearman =
            metrics::spearman(&sensitivity.s, &drift.delta_phi);
        let top = cfg.explain.top_k.min(d);
        diagnostics.top_sensitivity = explain::rank_desc(&sensitivity.s, top)
            .into_iter()
            .map(|j| test.feature_names[j].clone())
            .collect();
        diagnostics.top_drift = explain::rank_desc(&drift.delta_phi, top)
            .into_iter()
            .map(|j| test.feature_names[j].clone())
            .collect();

        if stages.sweep && models.len() >= 2 {
            let mut norms = Vec::new();
            let mut slopes = Vec::new();
            for (s, p, _) in &models {
                let sens = explain::feature_sensitivity(p, &test, n, *seed)?;
                let curve = report
                    .curves
                    .iter()
                    .find(|c| c.meta.seed == Some(*s) && c.meta.attack == AttackKind::Fgsm);
                if let Some(c) = curve {
                    norms.push(sens.s.iter().sum::<f64>());
                    slopes.push(c.slope_at_zero()?.abs());
                }
            }
            diagnostics.gradnorm_slope_pearson = metrics::pearson(&norms, &slopes);
        }
        report.sensitivity = Some(sensitivity);
        report.drift = Some(drift);
        have_diagnostics = true;
    }

    if stages.ablation {
        let name = cfg.dataset_label();
        let fgsm = cfg.attack_spec(AttackKind::Fgsm);
        let pgd = cfg.attack_spec(AttackKind::Pgd);
        let records: Vec<AblationRecord> = models
            .par_iter()
            .map(|(seed, params, _)| {
                advtrain::run_ablation_with_baseline(
                    &name,
                    params.clone(),
                    &train,
                    &test,
                    &cfg.adv_config(*seed),
                    cfg.adv.baseline_only,
                    &fgsm,
                    &pgd,
                    &grid,
                )
            })
            .collect::<Result<_>>()?;
        report.ablation = Some(AblationRecord::mean(&records)?);
    }

    if have_diagnostics {
        report.diagnostics = Some(diagnostics);
    }
    Ok(RunOutput {
        report,
        models: models.into_iter().map(|(s, p, _)| (s, p)).collect(),
        trained,
    })
}

fn curve_stem(c: &RobustnessCurve) -> String {
    let seed = c
        .meta
        .seed
        .map_or("mean".to_string(), |s| format!("seed{s}"));
    format!("{}_{}_{}", c.meta.model.to_lowercase(), c.meta.attack, seed)
}

/// Writes the report, merged config, checkpoints and plot-data files into `dir`.
pub fn write_outputs(cfg: &RunConfig, output: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: String| {
        let p = dir.join(name);
        written.push(p.clone());
        p
    };

    let cfg_path = put("config.toml".into());
    std::fs::write(&cfg_path, cfg.to_toml_string()?).map_err(|e| Error::io(&cfg_path, e))?;

    let report = &output.report;
    report::emit_report(report, put("report.json".into()))?;

    if output.trained {
        for (seed, params) in &output.models {
            model::save_checkpoint(params, put(format!("model_seed{seed}.json")))?;
        }
        for run in &report.runs {
            report::emit_history_csv(&run.history, put(format!("history_seed{}.csv", run.seed)))?;
        }
    }
    for c in report.curves.iter().chain(&report.mean_curves) {
        let stem = curve_stem(c);
        report::emit_curve_csv(c, put(format!("curve_{stem}.csv")))?;
        report::emit_curve_json(c, put(format!("curve_{stem}.json")))?;
    }
    if !report.metrics.is_empty() {
        report::emit_metrics_csv(&report.metrics, put("metrics.csv".into()))?;
    }
    if report.sensitivity.is_some() || report.drift.is_some() {
        report::emit_sensitivity_csv(
            report.sensitivity.as_ref(),
            report.drift.as_ref(),
            put("sensitivity.csv".into()),
        )?;
    }
    if let Some(drift) = &report.drift {
        report::emit_grid_csv(drift, put("drift_grid.csv".into()))?;
    }
    if let Some(ab) = &report.ablation {
        report::emit_table_csv(ab, put("ablation_table.csv".into()))?;
        for c in &ab.curves {
            report::emit_curve_csv(c, put(format!("ablation_curve_{}.csv", curve_stem(c))))?;
        }
    }
    Ok(written)
}
