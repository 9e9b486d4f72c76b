//! Adversarial training by online batch augmentation, and the
//! baseline-versus-hardened ablation.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::attacks::{self, AttackKind, AttackSpec, EpsilonGrid};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::RobustnessCurve;
use crate::model::{self, EpochRecord, ModelParams, TrainConfig};
use crate::rng::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum AugmentMode {
    /// Selected batch rows are overwritten by their adversarial versions.
    #[default]
    Replace,
    /// Adversarial copies are appended, growing the batch.
    Append,
}

impl std::str::FromStr for AugmentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "replace" => Ok(AugmentMode::Replace),
            "append" => Ok(AugmentMode::Append),
            other => Err(Error::Config(format!("unknown augment mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdvTrainConfig {
    pub base: TrainConfig,
    pub adv_fraction: f64,
    pub adv_epsilon: f64,
    pub attack: AttackKind,
    /// PGD settings when `attack` is PGD.
    pub pgd_alpha: f64,
    pub pgd_iters: usize,
    pub augment_mode: AugmentMode,
}

impl Default for AdvTrainConfig {
    fn default() -> Self {
        Self {
            base: TrainConfig::default(),
            adv_fraction: 0.2,
            adv_epsilon: 0.05,
            attack: AttackKind::Fgsm,
            pgd_alpha: 0.01,
            pgd_iters: 10,
            augment_mode: AugmentMode::Replace,
        }
    }
}

impl AdvTrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if !(0.0..=1.0).contains(&self.adv_fraction) {
            return Err(Error::Config(format!(
                "adversarial fraction must lie in [0, 1], got {}",
                self.adv_fraction
            )));
        }
        if !(self.adv_epsilon >= 0.0 && self.adv_epsilon.is_finite()) {
            return Err(Error::Config(format!(
                "adversarial epsilon must be >= 0, got {}",
                self.adv_epsilon
            )));
        }
        self.attack_spec().validate()
    }

    pub fn attack_spec(&self) -> AttackSpec {
        match self.attack {
            AttackKind::Fgsm => AttackSpec::fgsm(self.adv_epsilon),
            AttackKind::Pgd => AttackSpec {
                alpha: self.pgd_alpha,
                iters: self.pgd_iters,
                seed: self.base.seed,
                ..AttackSpec::pgd(self.adv_epsilon)
            },
        }
    }
}

/// Trains like [`model::train`], but before each gradient step a seeded
/// `⌊adv_fraction · batch⌋` rows are attacked against the current parameters.
pub fn adv_train(
    data: &Dataset,
    config: &AdvTrainConfig,
) -> Result<(ModelParams, Vec<EpochRecord>)> {
    config.validate()?;
    let spec = config.attack_spec();
    let mut rng = rng::derived(config.base.seed, Stream::Augment, 0);
    let mut batch_no = 0u64;
    model::fit(data, &config.base, |params, bx, by, _| {
        let k = (config.adv_fraction * by.len() as f64).floor() as usize;
        batch_no += 1;
        if k == 0 {
            return Ok(());
        }
        let mut chosen = index::sample(&mut rng, by.len(), k).into_vec();
        chosen.sort_unstable();
        let mut adv_rows = Vec::with_capacity(k);
        for &r in &chosen {
            let clean = bx.row(r);
            let adv =
                attacks::attack_one(params, clean, by[r], &spec, (batch_no << 24) + r as u64)?;
            let dist = attacks::linf_distance(&adv, clean);
            if dist > config.adv_epsilon + 1e-12 {
                return Err(Error::Check(format!(
                    "augmented sample left the ε-ball: {dist} > {}",
                    config.adv_epsilon
                )));
            }
            adv_rows.push(adv);
        }
        match config.augment_mode {
            AugmentMode::Replace => {
                for (&r, adv) in chosen.iter().zip(&adv_rows) {
                    bx.row_mut(r).copy_from_slice(adv);
                }
            }
            AugmentMode::Append => {
                let mut data = std::mem::replace(bx, Matrix::zeros(0, 0)).into_vec();
                for (&r, adv) in chosen.iter().zip(&adv_rows) {
                    data.extend_from_slice(adv);
                    by.push(by[r]);
                }
                *bx = Matrix::from_vec(by.len(), data.len() / by.len(), data)?;
            }
        }
        Ok(())
    })
}

/// One row of the ablation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub dataset: String,
    pub model: String,
    pub clean_acc: f64,
    pub ri_fgsm: f64,
    pub ri_pgd: f64,
    /// PGD-RI gain over the baseline; `None` on the baseline row.
    pub delta_ri: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRecord {
    pub rows: Vec<AblationRow>,
    /// Curves behind the RI values, per variant and attack.
    pub curves: Vec<RobustnessCurve>,
    pub seeds: Vec<u64>,
}

pub const BASELINE: &str = "Baseline";
pub const ADV_TRAINED: &str = "Adv-Trained";

impl AblationRecord {
    pub fn row(&self, model: &str) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.model == model)
    }

    /// Averages per-seed records; per-seed curves are kept and mean curves appended.
    pub fn mean(records: &[AblationRecord]) -> Result<AblationRecord> {
        let first = records
            .first()
            .ok_or_else(|| Error::InvalidArgument("no ablation records".into()))?;
        let n = records.len() as f64;
        let mut rows: Vec<AblationRow> = first
            .rows
            .iter()
            .map(|r| {
                let same: Vec<&AblationRow> =
                    records.iter().filter_map(|rec| rec.row(&r.model)).collect();
                AblationRow {
                    dataset: r.dataset.clone(),
                    model: r.model.clone(),
                    clean_acc: same.iter().map(|x| x.clean_acc).sum::<f64>() / n,
                    ri_fgsm: same.iter().map(|x| x.ri_fgsm).sum::<f64>() / n,
                    ri_pgd: same.iter().map(|x| x.ri_pgd).sum::<f64>() / n,
                    delta_ri: None,
                }
            })
            .collect();
        fill_delta(&mut rows);

        let mut curves: Vec<RobustnessCurve> = records
            .iter()
            .flat_map(|r| r.curves.iter().cloned())
            .collect();
        let mut groups: Vec<(String, AttackKind)> = Vec::new();
        for c in &curves {
            let key = (c.meta.model.clone(), c.meta.attack);
            if !groups.contains(&key) {
                groups.push(key);
            }
        }
        for (model, attack) in groups {
            let members: Vec<RobustnessCurve> = curves
                .iter()
                .filter(|c| {
                    c.meta.model == model && c.meta.attack == attack && c.meta.seed.is_some()
                })
                .cloned()
                .collect();
            curves.push(RobustnessCurve::mean(&members)?);
        }
        Ok(AblationRecord {
            rows,
            curves,
            seeds: records
                .iter()
                .flat_map(|r| r.seeds.iter().copied())
                .collect(),
        })
    }
}

fn fill_delta(rows: &mut [AblationRow]) {
    let base = rows.iter().find(|r| r.model == BASELINE).map(|r| r.ri_pgd);
    for r in rows.iter_mut() {
        r.delta_ri = match (r.model.as_str(), base) {
            (ADV_TRAINED, Some(b)) => Some(r.ri_pgd - b),
            _ => None,
        };
    }
}

/// Trains the baseline and (unless `baseline_only`) the adversarially trained
/// variant from the same seed, then sweeps both attacks on `test`.
#[allow(clippy::too_many_arguments)]
pub fn run_ablation(
    dataset_name: &str,
    train: &Dataset,
    test: &Dataset,
    config: &AdvTrainConfig,
    baseline_only: bool,
    spec_fgsm: &AttackSpec,
    spec_pgd: &AttackSpec,
    grid: &EpsilonGrid,
) -> Result<AblationRecord> {
    config.validate()?;
    let baseline = model::train(train, &config.base)?.0;
    run_ablation_with_baseline(
        dataset_name,
        baseline,
        train,
        test,
        config,
        baseline_only,
        spec_fgsm,
        spec_pgd,
        grid,
    )
}

/// As [`run_ablation`], reusing a baseline already trained with `config.base`.
#[allow(clippy::too_many_arguments)]
pub fn run_ablation_with_baseline(
    dataset_name: &str,
    baseline: ModelParams,
    train: &Dataset,
    test: &Dataset,
    config: &AdvTrainConfig,
    baseline_only: bool,
    spec_fgsm: &AttackSpec,
    spec_pgd: &AttackSpec,
    grid: &EpsilonGrid,
) -> Result<AblationRecord> {
    config.validate()?;
    if grid.len() < 2 {
        return Err(Error::Config(
            "the Robustness Index needs at least 2 epsilon values".into(),
        ));
    }
    let seed = config.base.seed;
    let mut variants = vec![(BASELINE, baseline)];
    if !baseline_only {
        variants.push((ADV_TRAINED, adv_train(train, config)?.0));
    }
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for (name, params) in &variants {
        let clean_acc = model::evaluate(params, test)?.accuracy;
        let mut fg = attacks::sweep(params, test, spec_fgsm, grid)?;
        let mut pg = attacks::sweep(params, test, spec_pgd, grid)?;
        fg.meta = fg.meta.with_model(*name, Some(seed));
        pg.meta = pg.meta.with_model(*name, Some(seed));
        rows.push(AblationRow {
            dataset: dataset_name.to_string(),
            model: name.to_string(),
            clean_acc,
            ri_fgsm: fg.ri,
            ri_pgd: pg.ri,
            delta_ri: None,
        });
        curves.push(fg);
        curves.push(pg);
    }
    fill_delta(&mut rows);
    Ok(AblationRecord {
        rows,
        curves,
        seeds: vec![seed],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{apply_normalizer, fit_normalizer, synth_gaussian};

    fn data() -> Dataset {
        let raw = synth_gaussian(300, 3, 1.5, 2).unwrap();
        apply_normalizer(&fit_normalizer(&raw).unwrap(), &raw).unwrap()
    }

    fn small(seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: 3,
            batch_size: 32,
            seed,
            hidden: vec![8, 4],
            ..Default::default()
        }
    }

    #[test]
    fn null_augmentation_matches_plain_training() {
        let d = data();
        let plain = model::train(&d, &small(5)).unwrap();
        let no_frac = AdvTrainConfig {
            base: small(5),
            adv_fraction: 0.0,
            ..Default::default()
        };
        assert_eq!(adv_train(&d, &no_frac).unwrap(), plain);
        let no_eps = AdvTrainConfig {
            base: small(5),
            adv_epsilon: 0.0,
            ..Default::default()
        };
        assert_eq!(adv_train(&d, &no_eps).unwrap(), plain);
    }

    #[test]
    fn augmentation_changes_training() {
        let d = data();
        let plain = model::train(&d, &small(5)).unwrap();
        let cfg = AdvTrainConfig {
            base: small(5),
            ..Default::default()
        };
        let adv = adv_train(&d, &cfg).unwrap();
        assert_ne!(adv.0, plain.0);
        assert_eq!(adv, adv_train(&d, &cfg).unwrap());
        let append = AdvTrainConfig {
            augment_mode: AugmentMode::Append,
            ..cfg.clone()
        };
        assert_ne!(adv_train(&d, &append).unwrap().0, adv.0);
        let pgd = AdvTrainConfig {
            attack: AttackKind::Pgd,
            ..cfg
        };
        assert_ne!(adv_train(&d, &pgd).unwrap().0, adv.0);
    }

    #[test]
    fn invalid_configs() {
        let bad = AdvTrainConfig {
            adv_fraction: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = AdvTrainConfig {
            adv_epsilon: -0.1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!("swap".parse::<AugmentMode>().is_err());
    }

    #[test]
    fn ablation_delta_is_pgd_difference() {
        let d = data();
        let grid = EpsilonGrid::linspace(0.3, 4).unwrap();
        let cfg = AdvTrainConfig {
            base: small(1),
            ..Default::default()
        };
        let rec = run_ablation(
            "synthetic",
            &d,
            &d,
            &cfg,
            false,
            &AttackSpec::fgsm(0.0),
            &AttackSpec::pgd(0.0),
            &grid,
        )
        .unwrap();
        let b = rec.row(BASELINE).unwrap();
        let a = rec.row(ADV_TRAINED).unwrap();
        assert_eq!(b.delta_ri, None);
        assert_eq!(a.delta_ri, Some(a.ri_pgd - b.ri_pgd));
        assert_eq!(rec.curves.len(), 4);

        let only = run_ablation(
            "synthetic",
            &d,
            &d,
            &cfg,
            true,
            &AttackSpec::fgsm(0.0),
            &AttackSpec::pgd(0.0),
            &grid,
        )
        .unwrap();
        assert_eq!(only.rows.len(), 1);
        assert_eq!(only.rows[0], *b);

        let mean = AblationRecord::mean(&[rec.clone(), rec.clone()]).unwrap();
        assert_eq!(mean.rows[1].delta_ri, a.delta_ri);
        assert_eq!(mean.curves.len(), 8 + 4);
    }
}
