//! Run configuration: defaults, TOML config file, command-line overrides.
//!
//! Precedence is `defaults < config file < flags`. The merged configuration
//! is echoed into the output directory as `config.toml`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::advtrain::{AdvTrainConfig, AugmentMode};
use crate::attacks::{AttackKind, AttackSpec, EpsilonGrid};
use crate::error::{Error, Result};
use crate::explain::{AttributionTarget, ExplainConfig, ShapleyEstimator};
use crate::model::TrainConfig;

/// Environment variable supplying the default output directory.
pub const OUT_DIR_ENV: &str = "ADVDRIFT_OUT";
const DEFAULT_OUT: &str = "advdrift-out";

/// Synthetic two-Gaussian data used instead of a CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    pub separation: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttackSettings {
    pub kinds: Vec<AttackKind>,
    pub eps_max: f64,
    pub eps_steps: usize,
    pub alpha: f64,
    pub iters: usize,
    pub random_start: bool,
    /// Budgets at which precision/recall/AUC are reported.
    pub metrics_eps: Vec<f64>,
}

impl Default for AttackSettings {
    fn default() -> Self {
        Self {
            kinds: vec![AttackKind::Fgsm, AttackKind::Pgd],
            eps_max: 0.3,
            eps_steps: 10,
            alpha: 0.01,
            iters: 10,
            random_start: false,
            metrics_eps: vec![0.1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplainSettings {
    pub n_samples: usize,
    pub background: usize,
    pub permutations: usize,
    pub drift_eps: f64,
    pub drift_attack: AttackKind,
    pub exact: bool,
    pub top_k: usize,
    pub target: AttributionTarget,
}

impl Default for ExplainSettings {
    fn default() -> Self {
        Self {
            n_samples: 256,
            background: 100,
            permutations: 100,
            drift_eps: 0.1,
            drift_attack: AttackKind::Fgsm,
            exact: false,
            top_k: 10,
            target: AttributionTarget::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdvSettings {
    pub adv_fraction: f64,
    pub adv_epsilon: f64,
    pub attack: AttackKind,
    pub augment_mode: AugmentMode,
    pub baseline_only: bool,
}

impl Default for AdvSettings {
    fn default() -> Self {
        let d = AdvTrainConfig::default();
        Self {
            adv_fraction: d.adv_fraction,
            adv_epsilon: d.adv_epsilon,
            attack: d.attack,
            augment_mode: d.augment_mode,
            baseline_only: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub label_col: String,
    pub synthetic: Option<SyntheticSpec>,
    /// Name used in the ablation table; defaults to the file stem.
    pub dataset_name: Option<String>,
    /// Cap on rows (seeded subsample) before splitting.
    pub max_rows: Option<usize>,
    pub split: f64,
    pub split_seed: u64,
    pub seeds: Vec<u64>,
    /// Positive class index for scores, precision and recall.
    pub positive_class: usize,
    pub train: TrainConfig,
    pub attack: AttackSettings,
    pub explain: ExplainSettings,
    pub adv: AdvSettings,
    pub checkpoint: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub timestamp: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: None,
            label_col: "label".into(),
            synthetic: None,
            dataset_name: None,
            max_rows: None,
            split: 0.8,
            split_seed: 42,
            seeds: vec![0, 1, 2],
            positive_class: 1,
            train: TrainConfig::default(),
            attack: AttackSettings::default(),
            explain: ExplainSettings::default(),
            adv: AdvSettings::default(),
            checkpoint: None,
            out: None,
            timestamp: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.data.is_none() && self.synthetic.is_none() {
            return Err(Error::Config(
                "no dataset: pass --data or configure [synthetic]".into(),
            ));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(Error::Config(format!(
                "split must lie in (0, 1), got {}",
                self.split
            )));
        }
        self.train.validate()?;
        self.grid()?;
        for kind in &self.attack.kinds {
            self.attack_spec(*kind).validate().map_err(as_config)?;
        }
        self.adv_config(self.seeds[0]).validate()?;
        if !self.explain.exact && self.explain.permutations == 0 {
            return Err(Error::Config("permutations must be >= 1".into()));
        }
        if self.explain.n_samples == 0 || self.explain.background == 0 {
            return Err(Error::Config(
                "explain samples and background size must be >= 1".into(),
            ));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<EpsilonGrid> {
        if self.attack.eps_steps < 2 {
            return Err(Error::Config(format!(
                "the Robustness Index needs at least 2 epsilon values, got {}",
                self.attack.eps_steps
            )));
        }
        if !(self.attack.eps_max > 0.0 && self.attack.eps_max.is_finite()) {
            return Err(Error::Config(format!(
                "eps-max must be > 0, got {}",
                self.attack.eps_max
            )));
        }
        EpsilonGrid::linspace(self.attack.eps_max, self.attack.eps_steps).map_err(as_config)
    }

    /// Attack spec at ε = 0; budgets are filled in per sweep point.
    pub fn attack_spec(&self, kind: AttackKind) -> AttackSpec {
        let base = match kind {
            AttackKind::Fgsm => AttackSpec::fgsm(0.0),
            AttackKind::Pgd => AttackSpec::pgd(0.0),
        };
        AttackSpec {
            alpha: self.attack.alpha,
            iters: if kind == AttackKind::Pgd {
                self.attack.iters
            } else {
                1
            },
            random_start: self.attack.random_start && kind == AttackKind::Pgd,
            seed: self.split_seed,
            ..base
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            seed,
            ..self.train.clone()
        }
    }

    pub fn adv_config(&self, seed: u64) -> AdvTrainConfig {
        AdvTrainConfig {
            base: self.train_config(seed),
            adv_fraction: self.adv.adv_fraction,
            adv_epsilon: self.adv.adv_epsilon,
            attack: self.adv.attack,
            pgd_alpha: self.attack.alpha,
            pgd_iters: self.attack.iters,
            augment_mode: self.adv.augment_mode,
        }
    }

    pub fn explain_config(&self, seed: u64) -> ExplainConfig {
        ExplainConfig {
            estimator: if self.explain.exact {
                ShapleyEstimator::Exact
            } else {
                ShapleyEstimator::Sampling {
                    permutations: self.explain.permutations,
                }
            },
            target: self.explain.target,
            seed,
        }
    }

    /// Output directory: config/flag value, else `$ADVDRIFT_OUT`, else `advdrift-out`.
    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| {
            std::env::var_os(OUT_DIR_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
        })
    }

    pub fn dataset_label(&self) -> String {
        if let Some(n) = &self.dataset_name {
            return n.clone();
        }
        if let Some(p) = &self.data {
            if let Some(stem) = p.file_stem() {
                return stem.to_string_lossy().into_owned();
            }
        }
        "synthetic".into()
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::InvalidArgument(m) => Error::Config(m),
        other => other,
    }
}
