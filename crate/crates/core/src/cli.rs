//! Command-line interface.
//!
//! Every subcommand resolves its configuration as `defaults < --config file
//! < flags`, runs the requested pipeline stages, writes artifacts to the
//! output directory and prints a short summary.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::advtrain::AugmentMode;
use crate::attacks::AttackKind;
use crate::config::{RunConfig, SyntheticSpec};
use crate::error::{Error, Result};
use crate::explain::AttributionTarget;
use crate::pipeline::{self, RunOutput, Stages};
use crate::selftest;

#[derive(Debug, Parser)]
#[command(
    name = "advdrift",
    version,
    about = "Adversarial robustness and attribution drift for tabular MLPs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one model per seed and save checkpoints.
    Train(RunArgs),
    /// Accuracy-versus-budget curves, Robustness Index and attacked metrics.
    Sweep(RunArgs),
    /// Gradient sensitivity and Shapley attribution drift.
    Explain(RunArgs),
    /// Baseline versus adversarially trained model.
    Ablation(RunArgs),
    /// Every stage: train, sweep, explain and ablation.
    Run(RunArgs),
    /// Built-in consistency checks on synthetic data.
    Selftest,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input CSV file.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Name of the label column.
    #[arg(long)]
    pub label_col: Option<String>,
    /// Use synthetic two-Gaussian data: `N,D,SEPARATION[,SEED]`.
    #[arg(long, value_parser = parse_synthetic)]
    pub synthetic: Option<SyntheticSpec>,
    /// Dataset name used in the ablation table.
    #[arg(long)]
    pub dataset_name: Option<String>,
    /// Seeded subsample of at most this many rows before splitting.
    #[arg(long)]
    pub max_rows: Option<usize>,
    /// Training fraction of the split.
    #[arg(long)]
    pub split: Option<f64>,
    /// Seed of the train/test split.
    #[arg(long)]
    pub split_seed: Option<u64>,
    /// A single training seed (shorthand for `--seeds S`).
    #[arg(long, conflicts_with = "seeds")]
    pub seed: Option<u64>,
    /// Comma-separated training seeds.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Positive class index for precision, recall and AUC.
    #[arg(long)]
    pub positive_class: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Attacks to sweep, comma-separated (`fgsm`, `pgd`).
    #[arg(long, value_delimiter = ',')]
    pub attack: Option<Vec<AttackKind>>,
    /// Largest perturbation budget of the sweep.
    #[arg(long)]
    pub eps_max: Option<f64>,
    /// Number of budgets in the sweep, including zero.
    #[arg(long)]
    pub eps_steps: Option<usize>,
    /// PGD step size.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// PGD iterations.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Start PGD from a uniform point in the ball.
    #[arg(long)]
    pub random_start: bool,
    /// Budgets at which precision/recall/AUC are reported, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub metrics_eps: Option<Vec<f64>>,
    /// Test samples used for sensitivity and drift.
    #[arg(long)]
    pub explain_samples: Option<usize>,
    /// Background rows for the Shapley value function.
    #[arg(long)]
    pub background: Option<usize>,
    /// Permutations of the Shapley sampler.
    #[arg(long)]
    pub permutations: Option<usize>,
    /// Enumerate all coalitions instead of sampling (at most 12 features).
    #[arg(long)]
    pub exact: bool,
    /// Budget of the headline attribution drift.
    #[arg(long)]
    pub drift_eps: Option<f64>,
    /// Attack used for attribution drift.
    #[arg(long)]
    pub drift_attack: Option<AttackKind>,
    /// Number of top-ranked features in the drift grid.
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Attributed output: `prob:C` or `logit:C`.
    #[arg(long, value_parser = parse_target)]
    pub target: Option<AttributionTarget>,
    /// Fraction of each batch replaced by adversarial examples.
    #[arg(long)]
    pub adv_frac: Option<f64>,
    /// Budget of the training-time attack.
    #[arg(long)]
    pub adv_eps: Option<f64>,
    /// Attack used to craft training examples.
    #[arg(long)]
    pub adv_attack: Option<AttackKind>,
    /// `replace` swaps rows in place; `append` adds them to the batch.
    #[arg(long)]
    pub augment_mode: Option<AugmentMode>,
    /// Only evaluate the baseline in the ablation.
    #[arg(long)]
    pub baseline_only: bool,
    /// Evaluate a saved model instead of training.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Output directory (default: `$ADVDRIFT_OUT` or `advdrift-out`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Timestamp recorded in the report provenance.
    #[arg(long)]
    pub timestamp: Option<String>,
}

fn parse_synthetic(s: &str) -> std::result::Result<SyntheticSpec, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if !(3..=4).contains(&parts.len()) {
        return Err("expected N,D,SEPARATION[,SEED]".into());
    }
    let bad = |what: &str| format!("invalid {what} in `{s}`");
    Ok(SyntheticSpec {
        n: parts[0].parse().map_err(|_| bad("N"))?,
        d: parts[1].parse().map_err(|_| bad("D"))?,
        separation: parts[2].parse().map_err(|_| bad("SEPARATION"))?,
        seed: parts
            .get(3)
            .map_or(Ok(0), |v| v.parse())
            .map_err(|_| bad("SEED"))?,
    })
}

fn parse_target(s: &str) -> std::result::Result<AttributionTarget, String> {
    let (kind, class) = s.split_once(':').ok_or("expected prob:C or logit:C")?;
    let class: usize = class
        .parse()
        .map_err(|_| format!("invalid class in `{s}`"))?;
    match kind {
        "prob" | "probability" => Ok(AttributionTarget::Probability(class)),
        "logit" => Ok(AttributionTarget::Logit(class)),
        _ => Err(format!("unknown target kind `{kind}`")),
    }
}

impl RunArgs {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($flag:expr => $field:expr) => {
                if let Some(v) = $flag.clone() {
                    $field = v.into();
                }
            };
        }
        if self.data.is_some() {
            c.data = self.data.clone();
            c.synthetic = None;
        }
        if self.synthetic.is_some() {
            c.synthetic = self.synthetic.clone();
            c.data = None;
        }
        set!(self.label_col => c.label_col);
        set!(self.dataset_name => c.dataset_name);
        set!(self.max_rows => c.max_rows);
        set!(self.split => c.split);
        set!(self.split_seed => c.split_seed);
        set!(self.seeds => c.seeds);
        if let Some(s) = self.seed {
            c.seeds = vec![s];
        }
        set!(self.positive_class => c.positive_class);
        set!(self.epochs => c.train.epochs);
        set!(self.batch_size => c.train.batch_size);
        set!(self.lr => c.train.learning_rate);
        set!(self.attack => c.attack.kinds);
        set!(self.eps_max => c.attack.eps_max);
        set!(self.eps_steps => c.attack.eps_steps);
        set!(self.alpha => c.attack.alpha);
        set!(self.iters => c.attack.iters);
        c.attack.random_start |= self.random_start;
        set!(self.metrics_eps => c.attack.metrics_eps);
        set!(self.explain_samples => c.explain.n_samples);
        set!(self.background => c.explain.background);
        set!(self.permutations => c.explain.permutations);
        c.explain.exact |= self.exact;
        set!(self.drift_eps => c.explain.drift_eps);
        set!(self.drift_attack => c.explain.drift_attack);
        set!(self.top_k => c.explain.top_k);
        set!(self.target => c.explain.target);
        set!(self.adv_frac => c.adv.adv_fraction);
        set!(self.adv_eps => c.adv.adv_epsilon);
        set!(self.adv_attack => c.adv.attack);
        set!(self.augment_mode => c.adv.augment_mode);
        c.adv.baseline_only |= self.baseline_only;
        set!(self.checkpoint => c.checkpoint);
        set!(self.out => c.out);
        set!(self.timestamp => c.timestamp);
        c.validate()?;
        Ok(c)
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    let (args, stages) = match command {
        Command::Selftest => return Ok(run_selftest()),
        Command::Train(a) => (a, Stages::default()),
        Command::Sweep(a) => (
            a,
            Stages {
                sweep: true,
                ..Default::default()
            },
        ),
        Command::Explain(a) => (
            a,
            Stages {
                explain: true,
                ..Default::default()
            },
        ),
        Command::Ablation(a) => (
            a,
            Stages {
                ablation: true,
                ..Default::default()
            },
        ),
        Command::Run(a) => (a, Stages::all()),
    };
    let cfg = args.resolve()?;
    if stages == Stages::default() && cfg.checkpoint.is_some() {
        return Err(Error::Config(
            "`train` cannot start from --checkpoint".into(),
        ));
    }
    let output = pipeline::execute(&cfg, stages)?;
    let dir = cfg.out_dir();
    pipeline::write_outputs(&cfg, &output, &dir)?;
    print_summary(&output);
    println!("outputs written to {}", dir.display());
    Ok(0)
}

fn run_selftest() -> i32 {
    let outcomes = selftest::run_all();
    for o in &outcomes {
        println!("{o}");
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if failed == 0 {
        println!("all {} checks passed", outcomes.len());
        0
    } else {
        println!("{failed} of {} checks failed", outcomes.len());
        Error::Check(String::new()).exit_code()
    }
}

fn print_summary(output: &RunOutput) {
    let r = &output.report;
    for run in &r.runs {
        println!(
            "seed {:>4}  clean accuracy {:.4}",
            run.seed, run.clean_accuracy
        );
    }
    for c in &r.mean_curves {
        println!(
            "{:<5} RI {:.4} (mean over {} seeds)",
            c.meta.attack.as_str(),
            c.ri,
            r.runs.len()
        );
    }
    for m in &r.metrics {
        let auc = m.auc.map_or("n/a".to_string(), |a| format!("{a:.4}"));
        println!(
            "{:<5} ε={:<6} acc {:.4}  precision {:.4}  recall {:.4}  AUC {auc}",
            m.attack.as_str(),
            m.epsilon,
            m.accuracy,
            m.precision,
            m.recall
        );
    }
    if let Some(d) = &r.diagnostics {
        if !d.top_sensitivity.is_empty() {
            println!("top sensitivity: {}", d.top_sensitivity.join(", "));
            println!("top drift:       {}", d.top_drift.join(", "));
        }
        if let Some(rho) = d.sensitivity_drift_spearman {
            println!("sensitivity/drift Spearman ρ {rho:.3}");
        }
    }
    if let Some(a) = &r.ablation {
        for row in &a.rows {
            let delta = row
                .delta_ri
                .map_or(String::new(), |v| format!("  ΔRI {v:+.4}"));
            println!(
                "{:<12} clean {:.4}  RI_FGSM {:.4}  RI_PGD {:.4}{delta}",
                row.model, row.clean_acc, row.ri_fgsm, row.ri_pgd
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> RunArgs {
        let mut full = vec!["advdrift", "run"];
        full.extend_from_slice(args);
        match Cli::try_parse_from(full).unwrap().command {
            Command::Run(a) => a,
            _ => unreachable!(),
        }
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "seeds = [4, 5]\nsplit = 0.7\n[train]\nepochs = 3\n").unwrap();
        let a = parse(&[
            "--config",
            path.to_str().unwrap(),
            "--synthetic",
            "100,3,2.0,9",
            "--epochs",
            "7",
            "--attack",
            "pgd",
        ]);
        let c = a.resolve().unwrap();
        assert_eq!(c.seeds, vec![4, 5]);
        assert_eq!(c.split, 0.7);
        assert_eq!(c.train.epochs, 7);
        assert_eq!(c.train.batch_size, 128);
        assert_eq!(c.attack.kinds, vec![AttackKind::Pgd]);
        assert_eq!(c.synthetic.unwrap().seed, 9);
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let a = parse(&["--synthetic", "100,3,2", "--eps-steps", "1"]);
        assert_eq!(a.resolve().unwrap_err().exit_code(), 2);
        let a = parse(&["--synthetic", "100,3,2", "--adv-frac", "1.5"]);
        assert_eq!(a.resolve().unwrap_err().exit_code(), 2);
        assert!(Cli::try_parse_from(["advdrift", "run", "--attack", "cw"]).is_err());
        assert_eq!(main_with_args(["advdrift", "run"]), 2);
    }

    #[test]
    fn target_parsing() {
        assert_eq!(parse_target("logit:0"), Ok(AttributionTarget::Logit(0)));
        assert_eq!(
            parse_target("prob:1"),
            Ok(AttributionTarget::Probability(1))
        );
        assert!(parse_target("x:1").is_err());
    }
}
