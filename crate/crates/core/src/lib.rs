//! Adversarial robustness and attribution drift for tabular classifiers.
//!
//! The crate trains small multilayer perceptrons on tabular data, attacks
//! them with L∞-bounded FGSM and PGD perturbations, summarizes the
//! accuracy-versus-budget curve by its normalized area (the Robustness
//! Index), and studies how feature attributions move under attack.
//!
//! ```
//! use advdrift::{attacks, data, model};
//!
//! let raw = data::synth_gaussian(200, 4, 3.0, 7).unwrap();
//! let norm = data::fit_normalizer(&raw).unwrap();
//! let ds = data::apply_normalizer(&norm, &raw).unwrap();
//! let cfg = model::TrainConfig { epochs: 3, ..Default::default() };
//! let (params, _history) = model::train(&ds, &cfg).unwrap();
//! let grid = attacks::EpsilonGrid::linspace(0.3, 10).unwrap();
//! let curve = attacks::sweep(&params, &ds, &attacks::AttackSpec::fgsm(0.0), &grid).unwrap();
//! assert!((0.0..=1.0).contains(&curve.ri));
//! ```

pub mod advtrain;
pub mod attacks;
pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod explain;
pub mod matrix;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod selftest;

pub use attacks::{AttackKind, AttackSpec, EpsilonGrid};
pub use config::RunConfig;
pub use data::{Dataset, RawDataset};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use metrics::RobustnessCurve;
pub use model::{ModelParams, TrainConfig};
