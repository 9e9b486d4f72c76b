//! Python bindings for `advdrift`.
//!
//! Matrices cross the boundary as lists of rows (`list[list[float]]`), so
//! the module has no NumPy dependency; NumPy arrays convert via `.tolist()`.

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use advdrift::advtrain::{self, AdvTrainConfig, AugmentMode};
use advdrift::attacks::{self, AttackKind, AttackSpec, EpsilonGrid};
use advdrift::data;
use advdrift::explain::{self, AttributionTarget, ExplainConfig, ModelOutput, ShapleyEstimator};
use advdrift::metrics;
use advdrift::model::{self, TrainConfig};
use advdrift::pipeline::{self, Stages};
use advdrift::{report, selftest, Error, Matrix, RunConfig};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::Check(_) | Error::Json(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<Matrix> {
    Matrix::from_rows(rows).map_err(to_py)
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.iter_rows().map(<[f64]>::to_vec).collect()
}

fn parse_attack(name: &str) -> PyResult<AttackKind> {
    name.parse().map_err(to_py)
}

fn parse_target(target: &str) -> PyResult<AttributionTarget> {
    let (kind, class) = target
        .split_once(':')
        .ok_or_else(|| PyValueError::new_err("target must be 'prob:C' or 'logit:C'"))?;
    let class: usize = class
        .parse()
        .map_err(|_| PyValueError::new_err(format!("invalid class in {target:?}")))?;
    match kind {
        "prob" | "probability" => Ok(AttributionTarget::Probability(class)),
        "logit" => Ok(AttributionTarget::Logit(class)),
        _ => Err(PyValueError::new_err(format!(
            "unknown target kind {kind:?}"
        ))),
    }
}

/// Features and integer labels, already standardized.
#[pyclass(name = "Dataset", module = "advdrift_py", from_py_object)]
#[derive(Clone)]
pub struct PyDataset {
    inner: data::Dataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    #[pyo3(signature = (x, y, feature_names=None, n_classes=None))]
    fn new(
        x: Vec<Vec<f64>>,
        y: Vec<usize>,
        feature_names: Option<Vec<String>>,
        n_classes: Option<usize>,
    ) -> PyResult<Self> {
        let x = matrix(&x)?;
        let names =
            feature_names.unwrap_or_else(|| (0..x.cols()).map(|j| format!("x{j}")).collect());
        let classes = n_classes.unwrap_or_else(|| y.iter().max().map_or(0, |m| m + 1));
        let inner = data::Dataset::new(x, y, names, classes).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn x(&self) -> Vec<Vec<f64>> {
        rows(&self.inner.x)
    }

    #[getter]
    fn y(&self) -> Vec<usize> {
        self.inner.y.clone()
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.inner.feature_names.clone()
    }

    #[getter]
    fn n_classes(&self) -> usize {
        self.inner.n_classes
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(rows={}, features={}, classes={})",
            self.inner.len(),
            self.inner.n_features(),
            self.inner.n_classes
        )
    }
}

/// Split `raw` and standardize both parts with statistics of the training part.
fn split_standardize(
    raw: &data::RawDataset,
    train_fraction: f64,
    seed: u64,
) -> PyResult<(PyDataset, PyDataset)> {
    let (tr, te) = data::split(raw, train_fraction, seed).map_err(to_py)?;
    let norm = data::fit_normalizer(&tr).map_err(to_py)?;
    let train = data::apply_normalizer(&norm, &tr).map_err(to_py)?;
    let test = data::apply_normalizer(&norm, &te).map_err(to_py)?;
    Ok((PyDataset { inner: train }, PyDataset { inner: test }))
}

/// Load a CSV file and return standardized `(train, test)` datasets.
#[pyfunction]
#[pyo3(signature = (path, label_col="label", train_fraction=0.8, seed=42))]
fn load_csv(
    path: &str,
    label_col: &str,
    train_fraction: f64,
    seed: u64,
) -> PyResult<(PyDataset, PyDataset)> {
    let raw = data::load_csv(path, label_col).map_err(to_py)?;
    split_standardize(&raw, train_fraction, seed)
}

/// Two-Gaussian synthetic data as standardized `(train, test)` datasets.
#[pyfunction]
#[pyo3(signature = (n, d, separation, seed=0, train_fraction=0.8, split_seed=42))]
fn synth_gaussian(
    n: usize,
    d: usize,
    separation: f64,
    seed: u64,
    train_fraction: f64,
    split_seed: u64,
) -> PyResult<(PyDataset, PyDataset)> {
    let raw = data::synth_gaussian(n, d, separation, seed).map_err(to_py)?;
    split_standardize(&raw, train_fraction, split_seed)
}

/// A trained multilayer perceptron.
#[pyclass(name = "Model", module = "advdrift_py", from_py_object)]
#[derive(Clone)]
pub struct PyModel {
    inner: model::ModelParams,
}

#[pymethods]
impl PyModel {
    /// Randomly initialized network (Glorot-uniform weights, zero biases).
    #[staticmethod]
    #[pyo3(signature = (input_dim, n_classes, hidden=vec![64, 32], seed=0))]
    fn init(input_dim: usize, n_classes: usize, hidden: Vec<usize>, seed: u64) -> PyResult<Self> {
        let inner = model::init_params_with(input_dim, &hidden, n_classes, seed).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: model::load_checkpoint(path).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: model::checkpoint_from_str(text).map_err(to_py)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        model::save_checkpoint(&self.inner, path).map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        model::checkpoint_to_string(&self.inner).map_err(to_py)
    }

    #[getter]
    fn input_dim(&self) -> usize {
        self.inner.input_dim()
    }

    #[getter]
    fn n_classes(&self) -> usize {
        self.inner.n_classes()
    }

    fn predict_proba(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let p = model::forward(&self.inner, &matrix(&x)?).map_err(to_py)?;
        Ok(rows(&p))
    }

    fn predict(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<usize>> {
        Ok(self
            .predict_proba(x)?
            .iter()
            .map(|p| model::argmax(p))
            .collect())
    }

    /// Mean cross-entropy of the batch.
    fn loss(&self, x: Vec<Vec<f64>>, y: Vec<usize>) -> PyResult<f64> {
        model::loss(&self.inner, &matrix(&x)?, &y).map_err(to_py)
    }

    /// Per-sample gradient of the loss with respect to each input row.
    fn input_gradient(&self, x: Vec<Vec<f64>>, y: Vec<usize>) -> PyResult<Vec<Vec<f64>>> {
        let g = model::grad_input(&self.inner, &matrix(&x)?, &y).map_err(to_py)?;
        Ok(rows(&g))
    }

    fn accuracy(&self, dataset: &PyDataset) -> PyResult<f64> {
        Ok(model::evaluate(&self.inner, &dataset.inner)
            .map_err(to_py)?
            .accuracy)
    }

    fn __repr__(&self) -> String {
        let dims: Vec<String> = self
            .inner
            .shapes()
            .iter()
            .map(|s| s.1.to_string())
            .collect();
        format!("Model({} -> {})", self.inner.input_dim(), dims.join(" -> "))
    }
}

fn train_config(epochs: usize, batch_size: usize, learning_rate: f64, seed: u64) -> TrainConfig {
    TrainConfig {
        epochs,
        batch_size,
        learning_rate,
        seed,
        ..Default::default()
    }
}

fn history_dicts<'py>(
    py: Python<'py>,
    history: &[model::EpochRecord],
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    history
        .iter()
        .map(|h| {
            let d = PyDict::new(py);
            d.set_item("epoch", h.epoch)?;
            d.set_item("loss", h.loss)?;
            d.set_item("accuracy", h.accuracy)?;
            Ok(d)
        })
        .collect()
}

/// Train with Adam; returns `(model, history)`.
#[pyfunction]
#[pyo3(signature = (dataset, epochs=20, batch_size=128, learning_rate=0.001, seed=0))]
fn train<'py>(
    py: Python<'py>,
    dataset: &PyDataset,
    epochs: usize,
    batch_size: usize,
    learning_rate: f64,
    seed: u64,
) -> PyResult<(PyModel, Vec<Bound<'py, PyDict>>)> {
    let cfg = train_config(epochs, batch_size, learning_rate, seed);
    let (params, history) = py
        .detach(|| model::train(&dataset.inner, &cfg))
        .map_err(to_py)?;
    Ok((PyModel { inner: params }, history_dicts(py, &history)?))
}

/// Adversarial training: a fraction of every batch is replaced by attacked copies.
#[pyfunction]
#[pyo3(signature = (
    dataset, adv_fraction=0.2, adv_epsilon=0.05, attack="fgsm", augment_mode="replace",
    epochs=20, batch_size=128, learning_rate=0.001, seed=0
))]
#[allow(clippy::too_many_arguments)]
fn adv_train<'py>(
    py: Python<'py>,
    dataset: &PyDataset,
    adv_fraction: f64,
    adv_epsilon: f64,
    attack: &str,
    augment_mode: &str,
    epochs: usize,
    batch_size: usize,
    learning_rate: f64,
    seed: u64,
) -> PyResult<(PyModel, Vec<Bound<'py, PyDict>>)> {
    let cfg = AdvTrainConfig {
        base: train_config(epochs, batch_size, learning_rate, seed),
        adv_fraction,
        adv_epsilon,
        attack: parse_attack(attack)?,
        augment_mode: augment_mode.parse::<AugmentMode>().map_err(to_py)?,
        ..Default::default()
    };
    let (params, history) = py
        .detach(|| advtrain::adv_train(&dataset.inner, &cfg))
        .map_err(to_py)?;
    Ok((PyModel { inner: params }, history_dicts(py, &history)?))
}

fn spec(
    attack: &str,
    epsilon: f64,
    alpha: f64,
    iters: usize,
    random_start: bool,
    seed: u64,
) -> PyResult<AttackSpec> {
    let base = match parse_attack(attack)? {
        AttackKind::Fgsm => AttackSpec::fgsm(epsilon),
        AttackKind::Pgd => AttackSpec {
            alpha,
            iters,
            random_start,
            seed,
            ..AttackSpec::pgd(epsilon)
        },
    };
    base.validate().map_err(to_py)?;
    Ok(base)
}

/// Perturb every row of `x` with FGSM or PGD inside the L∞ ball of radius `epsilon`.
#[pyfunction]
#[pyo3(signature = (model, x, y, epsilon, attack="fgsm", alpha=0.01, iters=10, random_start=false, seed=0))]
#[allow(clippy::too_many_arguments)]
fn attack(
    py: Python<'_>,
    model: &PyModel,
    x: Vec<Vec<f64>>,
    y: Vec<usize>,
    epsilon: f64,
    attack: &str,
    alpha: f64,
    iters: usize,
    random_start: bool,
    seed: u64,
) -> PyResult<Vec<Vec<f64>>> {
    let spec = spec(attack, epsilon, alpha, iters, random_start, seed)?;
    let x = matrix(&x)?;
    let adv = py
        .detach(|| attacks::attack_batch(&model.inner, &x, &y, &spec))
        .map_err(to_py)?;
    Ok(rows(&adv))
}

/// Accuracy at each budget of `linspace(0, eps_max, steps)`; returns a dict
/// with `epsilons`, `accuracies` and `ri`.
#[pyfunction]
#[pyo3(signature = (model, dataset, attack="fgsm", eps_max=0.3, steps=10, alpha=0.01, iters=10))]
#[allow(clippy::too_many_arguments)]
fn sweep<'py>(
    py: Python<'py>,
    model: &PyModel,
    dataset: &PyDataset,
    attack: &str,
    eps_max: f64,
    steps: usize,
    alpha: f64,
    iters: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = spec(attack, 0.0, alpha, iters, false, 0)?;
    let grid = EpsilonGrid::linspace(eps_max, steps).map_err(to_py)?;
    let curve = py
        .detach(|| attacks::sweep(&model.inner, &dataset.inner, &spec, &grid))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("attack", curve.meta.attack.as_str())?;
    d.set_item("epsilons", curve.epsilons)?;
    d.set_item("accuracies", curve.accuracies)?;
    d.set_item("ri", curve.ri)?;
    Ok(d)
}

/// Normalized trapezoidal area under an accuracy-versus-budget curve.
#[pyfunction]
fn robustness_index(epsilons: Vec<f64>, accuracies: Vec<f64>) -> PyResult<f64> {
    metrics::robustness_index(&epsilons, &accuracies).map_err(to_py)
}

/// First-order estimate `acc0 + slope · eps_max / 2`, clamped to [0, 1].
#[pyfunction]
fn taylor_ri_estimate(acc0: f64, slope: f64, eps_max: f64) -> PyResult<f64> {
    metrics::taylor_ri_estimate(acc0, slope, eps_max).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (predictions, labels, positive_class=1))]
fn precision_recall(
    predictions: Vec<usize>,
    labels: Vec<usize>,
    positive_class: usize,
) -> PyResult<(f64, f64)> {
    metrics::precision_recall(&predictions, &labels, positive_class).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (scores, labels, positive_class=1))]
fn roc_auc(scores: Vec<f64>, labels: Vec<usize>, positive_class: usize) -> PyResult<f64> {
    metrics::roc_auc(&scores, &labels, positive_class).map_err(to_py)
}

/// Mean absolute loss gradient per feature over a seeded subsample.
#[pyfunction]
#[pyo3(signature = (model, dataset, n_samples=256, seed=0))]
fn feature_sensitivity(
    model: &PyModel,
    dataset: &PyDataset,
    n_samples: usize,
    seed: u64,
) -> PyResult<Vec<f64>> {
    let n = n_samples.min(dataset.inner.len());
    Ok(
        explain::feature_sensitivity(&model.inner, &dataset.inner, n, seed)
            .map_err(to_py)?
            .s,
    )
}

/// Shapley values of one input; `permutations=None` enumerates all coalitions.
/// Returns `(phi, base_value)`.
#[pyfunction]
#[pyo3(signature = (model, x, background, target="prob:1", permutations=None, seed=0))]
fn shapley(
    py: Python<'_>,
    model: &PyModel,
    x: Vec<f64>,
    background: Vec<Vec<f64>>,
    target: &str,
    permutations: Option<usize>,
    seed: u64,
) -> PyResult<(Vec<f64>, f64)> {
    let out = ModelOutput {
        params: &model.inner,
        target: parse_target(target)?,
    };
    let bg = matrix(&background)?;
    let a = py
        .detach(|| match permutations {
            None => explain::shapley_exact(&out, &x, &bg),
            Some(p) => explain::shapley_sample(&out, &x, &bg, p, seed),
        })
        .map_err(to_py)?;
    Ok((a.phi, a.base_value))
}

/// Mean absolute change of each feature's Shapley value under attack.
#[pyfunction]
#[pyo3(signature = (
    model, dataset, background, epsilon=0.1, attack="fgsm", n_samples=256,
    permutations=Some(100), target="prob:1", seed=0
))]
#[allow(clippy::too_many_arguments)]
fn attribution_drift(
    py: Python<'_>,
    model: &PyModel,
    dataset: &PyDataset,
    background: Vec<Vec<f64>>,
    epsilon: f64,
    attack: &str,
    n_samples: usize,
    permutations: Option<usize>,
    target: &str,
    seed: u64,
) -> PyResult<Vec<f64>> {
    let spec = spec(attack, epsilon, 0.01, 10, false, seed)?;
    let cfg = ExplainConfig {
        estimator: permutations.map_or(ShapleyEstimator::Exact, |permutations| {
            ShapleyEstimator::Sampling { permutations }
        }),
        target: parse_target(target)?,
        seed,
    };
    let bg = matrix(&background)?;
    let n = n_samples.min(dataset.inner.len());
    py.detach(|| {
        explain::attribution_drift(&model.inner, &dataset.inner, &bg, &spec, &cfg, n, seed)
    })
    .map_err(to_py)
}

/// Run the configured pipeline (TOML text) and return the canonical report JSON.
/// Artifacts are also written when `out_dir` is given.
#[pyfunction]
#[pyo3(signature = (config_toml, stages=vec!["sweep".to_string(), "explain".to_string(), "ablation".to_string()], out_dir=None))]
fn run_pipeline(
    py: Python<'_>,
    config_toml: &str,
    stages: Vec<String>,
    out_dir: Option<String>,
) -> PyResult<String> {
    let cfg = RunConfig::from_toml_str(config_toml).map_err(to_py)?;
    let mut st = Stages::default();
    for s in &stages {
        match s.as_str() {
            "sweep" => st.sweep = true,
            "explain" => st.explain = true,
            "ablation" => st.ablation = true,
            other => return Err(PyValueError::new_err(format!("unknown stage {other:?}"))),
        }
    }
    py.detach(|| {
        let out = pipeline::execute(&cfg, st)?;
        if let Some(dir) = &out_dir {
            pipeline::write_outputs(&cfg, &out, dir.as_ref())?;
        }
        report::to_canonical_json(&out.report)
    })
    .map_err(to_py)
}

/// Built-in consistency checks; returns `[(name, passed, detail), ...]`.
#[pyfunction(name = "selftest")]
fn run_selftest(py: Python<'_>) -> Vec<(String, bool, String)> {
    py.detach(selftest::run_all)
        .into_iter()
        .map(|o| (o.name.to_string(), o.passed, o.detail))
        .collect()
}

#[pymodule]
fn advdrift_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(load_csv, m)?)?;
    m.add_function(wrap_pyfunction!(synth_gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(adv_train, m)?)?;
    m.add_function(wrap_pyfunction!(attack, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(robustness_index, m)?)?;
    m.add_function(wrap_pyfunction!(taylor_ri_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(precision_recall, m)?)?;
    m.add_function(wrap_pyfunction!(roc_auc, m)?)?;
    m.add_function(wrap_pyfunction!(feature_sensitivity, m)?)?;
    m.add_function(wrap_pyfunction!(shapley, m)?)?;
    m.add_function(wrap_pyfunction!(attribution_drift, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(run_selftest, m)?)?;
    Ok(())
}
