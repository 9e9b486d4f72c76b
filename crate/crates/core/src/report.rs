//! Run reports and plot-data files.
//!
//! The report is canonical JSON: object keys sorted, every float rounded to
//! 12 significant digits, so identical runs give byte-identical files.
//! CSV files are flat views of the same data for plotting tools.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::advtrain::AblationRecord;
use crate::attacks::AttackKind;
use crate::error::{Error, Result};
use crate::explain::{DriftReport, SensitivityReport};
use crate::metrics::{ExtendedMetrics, RobustnessCurve};
use crate::model::EpochRecord;

pub const SCHEMA_VERSION: &str = "1.0";
const SIG_DIGITS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub dataset_path: Option<String>,
    /// SHA-256 of the dataset file bytes.
    pub dataset_sha256: Option<String>,
    pub label_column: Option<String>,
    /// Original label for each class index.
    pub class_names: Vec<String>,
    pub n_rows: usize,
    pub n_features: usize,
    /// Row cap applied before splitting, if any.
    pub subsample_rows: Option<usize>,
    pub seeds: Vec<u64>,
    /// Effective merged run configuration.
    pub config: Value,
    pub timestamp: Option<String>,
    pub ri_quadrature: String,
    pub tool_version: String,
}

/// Outcome of one training seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub clean_accuracy: f64,
    pub history: Vec<EpochRecord>,
}

/// First-order estimate of a curve's RI next to the measured value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorCheck {
    pub attack: AttackKind,
    pub seed: Option<u64>,
    pub ri: f64,
    pub estimate: f64,
    pub gap: f64,
}

/// Descriptive statistics; never used as pass/fail checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Diagnostics {
    /// Spearman rank correlation between sensitivity and attribution drift.
    pub sensitivity_drift_spearman: Option<f64>,
    /// Pearson correlation across seeds between mean input-gradient L1 norm
    /// and the FGSM curve's initial slope.
    pub gradnorm_slope_pearson: Option<f64>,
    pub taylor: Vec<TaylorCheck>,
    /// Top sensitivity features, by name.
    pub top_sensitivity: Vec<String>,
    /// Top drift features, by name.
    pub top_drift: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: String,
    pub provenance: Provenance,
    pub runs: Vec<SeedRun>,
    /// Per-seed curves.
    pub curves: Vec<RobustnessCurve>,
    /// Mean over seeds, one per attack.
    pub mean_curves: Vec<RobustnessCurve>,
    pub metrics: Vec<ExtendedMetrics>,
    pub sensitivity: Option<SensitivityReport>,
    pub drift: Option<DriftReport>,
    pub ablation: Option<AblationRecord>,
    pub diagnostics: Option<Diagnostics>,
}

impl RunReport {
    pub fn new(provenance: Provenance) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            provenance,
            runs: Vec::new(),
            curves: Vec::new(),
            mean_curves: Vec::new(),
            metrics: Vec::new(),
            sensitivity: None,
            drift: None,
            ablation: None,
            diagnostics: None,
        }
    }

    /// The report exactly as it will read back after [`to_canonical_json`].
    pub fn canonicalized(&self) -> Result<RunReport> {
        Ok(serde_json::from_value(canonical_value(self)?)?)
    }

    fn numbers(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for run in &self.runs {
            out.push(run.clean_accuracy);
            for h in &run.history {
                out.extend([h.loss, h.accuracy]);
            }
        }
        for c in self.curves.iter().chain(&self.mean_curves) {
            out.extend(&c.epsilons);
            out.extend(&c.accuracies);
            out.extend([c.ri, c.meta.alpha]);
        }
        for m in &self.metrics {
            out.extend([m.epsilon, m.accuracy, m.precision, m.recall]);
            out.extend(m.auc);
        }
        if let Some(s) = &self.sensitivity {
            out.extend(&s.s);
        }
        if let Some(d) = &self.drift {
            out.push(d.drift_epsilon);
            out.extend(&d.delta_phi);
            out.extend(&d.grid_epsilons);
            d.grid.iter().for_each(|r| out.extend(r));
        }
        if let Some(a) = &self.ablation {
            for r in &a.rows {
                out.extend([r.clean_acc, r.ri_fgsm, r.ri_pgd]);
                out.extend(r.delta_ri);
            }
            for c in &a.curves {
                out.extend(&c.epsilons);
                out.extend(&c.accuracies);
                out.push(c.ri);
            }
        }
        if let Some(d) = &self.diagnostics {
            out.extend(d.sensitivity_drift_spearman);
            out.extend(d.gradnorm_slope_pearson);
            for t in &d.taylor {
                out.extend([t.ri, t.estimate, t.gap]);
            }
        }
        out
    }
}

/// Rounds to 12 significant digits.
pub fn round_sig(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{:.*e}", SIG_DIGITS - 1, v).parse().unwrap_or(v)
}

/// Fixed CSV number format: the 12-significant-digit value in shortest form.
pub fn fmt_sig(v: f64) -> String {
    let r = round_sig(v);
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let r = round_sig(n.as_f64().unwrap());
            *v = serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

fn canonical_value(report: &RunReport) -> Result<Value> {
    if let Some(bad) = report.numbers().into_iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("report value {bad}")));
    }
    let mut v = serde_json::to_value(report)?;
    round_value(&mut v);
    Ok(v)
}

/// Canonical JSON text; `serde_json` maps keep keys sorted.
pub fn to_canonical_json(report: &RunReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&canonical_value(report)?)?;
    s.push('\n');
    Ok(s)
}

pub fn emit_report(report: &RunReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_canonical_json(report)?).map_err(|e| Error::io(path, e))
}

pub fn parse_report(s: &str) -> Result<RunReport> {
    let v: Value = serde_json::from_str(s)?;
    let version = v
        .get("schema_version")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Schema("report has no schema_version".into()))?;
    let major = version.split('.').next().unwrap_or("");
    let ours = SCHEMA_VERSION.split('.').next().unwrap();
    if major != ours {
        return Err(Error::Schema(format!(
            "unsupported report schema version {version} (expected {ours}.x)"
        )));
    }
    Ok(serde_json::from_value(v)?)
}

pub fn load_report(path: impl AsRef<Path>) -> Result<RunReport> {
    let path = path.as_ref();
    let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_report(&s)
}

/// Hex SHA-256 of a file's bytes.
pub fn hash_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

fn with_file(
    path: &Path,
    f: impl FnOnce(&mut csv::Writer<std::fs::File>) -> Result<()>,
) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    f(&mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_curve_csv<W: Write>(curve: &RobustnessCurve, w: &mut csv::Writer<W>) -> Result<()> {
    w.write_record(["epsilon", "accuracy"])?;
    for (e, a) in curve.epsilons.iter().zip(&curve.accuracies) {
        w.write_record([fmt_sig(*e), fmt_sig(*a)])?;
    }
    Ok(())
}

/// `epsilon,accuracy` rows.
pub fn emit_curve_csv(curve: &RobustnessCurve, path: impl AsRef<Path>) -> Result<()> {
    with_file(path.as_ref(), |w| write_curve_csv(curve, w))
}

/// Curve with its attack metadata and RI as canonical JSON.
pub fn emit_curve_json(curve: &RobustnessCurve, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut v = serde_json::to_value(curve)?;
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn write_grid_csv<W: Write>(drift: &DriftReport, w: &mut csv::Writer<W>) -> Result<()> {
    let mut header = vec!["epsilon".to_string()];
    header.extend(drift.top_k.iter().map(|&j| drift.feature_names[j].clone()));
    w.write_record(&header)?;
    for (e, row) in drift.grid_epsilons.iter().zip(&drift.grid) {
        let mut rec = vec![fmt_sig(*e)];
        rec.extend(drift.top_k.iter().map(|&j| fmt_sig(row[j])));
        w.write_record(&rec)?;
    }
    Ok(())
}

/// Heatmap layout: one row per ε, one column per top-ranked feature.
pub fn emit_grid_csv(drift: &DriftReport, path: impl AsRef<Path>) -> Result<()> {
    with_file(path.as_ref(), |w| write_grid_csv(drift, w))
}

pub const TABLE_COLUMNS: [&str; 6] = [
    "Dataset", "Model", "CleanAcc", "RI_FGSM", "RI_PGD", "DeltaRI",
];

pub fn write_table_csv<W: Write>(record: &AblationRecord, w: &mut csv::Writer<W>) -> Result<()> {
    w.write_record(TABLE_COLUMNS)?;
    for r in &record.rows {
        w.write_record([
            r.dataset.clone(),
            r.model.clone(),
            fmt_sig(r.clean_acc),
            fmt_sig(r.ri_fgsm),
            fmt_sig(r.ri_pgd),
            r.delta_ri.map(fmt_sig).unwrap_or_default(),
        ])?;
    }
    Ok(())
}

/// Ablation table; `DeltaRI` is empty on baseline rows.
pub fn emit_table_csv(record: &AblationRecord, path: impl AsRef<Path>) -> Result<()> {
    with_file(path.as_ref(), |w| write_table_csv(record, w))
}

/// `feature,S_i,delta_phi`; either column may be empty when not computed.
pub fn emit_sensitivity_csv(
    sensitivity: Option<&SensitivityReport>,
    drift: Option<&DriftReport>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let names = sensitivity
        .map(|s| &s.feature_names)
        .or(drift.map(|d| &d.feature_names))
        .ok_or_else(|| Error::InvalidArgument("nothing to export".into()))?;
    with_file(path.as_ref(), |w| {
        w.write_record(["feature", "S_i", "delta_phi"])?;
        for (j, name) in names.iter().enumerate() {
            w.write_record([
                name.clone(),
                sensitivity.map(|s| fmt_sig(s.s[j])).unwrap_or_default(),
                drift.map(|d| fmt_sig(d.delta_phi[j])).unwrap_or_default(),
            ])?;
        }
        Ok(())
    })
}

/// `metric,value,epsilon,attack` rows.
pub fn emit_metrics_csv(metrics: &[ExtendedMetrics], path: impl AsRef<Path>) -> Result<()> {
    with_file(path.as_ref(), |w| {
        w.write_record(["metric", "value", "epsilon", "attack"])?;
        for m in metrics {
            let mut rows = vec![
                ("accuracy", m.accuracy),
                ("precision", m.precision),
                ("recall", m.recall),
            ];
            if let Some(auc) = m.auc {
                rows.push(("auc", auc));
            }
            for (name, v) in rows {
                w.write_record([
                    name.to_string(),
                    fmt_sig(v),
                    fmt_sig(m.epsilon),
                    m.attack.to_string(),
                ])?;
            }
        }
        Ok(())
    })
}

pub fn emit_history_csv(history: &[EpochRecord], path: impl AsRef<Path>) -> Result<()> {
    with_file(path.as_ref(), |w| {
        w.write_record(["epoch", "loss", "accuracy"])?;
        for h in history {
            w.write_record([h.epoch.to_string(), fmt_sig(h.loss), fmt_sig(h.accuracy)])?;
        }
        Ok(())
    })
}
