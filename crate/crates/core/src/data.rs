//! Tabular dataset ingestion and preprocessing.
//!
//! Raw CSV exports are read into a [`RawDataset`], split into train/test
//! partitions, and z-score standardized with a [`Normalizer`] fit on the
//! training partition only. [`synth_gaussian`] produces small two-class
//! datasets with known geometry for oracle testing.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{self, Stream};

/// Unstandardized features with labels mapped to dense class indices.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub rows: Matrix,
    pub labels: Vec<usize>,
    pub feature_names: Vec<String>,
    pub label_name: String,
    /// Original label text for each class index, in first-seen order.
    pub class_names: Vec<String>,
}

/// Per-feature mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Standardized features ready for training and attack.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Vec<usize>,
    pub feature_names: Vec<String>,
    pub n_classes: usize,
}

impl RawDataset {
    pub fn len(&self) -> usize {
        self.rows.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.rows() == 0
    }

    pub fn n_features(&self) -> usize {
        self.rows.cols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    fn subset(&self, indices: &[usize]) -> RawDataset {
        RawDataset {
            rows: self.rows.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            label_name: self.label_name.clone(),
            class_names: self.class_names.clone(),
        }
    }
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.rows() == 0
    }

    pub fn n_features(&self) -> usize {
        self.x.cols()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(indices),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            feature_names: self.feature_names.clone(),
            n_classes: self.n_classes,
        }
    }

    /// Wraps an already-standardized matrix. Labels must lie in `0..n_classes`.
    pub fn new(
        x: Matrix,
        y: Vec<usize>,
        feature_names: Vec<String>,
        n_classes: usize,
    ) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.rows(),
                got: y.len(),
            });
        }
        if feature_names.len() != x.cols() {
            return Err(Error::DimensionMismatch {
                expected: x.cols(),
                got: feature_names.len(),
            });
        }
        if let Some(&bad) = y.iter().find(|&&c| c >= n_classes) {
            return Err(Error::Data(format!("label {bad} outside 0..{n_classes}")));
        }
        if !x.all_finite() {
            return Err(Error::NonFinite("dataset features".into()));
        }
        Ok(Self {
            x,
            y,
            feature_names,
            n_classes,
        })
    }
}

/// Reads a headered CSV file; `label_column` names the class column.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<RawDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, label_column)
}

/// Same as [`load_csv`] over any reader.
pub fn read_csv<R: Read>(reader: R, label_column: &str) -> Result<RawDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::Data(format!("label column `{label_column}` not found in header")))?;
    if headers.len() < 2 {
        return Err(Error::Data("no feature columns".into()));
    }
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut class_names: Vec<String> = Vec::new();
    let mut class_index: HashMap<String, usize> = HashMap::new();
    let mut n = 0usize;
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                row,
                column: String::new(),
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        for (c, field) in record.iter().enumerate() {
            if c == label_idx {
                let key = field.trim().to_string();
                let next = class_names.len();
                let idx = *class_index.entry(key.clone()).or_insert_with(|| {
                    class_names.push(key);
                    next
                });
                labels.push(idx);
            } else {
                let value: f64 = field.trim().parse().map_err(|_| Error::Parse {
                    row,
                    column: headers[c].clone(),
                    message: format!("`{field}` is not a number"),
                })?;
                if !value.is_finite() {
                    return Err(Error::Parse {
                        row,
                        column: headers[c].clone(),
                        message: format!("non-finite value `{field}`"),
                    });
                }
                data.push(value);
            }
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::Data("no data rows".into()));
    }
    if class_names.len() < 2 {
        return Err(Error::Data(format!(
            "label column `{label_column}` has fewer than 2 distinct values"
        )));
    }
    Ok(RawDataset {
        rows: Matrix::from_vec(n, feature_names.len(), data)?,
        labels,
        feature_names,
        label_name: label_column.to_string(),
        class_names,
    })
}

/// Writes a dataset as CSV with 12 significant digits; the label column is last.
pub fn write_csv<W: Write>(data: &RawDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = data.feature_names.clone();
    header.push(data.label_name.clone());
    w.write_record(&header)?;
    for (i, row) in data.rows.iter_rows().enumerate() {
        let mut rec: Vec<String> = row.iter().map(|&v| crate::report::fmt_sig(v)).collect();
        rec.push(data.class_names[data.labels[i]].clone());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// Column means and population standard deviations; zero-variance columns get std 1.
pub fn fit_normalizer(train: &RawDataset) -> Result<Normalizer> {
    let n = train.len();
    if n == 0 {
        return Err(Error::Data(
            "cannot fit normalizer on an empty dataset".into(),
        ));
    }
    let d = train.n_features();
    let mut mean = vec![0.0; d];
    for row in train.rows.iter_rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut var = vec![0.0; d];
    for row in train.rows.iter_rows() {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            let c = v - m;
            *s += c * c;
        }
    }
    let std = var
        .into_iter()
        .map(|s| {
            let sd = (s / n as f64).sqrt();
            if sd > 0.0 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    Ok(Normalizer { mean, std })
}

pub fn apply_normalizer(norm: &Normalizer, data: &RawDataset) -> Result<Dataset> {
    let d = data.n_features();
    if norm.mean.len() != d || norm.std.len() != d {
        return Err(Error::DimensionMismatch {
            expected: norm.mean.len(),
            got: d,
        });
    }
    let mut x = data.rows.clone();
    for i in 0..x.rows() {
        for ((v, m), s) in x.row_mut(i).iter_mut().zip(&norm.mean).zip(&norm.std) {
            *v = (*v - m) / s;
        }
    }
    Dataset::new(
        x,
        data.labels.clone(),
        data.feature_names.clone(),
        data.n_classes(),
    )
}

/// Seeded shuffled partition; the first part holds `floor(n * train_fraction)` rows.
pub fn split(
    data: &RawDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(RawDataset, RawDataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction {train_fraction} must lie strictly between 0 and 1"
        )));
    }
    let n = data.len();
    if n < 2 {
        return Err(Error::Data(format!(
            "need at least 2 rows to split, got {n}"
        )));
    }
    let perm = permutation(n, seed);
    let n_train = (n as f64 * train_fraction).floor() as usize;
    Ok((data.subset(&perm[..n_train]), data.subset(&perm[n_train..])))
}

/// Fisher–Yates permutation of `0..n` from the split stream.
pub fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::derived(seed, Stream::Split, 0));
    idx
}

/// Two balanced Gaussian classes centred at `±separation/2` on every axis.
///
/// Even rows belong to class 0 (negative mean), odd rows to class 1.
pub fn synth_gaussian(n: usize, d: usize, separation: f64, seed: u64) -> Result<RawDataset> {
    if n < 2 || d == 0 {
        return Err(Error::InvalidArgument(format!(
            "synthetic dataset needs n >= 2 and d >= 1, got n={n}, d={d}"
        )));
    }
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "separation {separation} must be >= 0"
        )));
    }
    let mut rng = rng::derived(seed, Stream::Synth, 0);
    let half = separation / 2.0;
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % 2;
        let centre = if class == 0 { -half } else { half };
        for _ in 0..d {
            let z: f64 = StandardNormal.sample(&mut rng);
            data.push(centre + z);
        }
        labels.push(class);
    }
    Ok(RawDataset {
        rows: Matrix::from_vec(n, d, data)?,
        labels,
        feature_names: (0..d).map(|j| format!("x{j}")).collect(),
        label_name: "label".into(),
        class_names: vec!["0".into(), "1".into()],
    })
}
