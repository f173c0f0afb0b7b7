//! Datasets, file loaders, standardization and cross-validation folds.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::error::{Error, Result};
use crate::rng;

/// Binary class label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    /// Sign of a decision value; zero maps to [`Label::Positive`].
    pub fn from_decision(value: f64) -> Label {
        if value >= 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Positive => "+1",
            Label::Negative => "-1",
        }
    }
}

/// Instances with binary labels. Both classes are present, every entry is
/// finite, `n >= 2` and `d >= 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    x: Array2<f64>,
    y: Vec<Label>,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Vec<Label>) -> Result<Self> {
        Self::with_names(x, y, None)
    }

    pub fn with_names(
        x: Array2<f64>,
        y: Vec<Label>,
        feature_names: Option<Vec<String>>,
    ) -> Result<Self> {
        let (n, d) = x.dim();
        if n != y.len() {
            return Err(Error::InvalidDataset(format!(
                "{} rows but {} labels",
                n,
                y.len()
            )));
        }
        if n < 2 {
            return Err(Error::InvalidDataset(format!("need n >= 2, got {n}")));
        }
        if d < 1 {
            return Err(Error::InvalidDataset("need at least one feature".into()));
        }
        if let Some(names) = &feature_names {
            if names.len() != d {
                return Err(Error::InvalidDataset(format!(
                    "{} feature names for {} features",
                    names.len(),
                    d
                )));
            }
        }
        if let Some(((i, j), v)) = x.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite value {v} at row {i}, column {j}"
            )));
        }
        let positives = y.iter().filter(|&&l| l == Label::Positive).count();
        if positives == 0 || positives == n {
            return Err(Error::InvalidDataset(
                "both classes must be present".into(),
            ));
        }
        Ok(Dataset {
            x,
            y,
            feature_names,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn labels(&self) -> &[Label] {
        &self.y
    }

    pub fn label(&self, i: usize) -> Label {
        self.y[i]
    }

    /// Labels as `±1.0`.
    pub fn signs(&self) -> Vec<f64> {
        self.y.iter().map(|l| l.sign()).collect()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.x.row(i)
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn class_count(&self, label: Label) -> usize {
        self.y.iter().filter(|&&l| l == label).count()
    }

    /// Rows `indices`, in that order. Fails if the selection is single-class.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let x = self.x.select(Axis(0), indices);
        let y = indices.iter().map(|&i| self.y[i]).collect();
        Dataset::with_names(x, y, self.feature_names.clone())
    }

    /// Same labels, replaced feature matrix.
    pub fn with_features(&self, x: Array2<f64>) -> Result<Dataset> {
        if x.nrows() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: x.nrows(),
            });
        }
        let names = if x.ncols() == self.d() {
            self.feature_names.clone()
        } else {
            None
        };
        Dataset::with_names(x, self.y.clone(), names)
    }

    /// Writes the dataset in libsvm sparse text form. Zero entries are
    /// omitted, except that column `d` is always written once so that a
    /// reload recovers the same dimensionality.
    pub fn to_libsvm_string(&self) -> String {
        let d = self.d();
        let last_written = self.x.column(d - 1).iter().any(|&v| v != 0.0);
        let mut out = String::new();
        for (i, row) in self.x.outer_iter().enumerate() {
            out.push_str(self.y[i].as_str());
            for (j, &v) in row.iter().enumerate() {
                let pin = !last_written && i == 0 && j == d - 1;
                if v != 0.0 || pin {
                    let _ = write!(out, " {}:{}", j + 1, v);
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Maps raw label tokens onto `{+1, -1}`.
///
/// Accepted label sets: `{-1, +1}` (identity), `{0, 1}` (`0 -> -1`,
/// `1 -> +1`) and `{1, 2}` (`1 -> +1`, `2 -> -1`).
fn remap_labels(raw: &[(usize, String)]) -> Result<Vec<Label>> {
    let mut values = Vec::with_capacity(raw.len());
    for (line, tok) in raw {
        let v: f64 = tok.trim().parse().map_err(|_| Error::Parse {
            line: *line,
            message: format!("unparseable label {tok:?}"),
        })?;
        if v.fract() != 0.0 || !v.is_finite() {
            return Err(Error::Parse {
                line: *line,
                message: format!("label {tok:?} is not an integer"),
            });
        }
        values.push(v as i64);
    }
    let set: BTreeSet<i64> = values.iter().copied().collect();
    if set.len() == 1 {
        return Err(Error::InvalidDataset(
            "file contains a single class".into(),
        ));
    }
    let positive = match set.iter().copied().collect::<Vec<_>>().as_slice() {
        [-1, 1] => 1,
        [0, 1] => 1,
        [1, 2] => 1,
        _ => {
            return Err(Error::LabelSet {
                found: set.iter().map(|v| v.to_string()).collect(),
            })
        }
    };
    Ok(values
        .into_iter()
        .map(|v| {
            if v == positive {
                Label::Positive
            } else {
                Label::Negative
            }
        })
        .collect())
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Loads a comma-separated file. Rows keep their file order; `label_column`
/// is a zero-based column index.
pub fn load_csv(path: impl AsRef<Path>, label_column: usize, has_header: bool) -> Result<Dataset> {
    parse_csv(&read_file(path.as_ref())?, label_column, has_header)
}

pub fn parse_csv(text: &str, label_column: usize, has_header: bool) -> Result<Dataset> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    let mut names = None;
    if has_header {
        if let Some((_, header)) = lines.next() {
            let cols: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
            names = Some(
                cols.iter()
                    .enumerate()
                    .filter(|(j, _)| *j != label_column)
                    .map(|(_, s)| s.clone())
                    .collect::<Vec<_>>(),
            );
        }
    }
    let mut width = None;
    let mut raw_labels = Vec::new();
    let mut values = Vec::new();
    for (line, text) in lines {
        let cols: Vec<&str> = text.split(',').map(str::trim).collect();
        match width {
            None => {
                if label_column >= cols.len() {
                    return Err(Error::Parse {
                        line,
                        message: format!(
                            "label column {label_column} out of range for {} columns",
                            cols.len()
                        ),
                    });
                }
                width = Some(cols.len());
            }
            Some(w) if w != cols.len() => {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {w} columns, found {}", cols.len()),
                })
            }
            _ => {}
        }
        for (j, tok) in cols.iter().enumerate() {
            if j == label_column {
                raw_labels.push((line, tok.to_string()));
            } else {
                let v: f64 = tok.parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("unparseable value {tok:?} in column {j}"),
                })?;
                values.push(v);
            }
        }
    }
    let width = width.ok_or_else(|| Error::InvalidDataset("empty file".into()))?;
    let n = raw_labels.len();
    let x = Array2::from_shape_vec((n, width - 1), values)
        .map_err(|e| Error::InvalidDataset(e.to_string()))?;
    let y = remap_labels(&raw_labels)?;
    if let Some(nm) = &names {
        if nm.len() != width - 1 {
            names = None;
        }
    }
    Dataset::with_names(x, y, names)
}

/// Loads libsvm sparse text (`<label> <idx>:<val> ...`, 1-based ascending
/// indices). Absent entries are zero; `d` is the largest index seen.
pub fn load_libsvm(path: impl AsRef<Path>) -> Result<Dataset> {
    parse_libsvm(&read_file(path.as_ref())?)
}

pub fn parse_libsvm(text: &str) -> Result<Dataset> {
    let mut raw_labels = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut d = 0;
    for (i, text) in text.lines().enumerate() {
        let line = i + 1;
        let text = text.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let mut toks = text.split_whitespace();
        let label = toks.next().expect("non-empty line has a token");
        raw_labels.push((line, label.trim_start_matches('+').to_string()));
        let mut row = Vec::new();
        let mut last = 0;
        for tok in toks {
            let (idx, val) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line,
                message: format!("expected <index>:<value>, found {tok:?}"),
            })?;
            let idx: usize = idx.parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad index in {tok:?}"),
            })?;
            let val: f64 = val.parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad value in {tok:?}"),
            })?;
            if idx == 0 || idx <= last {
                return Err(Error::Parse {
                    line,
                    message: format!("indices must be 1-based and ascending, found {idx} after {last}"),
                });
            }
            last = idx;
            d = d.max(idx);
            row.push((idx - 1, val));
        }
        rows.push(row);
    }
    let mut x = Array2::zeros((rows.len(), d.max(1)));
    for (i, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            x[[i, j]] = v;
        }
    }
    let y = remap_labels(&raw_labels)?;
    Dataset::new(x, y)
}

/// Loads by extension: `.csv` (header, label in the last column) or libsvm
/// text for anything else.
pub fn load_auto(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let is_csv = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("csv"))
        .unwrap_or(false);
    if is_csv {
        let text = read_file(path)?;
        let header = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
        let has_header = header
            .split(',')
            .any(|tok| tok.trim().parse::<f64>().is_err());
        let cols = header.split(',').count();
        parse_csv(&text, cols.saturating_sub(1), has_header)
    } else {
        load_libsvm(path)
    }
}

/// Per-feature mean and population standard deviation.
#[derive(Clone, Debug, PartialEq)]
pub struct StandardizationParams {
    pub mean: Array1<f64>,
    pub std: Array1<f64>,
}

impl StandardizationParams {
    /// Fits on the rows of `train`. A feature whose spread is below
    /// `1e-12 * max(1, |mean|)` is treated as constant (`std = 0`).
    pub fn fit(train: &Dataset) -> Self {
        Self::fit_matrix(train.x())
    }

    pub fn fit_matrix(x: &Array2<f64>) -> Self {
        let n = x.nrows() as f64;
        let mean = x.sum_axis(Axis(0)) / n;
        let mut std = Array1::zeros(x.ncols());
        for (j, col) in x.columns().into_iter().enumerate() {
            let m = mean[j];
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            let s = var.sqrt();
            std[j] = if s <= 1e-12 * m.abs().max(1.0) { 0.0 } else { s };
        }
        StandardizationParams { mean, std }
    }

    pub fn apply(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                found: x.ncols(),
            });
        }
        let mut out = x.clone();
        for mut row in out.rows_mut() {
            self.apply_in_place(row.view_mut().into_slice().expect("standard layout"));
        }
        Ok(out)
    }

    pub fn apply_row(&self, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        if x.len() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                found: x.len(),
            });
        }
        let mut out = x.to_owned();
        self.apply_in_place(out.as_slice_mut().expect("contiguous"));
        Ok(out)
    }

    fn apply_in_place(&self, row: &mut [f64]) {
        for (j, v) in row.iter_mut().enumerate() {
            let s = self.std[j];
            *v = if s == 0.0 { 0.0 } else { (*v - self.mean[j]) / s };
        }
    }

    pub fn apply_dataset(&self, d: &Dataset) -> Result<Dataset> {
        d.with_features(self.apply(d.x())?)
    }
}

/// Assignment of `n` instances to `k` folds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }

    /// FNV-1a hash of the assignment vector, for run logs.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for &a in &self.assignments {
            for b in (a as u64).to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

/// Seeded Fisher–Yates shuffle of `0..n`, then round-robin fold assignment
/// along the shuffled order.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need k >= 2 folds, got {k}")));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!(
            "cannot split {n} instances into {k} folds"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    rng::shuffle(&mut rng::seeded(seed), &mut order);
    let mut assignments = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        assignments[i] = pos % k;
    }
    Ok(FoldPlan {
        k,
        seed,
        assignments,
    })
}
