//! Plain-text model files.
//!
//! Every number is written in shortest round-trip decimal form, so a saved
//! model reloads bit for bit. Margin models:
//!
//! ```text
//! marginmetric margin-model
//! algo esvm
//! kernel gauss:1
//! C 10
//! lambda 3.3333333333333335
//! bias -0.12
//! norm_factor 208
//! objective 1.5
//! iterations 412
//! kkt_violation 9e-7
//! converged true
//! n_train 208
//! dim 60
//! mean …            (optional, with std)
//! std …
//! sv <index> <delta> <label> <x₁ … x_d>
//! ```
//!
//! Metric models store `k`, `M` row by row (`m` lines) and the training set
//! (`x <label> <x₁ … x_d>` lines).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array1, Array2};

use crate::data::{Dataset, Label, StandardizationParams};
use crate::error::{Error, Result};
use crate::eval::Algo;
use crate::kernel::KernelSpec;
use crate::lmnn::{self, Mahalanobis};
use crate::maxmargin::MarginModel;

const MARGIN_HEADER: &str = "marginmetric margin-model";
const METRIC_HEADER: &str = "marginmetric metric-model";

#[derive(Clone, Debug, PartialEq)]
pub enum SavedModel {
    Margin {
        algo: Algo,
        model: MarginModel,
        standardization: Option<StandardizationParams>,
    },
    Metric {
        metric: Mahalanobis,
        k: usize,
        train: Dataset,
        standardization: Option<StandardizationParams>,
    },
}

fn join(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn label_str(l: Label) -> &'static str {
    l.as_str()
}

fn parse_label(s: &str) -> Result<Label> {
    match s {
        "+1" | "1" => Ok(Label::Positive),
        "-1" => Ok(Label::Negative),
        other => Err(Error::ModelFormat(format!("bad label {other:?}"))),
    }
}

fn write_standardization(s: &mut String, p: &Option<StandardizationParams>) {
    if let Some(p) = p {
        let _ = writeln!(s, "mean {}", join(p.mean.iter().copied()));
        let _ = writeln!(s, "std {}", join(p.std.iter().copied()));
    }
}

impl SavedModel {
    pub fn standardization(&self) -> Option<&StandardizationParams> {
        match self {
            SavedModel::Margin { standardization, .. } | SavedModel::Metric { standardization, .. } => {
                standardization.as_ref()
            }
        }
    }

    /// Predicts raw (unstandardized) rows.
    pub fn predict(&self, x: &Array2<f64>) -> Result<Vec<Label>> {
        let x = match self.standardization() {
            Some(p) => p.apply(x)?,
            None => x.clone(),
        };
        match self {
            SavedModel::Margin { model, .. } => model.predict_all(&x),
            SavedModel::Metric { metric, k, train, .. } => lmnn::knn_predict_all(metric, train, &x, *k),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        match self {
            SavedModel::Margin {
                algo,
                model,
                standardization,
            } => {
                let _ = writeln!(s, "{MARGIN_HEADER}");
                let _ = writeln!(s, "algo {algo}");
                let _ = writeln!(s, "kernel {}", model.spec);
                let _ = writeln!(s, "C {}", model.c);
                let _ = writeln!(s, "lambda {}", model.lambda);
                let _ = writeln!(s, "bias {}", model.bias);
                let _ = writeln!(s, "norm_factor {}", model.normalization_factor);
                let _ = writeln!(s, "objective {}", model.objective);
                let _ = writeln!(s, "iterations {}", model.iterations);
                let _ = writeln!(s, "kkt_violation {}", model.kkt_violation);
                let _ = writeln!(s, "converged {}", model.converged);
                let _ = writeln!(s, "n_train {}", model.delta.len());
                let _ = writeln!(s, "dim {}", model.dim());
                write_standardization(&mut s, standardization);
                for (k, &i) in model.support.iter().enumerate() {
                    let _ = writeln!(
                        s,
                        "sv {i} {} {} {}",
                        model.delta[i],
                        label_str(model.support_labels[k]),
                        join(model.support_vectors.row(k).iter().copied())
                    );
                }
            }
            SavedModel::Metric {
                metric,
                k,
                train,
                standardization,
            } => {
                let _ = writeln!(s, "{METRIC_HEADER}");
                let _ = writeln!(s, "k {k}");
                let _ = writeln!(s, "dim {}", metric.dim());
                write_standardization(&mut s, standardization);
                for row in metric.matrix().outer_iter() {
                    let _ = writeln!(s, "m {}", join(row.iter().copied()));
                }
                for i in 0..train.n() {
                    let _ = writeln!(s, "x {} {}", label_str(train.label(i)), join(train.row(i).iter().copied()));
                }
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<SavedModel> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next().map(str::trim) {
            Some(MARGIN_HEADER) => parse_margin(lines),
            Some(METRIC_HEADER) => parse_metric(lines),
            _ => Err(Error::ModelFormat("unknown header".into())),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<SavedModel> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SavedModel::from_text(&text)
    }
}

fn num<T: FromStr>(s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::ModelFormat(format!("bad number {s:?}")))
}

fn nums(words: &[&str]) -> Result<Vec<f64>> {
    words.iter().map(|w| num(w)).collect()
}

struct Fields<'a> {
    pairs: Vec<(&'a str, Vec<&'a str>)>,
}

impl<'a> Fields<'a> {
    fn collect(lines: impl Iterator<Item = &'a str>) -> Self {
        let pairs = lines
            .map(|l| {
                let mut w = l.split_whitespace();
                let key = w.next().unwrap_or_default();
                (key, w.collect())
            })
            .collect();
        Fields { pairs }
    }

    fn one(&self, key: &str) -> Result<&'a str> {
        self.pairs
            .iter()
            .find(|(k, _)| *k == key)
            .and_then(|(_, v)| v.first().copied())
            .ok_or_else(|| Error::ModelFormat(format!("missing {key}")))
    }

    fn all(&self, key: &str) -> impl Iterator<Item = &Vec<&'a str>> + '_ {
        let key = key.to_string();
        self.pairs.iter().filter(move |(k, _)| *k == key).map(|(_, v)| v)
    }

    fn standardization(&self, dim: usize) -> Result<Option<StandardizationParams>> {
        let mean = self.all("mean").next();
        let std = self.all("std").next();
        match (mean, std) {
            (None, None) => Ok(None),
            (Some(m), Some(s)) => {
                let mean = Array1::from(nums(m)?);
                let std = Array1::from(nums(s)?);
                if mean.len() != dim || std.len() != dim {
                    return Err(Error::ModelFormat("standardization length differs from dim".into()));
                }
                Ok(Some(StandardizationParams { mean, std }))
            }
            _ => Err(Error::ModelFormat("mean and std must appear together".into())),
        }
    }
}

fn parse_margin<'a>(lines: impl Iterator<Item = &'a str>) -> Result<SavedModel> {
    let f = Fields::collect(lines);
    let algo: Algo = f.one("algo")?.parse()?;
    let spec: KernelSpec = f.one("kernel")?.parse()?;
    let n_train: usize = num(f.one("n_train")?)?;
    let dim: usize = num(f.one("dim")?)?;
    let mut delta = vec![0.0; n_train];
    let mut support = Vec::new();
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for w in f.all("sv") {
        if w.len() != dim + 3 {
            return Err(Error::ModelFormat(format!("sv line has {} fields, expected {}", w.len(), dim + 3)));
        }
        let i: usize = num(w[0])?;
        if i >= n_train || support.last().is_some_and(|&p| p >= i) {
            return Err(Error::ModelFormat(format!("bad support index {i}")));
        }
        delta[i] = num(w[1])?;
        support.push(i);
        labels.push(parse_label(w[2])?);
        rows.extend(nums(&w[3..])?);
    }
    let support_vectors = Array2::from_shape_vec((support.len(), dim), rows)
        .map_err(|e| Error::ModelFormat(e.to_string()))?;
    let model = MarginModel {
        delta,
        bias: num(f.one("bias")?)?,
        c: num(f.one("C")?)?,
        lambda: num(f.one("lambda")?)?,
        spec,
        normalization_factor: num(f.one("norm_factor")?)?,
        support,
        support_vectors,
        support_labels: labels,
        objective: num(f.one("objective")?)?,
        iterations: num(f.one("iterations")?)?,
        kkt_violation: num(f.one("kkt_violation")?)?,
        converged: num(f.one("converged")?)?,
    };
    Ok(SavedModel::Margin {
        algo,
        model,
        standardization: f.standardization(dim)?,
    })
}

fn parse_metric<'a>(lines: impl Iterator<Item = &'a str>) -> Result<SavedModel> {
    let f = Fields::collect(lines);
    let k: usize = num(f.one("k")?)?;
    let dim: usize = num(f.one("dim")?)?;
    let mut m = Vec::with_capacity(dim * dim);
    for w in f.all("m") {
        m.extend(nums(w)?);
    }
    let m = Array2::from_shape_vec((dim, dim), m).map_err(|e| Error::ModelFormat(e.to_string()))?;
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for w in f.all("x") {
        if w.len() != dim + 1 {
            return Err(Error::ModelFormat(format!("x line has {} fields, expected {}", w.len(), dim + 1)));
        }
        labels.push(parse_label(w[0])?);
        rows.extend(nums(&w[1..])?);
    }
    let x = Array2::from_shape_vec((labels.len(), dim), rows).map_err(|e| Error::ModelFormat(e.to_string()))?;
    Ok(SavedModel::Metric {
        metric: Mahalanobis::new(m)?,
        k,
        train: Dataset::new(x, labels)?,
        standardization: f.standardization(dim)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxmargin;
    use ndarray::array;

    fn toy() -> Dataset {
        Dataset::new(
            array![[0.1, 1.0], [0.3, 0.7], [2.0, -0.4], [1.7, 0.2]],
            vec![Label::Positive, Label::Positive, Label::Negative, Label::Negative],
        )
        .unwrap()
    }

    #[test]
    fn margin_round_trip() {
        let d = toy();
        let params = StandardizationParams::fit(&d);
        let ds = params.apply_dataset(&d).unwrap();
        let m = maxmargin::fit_esvm(&ds, &KernelSpec::gaussian(0.7).unwrap(), 10.0, 10.0 / 3.0).unwrap();
        let saved = SavedModel::Margin {
            algo: Algo::Esvm,
            model: m.into_inner(),
            standardization: Some(params),
        };
        let back = SavedModel::from_text(&saved.to_text()).unwrap();
        assert_eq!(back, saved);
        assert_eq!(back.predict(d.x()).unwrap(), saved.predict(d.x()).unwrap());
    }

    #[test]
    fn metric_round_trip() {
        let saved = SavedModel::Metric {
            metric: Mahalanobis::new(array![[2.0, 0.25], [0.25, 1.0 / 3.0]]).unwrap(),
            k: 3,
            train: toy(),
            standardization: None,
        };
        let back = SavedModel::from_text(&saved.to_text()).unwrap();
        assert_eq!(back, saved);
    }

    #[test]
    fn rejects_garbage() {
        assert!(SavedModel::from_text("hello").is_err());
        assert!(SavedModel::from_text(&format!("{MARGIN_HEADER}\nalgo svm\n")).is_err());
    }
}
