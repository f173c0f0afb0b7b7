//! Nested cross-validation.

use std::fmt;
use std::str::FromStr;

use log::warn;
use ndarray::{Array2, Axis};
use rayon::prelude::*;

use crate::boxqp::SolverOptions;
use crate::data::{self, Dataset, Label, StandardizationParams};
use crate::error::{Error, Result};
use crate::kernel::{self, KernelSpec};
use crate::lmnn::{self, LmnnConfig};
use crate::maxmargin;
use crate::rng;

/// Candidate values of `C`.
pub const DEFAULT_GRID: [f64; 5] = [0.1, 1.0, 10.0, 100.0, 1000.0];
/// `λ = C · LAMBDA_RATIO` for ε-SVM in benchmark mode.
pub const LAMBDA_RATIO: f64 = 1.0 / 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algo {
    Svm,
    Esvm,
    Lmnn,
}

impl Algo {
    pub fn as_str(self) -> &'static str {
        match self {
            Algo::Svm => "svm",
            Algo::Esvm => "esvm",
            Algo::Lmnn => "lmnn",
        }
    }

    pub fn uses_c(self) -> bool {
        !matches!(self, Algo::Lmnn)
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svm" => Ok(Algo::Svm),
            "esvm" => Ok(Algo::Esvm),
            "lmnn" => Ok(Algo::Lmnn),
            other => Err(Error::InvalidArgument(format!("unknown algorithm {other:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CvOptions {
    pub k_outer: usize,
    pub k_inner: usize,
    pub grid: Vec<f64>,
    pub lambda_ratio: f64,
    pub lmnn: LmnnConfig,
    pub solver: SolverOptions,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            k_outer: 10,
            k_inner: 10,
            grid: DEFAULT_GRID.to_vec(),
            lambda_ratio: LAMBDA_RATIO,
            lmnn: LmnnConfig::default(),
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvResult {
    pub algo: Algo,
    pub kernel: KernelSpec,
    /// Error rate of every outer fold that was evaluated.
    pub per_fold_errors: Vec<f64>,
    /// Prediction for every instance; `None` only inside skipped folds.
    pub pooled_predictions: Vec<Option<Label>>,
    pub mean_error: f64,
    /// Selected `C` per evaluated fold (`None` for LMNN).
    pub chosen_c_per_fold: Vec<Option<f64>>,
    pub skipped_folds: Vec<usize>,
    pub fold_fingerprint: u64,
}

struct Split {
    train: Dataset,
    test_x: Array2<f64>,
    test_y: Vec<Label>,
}

fn error_rate(pred: &[Label], truth: &[Label]) -> f64 {
    let wrong = pred.iter().zip(truth).filter(|(p, t)| p != t).count();
    wrong as f64 / truth.len() as f64
}

/// Trains `algo` on `train` (already standardized) and predicts `test`.
pub fn fit_predict(
    train: &Dataset,
    test: &Array2<f64>,
    algo: Algo,
    kernel: &KernelSpec,
    c: f64,
    opts: &CvOptions,
) -> Result<Vec<Label>> {
    match algo {
        Algo::Svm | Algo::Esvm => {
            let gram = kernel::gram(kernel, train)?;
            let lambda = if algo == Algo::Esvm { c * opts.lambda_ratio } else { 0.0 };
            let model = maxmargin::train_esvm_with(train, &gram, c, lambda, &opts.solver)?;
            model.predict_all(test)
        }
        Algo::Lmnn => {
            let metric = lmnn::train_lmnn(train, &opts.lmnn)?;
            let k = opts.lmnn.k_targets.min(train.n());
            lmnn::knn_predict_all(&metric, train, test, k)
        }
    }
}

/// `None` when the training part holds a single class.
fn standardized_split(data: &Dataset, train_idx: &[usize], test_idx: &[usize]) -> Result<Option<Split>> {
    let has = |l: Label| train_idx.iter().any(|&i| data.label(i) == l);
    if !has(Label::Positive) || !has(Label::Negative) {
        return Ok(None);
    }
    let train = data.subset(train_idx)?;
    let params = StandardizationParams::fit(&train);
    Ok(Some(Split {
        train: params.apply_dataset(&train)?,
        test_x: params.apply(&data.x().select(Axis(0), test_idx))?,
        test_y: test_idx.iter().map(|&i| data.label(i)).collect(),
    }))
}

/// Inner-CV mean error of every grid value, in grid order.
pub fn inner_cv_table(
    train: &Dataset,
    algo: Algo,
    kernel: &KernelSpec,
    grid: &[f64],
    k_inner: usize,
    seed: u64,
    opts: &CvOptions,
) -> Result<Vec<(f64, f64)>> {
    let k = k_inner.min(train.n());
    let plan = data::kfold_split(train.n(), k, seed)?;
    let mut folds = Vec::with_capacity(k);
    for f in 0..k {
        if let Some(split) = standardized_split(train, &plan.train_indices(f), &plan.test_indices(f))? {
            folds.push(split);
        }
    }
    grid.iter()
        .map(|&c| {
            let mut total = 0.0;
            for s in &folds {
                let pred = fit_predict(&s.train, &s.test_x, algo, kernel, c, opts)?;
                total += error_rate(&pred, &s.test_y);
            }
            let mean = if folds.is_empty() { 0.0 } else { total / folds.len() as f64 };
            Ok((c, mean))
        })
        .collect()
}

/// Grid value with the lowest inner-CV error; ties go to the smaller `C`.
pub fn select_c(
    train: &Dataset,
    algo: Algo,
    kernel: &KernelSpec,
    grid: &[f64],
    k_inner: usize,
    seed: u64,
    opts: &CvOptions,
) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty C grid".into()));
    }
    if grid.len() == 1 {
        return Ok(grid[0]);
    }
    let table = inner_cv_table(train, algo, kernel, grid, k_inner, seed, opts)?;
    let mut best = (f64::INFINITY, f64::INFINITY);
    for (c, err) in table {
        if err < best.1 || (err == best.1 && c < best.0) {
            best = (c, err);
        }
    }
    Ok(best.0)
}

pub fn run_cv(data: &Dataset, algo: Algo, kernel: &KernelSpec, k_outer: usize, seed: u64) -> Result<CvResult> {
    let opts = CvOptions {
        k_outer,
        ..Default::default()
    };
    run_cv_with(data, algo, kernel, seed, &opts)
}

struct FoldOutcome {
    fold: usize,
    test_idx: Vec<usize>,
    result: Option<(Vec<Label>, f64, Option<f64>)>,
}

/// Outer CV: per fold, standardize on the training part, pick `C` by inner
/// CV, train and predict the held-out part. Folds run in parallel.
pub fn run_cv_with(data: &Dataset, algo: Algo, kernel: &KernelSpec, seed: u64, opts: &CvOptions) -> Result<CvResult> {
    let plan = data::kfold_split(data.n(), opts.k_outer, seed)?;
    let outcomes: Vec<FoldOutcome> = (0..plan.k)
        .into_par_iter()
        .map(|fold| -> Result<FoldOutcome> {
            let train_idx = plan.train_indices(fold);
            let test_idx = plan.test_indices(fold);
            let Some(Split { train, test_x, test_y }) = standardized_split(data, &train_idx, &test_idx)? else {
                return Ok(FoldOutcome { fold, test_idx, result: None });
            };
            let c = if algo.uses_c() {
                let inner_seed = rng::mix_seed(seed, fold as u64);
                Some(select_c(&train, algo, kernel, &opts.grid, opts.k_inner, inner_seed, opts)?)
            } else {
                None
            };
            let pred = fit_predict(&train, &test_x, algo, kernel, c.unwrap_or(1.0), opts)?;
            let err = error_rate(&pred, &test_y);
            Ok(FoldOutcome {
                fold,
                test_idx,
                result: Some((pred, err, c)),
            })
        })
        .collect::<Result<_>>()?;

    let mut pooled = vec![None; data.n()];
    let mut per_fold_errors = Vec::new();
    let mut chosen = Vec::new();
    let mut skipped = Vec::new();
    for o in outcomes {
        match o.result {
            Some((pred, err, c)) => {
                for (&i, p) in o.test_idx.iter().zip(pred) {
                    pooled[i] = Some(p);
                }
                per_fold_errors.push(err);
                chosen.push(c);
            }
            None => {
                warn!("fold {} skipped: training part has a single class", o.fold);
                skipped.push(o.fold);
            }
        }
    }
    let mean_error = if per_fold_errors.is_empty() {
        f64::NAN
    } else {
        per_fold_errors.iter().sum::<f64>() / per_fold_errors.len() as f64
    };
    Ok(CvResult {
        algo,
        kernel: *kernel,
        per_fold_errors,
        pooled_predictions: pooled,
        mean_error,
        chosen_c_per_fold: chosen,
        skipped_folds: skipped,
        fold_fingerprint: plan.fingerprint(),
    })
}
