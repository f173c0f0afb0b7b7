//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on runtime or data errors, 2 on usage errors.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use ndarray::Axis;

use crate::data::{self, Dataset, StandardizationParams};
use crate::error::{Error, Result};
use crate::eval::{self, Algo, Manifest};
use crate::kernel::{self, KernelSpec};
use crate::lmnn::{self, LmnnConfig};
use crate::localview;
use crate::maxmargin;
use crate::persist::SavedModel;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const LINEARIZATION_TOL: f64 = 1e-8;
const REDUCTION_TOL: f64 = 1e-9;
const MARGIN_GAP_TOL: f64 = 1e-3;

#[derive(Debug, Parser)]
#[command(name = "marginmetric", version, about = "Max-margin classifiers and LMNN metric learning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AlgoArg {
    Svm,
    Esvm,
    Lmnn,
}

impl From<AlgoArg> for Algo {
    fn from(a: AlgoArg) -> Algo {
        match a {
            AlgoArg::Svm => Algo::Svm,
            AlgoArg::Esvm => Algo::Esvm,
            AlgoArg::Lmnn => Algo::Lmnn,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VerifyMode {
    MetricEquivalence,
    Linearization,
    LocalVote,
    Reductions,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model on a dataset and write it to a file.
    Train {
        #[arg(long, value_enum)]
        algo: AlgoArg,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "linear")]
        kernel: String,
        #[arg(long = "C", default_value_t = 1.0)]
        c: f64,
        /// ε-SVM penalty; defaults to C/3.
        #[arg(long)]
        lambda: Option<f64>,
        /// Target neighbors and kNN vote size for LMNN.
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 200)]
        lmnn_iters: usize,
        #[arg(long)]
        no_standardize: bool,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict a dataset with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Write one predicted label per line here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a benchmark manifest.
    Bench {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Numerical checks of the model equivalences on a dataset.
    Verify {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum)]
        mode: VerifyMode,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Random directions for metric-equivalence.
        #[arg(long, default_value_t = 20_000)]
        trials: usize,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 100)]
        lmnn_iters: usize,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        /// TSV destination for the linearization dump.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `argv` (including the program name) and runs the command.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(Error::KernelSpec(s)) => {
            eprintln!("error: invalid kernel spec {s:?}");
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

fn run(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Train {
            algo,
            dataset,
            kernel,
            c,
            lambda,
            k,
            lmnn_iters,
            no_standardize,
            seed,
            out,
        } => {
            let spec: KernelSpec = kernel.parse()?;
            let raw = data::load_auto(&dataset)?;
            let (train, standardization) = if no_standardize {
                (raw, None)
            } else {
                let p = StandardizationParams::fit(&raw);
                (p.apply_dataset(&raw)?, Some(p))
            };
            let saved = train_model(algo.into(), &train, spec, c, lambda, k, lmnn_iters, seed, standardization)?;
            saved.save(&out)?;
            println!("wrote {}", out.display());
            Ok(EXIT_OK)
        }
        Command::Predict { model, dataset, out } => {
            let saved = SavedModel::load(&model)?;
            let d = data::load_auto(&dataset)?;
            let pred = saved.predict(d.x())?;
            let wrong = pred.iter().zip(d.labels()).filter(|(p, t)| p != t).count();
            let mut body = String::new();
            for p in &pred {
                let _ = writeln!(body, "{}", p.as_str());
            }
            match out {
                Some(path) => fs::write(&path, body).map_err(|e| Error::io(&path, e))?,
                None => print!("{body}"),
            }
            eprintln!("error rate {}", wrong as f64 / d.n() as f64);
            Ok(EXIT_OK)
        }
        Command::Bench { manifest, seed, out } => {
            let m = Manifest::load(&manifest)?;
            let report = eval::benchmark(&m, seed)?;
            report.write(&out)?;
            print!("{}", report.errors_tsv());
            Ok(if report.failed_datasets.is_empty() { EXIT_OK } else { EXIT_RUNTIME })
        }
        Command::Verify {
            dataset,
            mode,
            seed,
            trials,
            k,
            lmnn_iters,
            folds,
            out,
        } => {
            let raw = data::load_auto(&dataset)?;
            let cfg = LmnnConfig {
                k_targets: k,
                max_iters: lmnn_iters,
                seed,
                ..Default::default()
            };
            match mode {
                VerifyMode::MetricEquivalence => verify_metric(&raw, trials, seed),
                VerifyMode::Linearization => verify_linearization(&raw, &cfg, seed, out),
                VerifyMode::LocalVote => verify_local_vote(&raw, &cfg, folds, seed),
                VerifyMode::Reductions => verify_reductions(&raw),
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn train_model(
    algo: Algo,
    train: &Dataset,
    spec: KernelSpec,
    c: f64,
    lambda: Option<f64>,
    k: usize,
    lmnn_iters: usize,
    seed: u64,
    standardization: Option<StandardizationParams>,
) -> Result<SavedModel> {
    match algo {
        Algo::Svm | Algo::Esvm => {
            let lambda = match algo {
                Algo::Svm => 0.0,
                _ => lambda.unwrap_or(c * eval::cv::LAMBDA_RATIO),
            };
            let gram = kernel::gram(&spec, train)?;
            let model = maxmargin::train_esvm(train, &gram, c, lambda)?.into_inner();
            Ok(SavedModel::Margin {
                algo,
                model,
                standardization,
            })
        }
        Algo::Lmnn => {
            let cfg = LmnnConfig {
                k_targets: k,
                max_iters: lmnn_iters,
                seed,
                ..Default::default()
            };
            let metric = lmnn::train_lmnn(train, &cfg)?;
            Ok(SavedModel::Metric {
                metric,
                k: k.min(train.n()),
                train: train.clone(),
                standardization,
            })
        }
    }
}

fn standardized(d: &Dataset) -> Result<Dataset> {
    StandardizationParams::fit(d).apply_dataset(d)
}

fn verify_metric(raw: &Dataset, trials: usize, seed: u64) -> Result<i32> {
    let d = standardized(raw)?;
    let r = maxmargin::verify_metric_equivalence(&d, trials, seed)?;
    println!("svm_margin\t{}", r.svm_margin);
    println!("max_margin_found\t{}", r.max_margin_found);
    println!("gap\t{}", r.gap);
    Ok(if r.has_evidence() && r.gap <= MARGIN_GAP_TOL { EXIT_OK } else { EXIT_RUNTIME })
}

fn verify_linearization(raw: &Dataset, cfg: &LmnnConfig, seed: u64, out: Option<PathBuf>) -> Result<i32> {
    let plan = data::kfold_split(raw.n(), 10.min(raw.n()), seed)?;
    let train = raw.subset(&plan.train_indices(0))?;
    let test = raw.x().select(Axis(0), &plan.test_indices(0));
    let p = StandardizationParams::fit(&train);
    let train = p.apply_dataset(&train)?;
    let test = p.apply(&test)?;
    let trace = lmnn::train_lmnn_traced(&train, cfg)?;
    let set = localview::build_local_models(&trace.metric, &train, &trace.triplets)?;
    let residuals = localview::linearization_residuals(&set, &train, &test)?;
    let mut tsv = String::from("center\tradius\tband\tmax_residual\n");
    for ((center, radius, band), res) in localview::band_report(&set).into_iter().zip(&residuals) {
        let _ = writeln!(tsv, "{center}\t{radius}\t{band}\t{res}");
    }
    let worst = residuals.iter().cloned().fold(0.0, f64::max);
    match out {
        Some(path) => fs::write(&path, &tsv).map_err(|e| Error::io(&path, e))?,
        None => print!("{tsv}"),
    }
    println!("max_residual\t{worst}");
    Ok(if worst <= LINEARIZATION_TOL { EXIT_OK } else { EXIT_RUNTIME })
}

fn verify_local_vote(raw: &Dataset, cfg: &LmnnConfig, folds: usize, seed: u64) -> Result<i32> {
    let plan = data::kfold_split(raw.n(), folds.clamp(2, raw.n()), seed)?;
    let mut agree = 0usize;
    let mut total = 0usize;
    for f in 0..plan.k {
        let train = raw.subset(&plan.train_indices(f))?;
        let test = raw.x().select(Axis(0), &plan.test_indices(f));
        let p = StandardizationParams::fit(&train);
        let train = p.apply_dataset(&train)?;
        let test = p.apply(&test)?;
        let trace = lmnn::train_lmnn_traced(&train, cfg)?;
        let set = localview::build_local_models(&trace.metric, &train, &trace.triplets)?;
        let k = cfg.k_targets.min(train.n());
        for x in test.outer_iter() {
            let a = lmnn::knn_predict(&trace.metric, &train, x, k)?;
            let b = localview::local_vote_predict(&set, train.labels(), x, k)?;
            agree += usize::from(a == b);
            total += 1;
        }
    }
    println!("agreement\t{agree}/{total}");
    Ok(if agree == total { EXIT_OK } else { EXIT_RUNTIME })
}

fn verify_reductions(raw: &Dataset) -> Result<i32> {
    let d = standardized(raw)?;
    let mut worst = 0.0f64;
    for spec in KernelSpec::benchmark_set() {
        let gram = kernel::gram(&spec, &d)?;
        let svm = maxmargin::train_svm(&d, &gram, 1.0)?;
        let esvm = maxmargin::train_esvm(&d, &gram, 1.0, 0.0)?;
        let dd = svm
            .delta
            .iter()
            .zip(&esvm.delta)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let db = (svm.bias - esvm.bias).abs();
        println!("{spec}\tmax_delta_diff\t{dd}\tbias_diff\t{db}");
        worst = worst.max(dd).max(db);
    }
    Ok(if worst <= REDUCTION_TOL { EXIT_OK } else { EXIT_RUNTIME })
}
