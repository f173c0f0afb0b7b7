//! Benchmark driver: every dataset × kernel × algorithm cell of a manifest,
//! averaged over repeated seeds, with pairwise McNemar scoring.
//!
//! Manifest format, one directive per line, `#` starts a comment:
//!
//! ```text
//! dataset sonar data/sonar.csv
//! kernel linear
//! kernel gauss:1
//! algo svm
//! algo esvm
//! grid 0.1 1 10 100 1000
//! folds 10 10
//! repeats 5
//! ```
//!
//! Relative dataset paths are resolved against the manifest's directory.
//! `folds` takes the outer and optional inner fold count. Repeat `r` uses
//! seed `seed + r`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::{error, info};
use rayon::prelude::*;

use super::cv::{self, Algo, CvOptions, CvResult};
use super::stats::{self, Comparison, ScoreTable};
use crate::data::{self, Dataset, Label};
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;

pub const ALPHA: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetEntry {
    pub name: String,
    pub path: PathBuf,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub datasets: Vec<DatasetEntry>,
    pub kernels: Vec<KernelSpec>,
    pub algos: Vec<Algo>,
    pub grid: Vec<f64>,
    pub k_outer: usize,
    pub k_inner: usize,
    pub repeats: usize,
}

impl Manifest {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Manifest> {
        let mut m = Manifest {
            datasets: Vec::new(),
            kernels: Vec::new(),
            algos: Vec::new(),
            grid: cv::DEFAULT_GRID.to_vec(),
            k_outer: 10,
            k_inner: 10,
            repeats: 1,
        };
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |message: String| Error::Manifest { line: line_no, message };
            let mut words = line.split_whitespace();
            let key = words.next().unwrap_or_default();
            let args: Vec<&str> = words.collect();
            match key {
                "dataset" => {
                    let [name, path] = args[..] else {
                        return Err(bad("expected `dataset <name> <path>`".into()));
                    };
                    let path = Path::new(path);
                    let path = if path.is_absolute() { path.to_path_buf() } else { base_dir.join(path) };
                    m.datasets.push(DatasetEntry {
                        name: name.to_string(),
                        path,
                    });
                }
                "kernel" => {
                    for a in &args {
                        m.kernels.push(a.parse().map_err(|e: Error| bad(e.to_string()))?);
                    }
                }
                "algo" => {
                    for a in &args {
                        let algo: Algo = a.parse().map_err(|e: Error| bad(e.to_string()))?;
                        if !m.algos.contains(&algo) {
                            m.algos.push(algo);
                        }
                    }
                }
                "grid" => {
                    let grid: std::result::Result<Vec<f64>, _> = args.iter().map(|a| a.parse::<f64>()).collect();
                    let grid = grid.map_err(|e| bad(e.to_string()))?;
                    if grid.is_empty() || grid.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
                        return Err(bad("grid values must be positive".into()));
                    }
                    m.grid = grid;
                }
                "folds" => {
                    let nums: std::result::Result<Vec<usize>, _> = args.iter().map(|a| a.parse::<usize>()).collect();
                    match nums.map_err(|e| bad(e.to_string()))?[..] {
                        [o] => m.k_outer = o,
                        [o, i] => {
                            m.k_outer = o;
                            m.k_inner = i;
                        }
                        _ => return Err(bad("expected `folds <outer> [inner]`".into())),
                    }
                    if m.k_outer < 2 || m.k_inner < 2 {
                        return Err(bad("fold counts must be at least 2".into()));
                    }
                }
                "repeats" => {
                    let [r] = args[..] else {
                        return Err(bad("expected `repeats <count>`".into()));
                    };
                    m.repeats = r.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?;
                    if m.repeats == 0 {
                        return Err(bad("repeats must be at least 1".into()));
                    }
                }
                other => return Err(bad(format!("unknown directive {other:?}"))),
            }
        }
        if m.datasets.is_empty() {
            return Err(Error::Manifest {
                line: 0,
                message: "no datasets listed".into(),
            });
        }
        if m.algos.is_empty() {
            return Err(Error::Manifest {
                line: 0,
                message: "no algorithms listed".into(),
            });
        }
        if m.kernels.is_empty() {
            m.kernels.push(KernelSpec::linear());
        }
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Manifest> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Manifest::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }
}

/// Seed-averaged result of one dataset × kernel × algorithm cell.
#[derive(Clone, Debug)]
pub struct CellResult {
    pub dataset: String,
    pub kernel: KernelSpec,
    pub algo: Algo,
    pub mean_error: f64,
    pub std_error: f64,
    /// One entry per repeat.
    pub runs: Vec<CvResult>,
    /// LMNN ignores the kernel; its result is shared by every kernel row.
    pub replicated: bool,
}

#[derive(Clone, Debug)]
pub struct BenchReport {
    pub cells: Vec<CellResult>,
    pub comparisons: Vec<Comparison>,
    pub scores: ScoreTable,
    pub failed_datasets: Vec<(String, String)>,
    pub seeds: Vec<u64>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Pairwise outcome of two pooled prediction vectors over the instances
/// both predicted.
fn compare(a: &[Option<Label>], b: &[Option<Label>], truth: &[Label]) -> Result<stats::McNemarOutcome> {
    let mut pa = Vec::new();
    let mut pb = Vec::new();
    let mut t = Vec::new();
    for i in 0..truth.len() {
        if let (Some(x), Some(y)) = (a[i], b[i]) {
            pa.push(x);
            pb.push(y);
            t.push(truth[i]);
        }
    }
    stats::mcnemar(&pa, &pb, &t, ALPHA)
}

#[derive(Clone, Copy)]
struct Job {
    dataset: usize,
    kernel: Option<usize>,
    algo: Algo,
    repeat: usize,
}

pub fn cv_options(manifest: &Manifest) -> CvOptions {
    CvOptions {
        k_outer: manifest.k_outer,
        k_inner: manifest.k_inner,
        grid: manifest.grid.clone(),
        ..Default::default()
    }
}

/// Runs every cell of `manifest`. Missing or unreadable datasets are
/// reported in `failed_datasets` while the rest proceed.
pub fn run_benchmark(manifest: &Manifest, seed: u64) -> Result<BenchReport> {
    let opts = cv_options(manifest);
    let seeds: Vec<u64> = (0..manifest.repeats as u64).map(|r| seed.wrapping_add(r)).collect();

    let mut loaded: Vec<Option<Dataset>> = Vec::new();
    let mut failed = Vec::new();
    for entry in &manifest.datasets {
        match data::load_auto(&entry.path) {
            Ok(d) => loaded.push(Some(d)),
            Err(e) => {
                error!("dataset {}: {e}", entry.name);
                failed.push((entry.name.clone(), e.to_string()));
                loaded.push(None);
            }
        }
    }

    let mut jobs = Vec::new();
    for (di, d) in loaded.iter().enumerate() {
        if d.is_none() {
            continue;
        }
        for repeat in 0..seeds.len() {
            for &algo in &manifest.algos {
                if algo == Algo::Lmnn {
                    jobs.push(Job { dataset: di, kernel: None, algo, repeat });
                } else {
                    for ki in 0..manifest.kernels.len() {
                        jobs.push(Job { dataset: di, kernel: Some(ki), algo, repeat });
                    }
                }
            }
        }
    }

    let results: Vec<CvResult> = jobs
        .par_iter()
        .map(|job| {
            let d = loaded[job.dataset].as_ref().expect("loaded");
            let kernel = job.kernel.map(|k| manifest.kernels[k]).unwrap_or_else(KernelSpec::linear);
            let seed = seeds[job.repeat];
            info!(
                "running {} {} {} seed {seed}",
                manifest.datasets[job.dataset].name, kernel, job.algo
            );
            cv::run_cv_with(d, job.algo, &kernel, seed, &opts)
        })
        .collect::<Result<_>>()?;

    let find = |di: usize, ki: Option<usize>, algo: Algo, r: usize| -> &CvResult {
        let pos = jobs
            .iter()
            .position(|j| j.dataset == di && j.algo == algo && j.repeat == r && (algo == Algo::Lmnn || j.kernel == ki))
            .expect("job scheduled");
        &results[pos]
    };

    let mut cells = Vec::new();
    let mut comparisons = Vec::new();
    for (di, d) in loaded.iter().enumerate() {
        let Some(d) = d else { continue };
        let name = &manifest.datasets[di].name;
        for (ki, kernel) in manifest.kernels.iter().enumerate() {
            for &algo in &manifest.algos {
                let runs: Vec<CvResult> = (0..seeds.len()).map(|r| find(di, Some(ki), algo, r).clone()).collect();
                let errs: Vec<f64> = runs.iter().map(|r| r.mean_error).collect();
                let (mean_error, std_error) = mean_std(&errs);
                cells.push(CellResult {
                    dataset: name.clone(),
                    kernel: *kernel,
                    algo,
                    mean_error,
                    std_error,
                    runs,
                    replicated: algo == Algo::Lmnn,
                });
            }
            for (ai, &a) in manifest.algos.iter().enumerate() {
                for &b in &manifest.algos[ai + 1..] {
                    let ra = find(di, Some(ki), a, 0);
                    let rb = find(di, Some(ki), b, 0);
                    comparisons.push(Comparison {
                        dataset: name.clone(),
                        kernel: kernel.to_string(),
                        algo_a: a.to_string(),
                        algo_b: b.to_string(),
                        outcome: compare(&ra.pooled_predictions, &rb.pooled_predictions, d.labels())?,
                    });
                }
            }
        }
    }
    let scores = stats::score_pairwise(&comparisons);
    Ok(BenchReport {
        cells,
        comparisons,
        scores,
        failed_datasets: failed,
        seeds,
    })
}

impl BenchReport {
    pub fn errors_tsv(&self) -> String {
        let mut s = String::from("dataset\tkernel\talgo\tmean_error\tstd_error\trepeats\tnote\n");
        for c in &self.cells {
            let note = if c.replicated { "replicated-across-kernels" } else { "" };
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                c.dataset,
                c.kernel,
                c.algo,
                c.mean_error,
                c.std_error,
                c.runs.len(),
                note
            );
        }
        s
    }

    pub fn scores_tsv(&self) -> String {
        let mut s = String::from("dataset\tkernel\talgo_a\talgo_b\tn01\tn10\tstatistic\tsignificant\tpoints_a\tpoints_b\n");
        for (cmp, cell) in self.comparisons.iter().zip(&self.scores.cells) {
            let o = &cmp.outcome;
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                cmp.dataset, cmp.kernel, cmp.algo_a, cmp.algo_b, o.n01, o.n10, o.statistic, o.significant, cell.points_a, cell.points_b
            );
        }
        for ((kernel, algo), pts) in self.scores.totals_by_kernel() {
            let _ = writeln!(s, "total\t{kernel}\t{algo}\t\t\t\t\t\t{pts}\t");
        }
        for (algo, pts) in self.scores.totals() {
            let _ = writeln!(s, "total\tall\t{algo}\t\t\t\t\t\t{pts}\t");
        }
        s
    }

    pub fn run_log(&self) -> String {
        let mut s = String::new();
        let seeds: Vec<String> = self.seeds.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "seeds {}", seeds.join(" "));
        let _ = writeln!(s, "mcnemar alpha {ALPHA} on pooled predictions of seed {}", self.seeds[0]);
        for (name, err) in &self.failed_datasets {
            let _ = writeln!(s, "failed {name}: {err}");
        }
        for c in &self.cells {
            for (r, run) in c.runs.iter().enumerate() {
                let cs: Vec<String> = run
                    .chosen_c_per_fold
                    .iter()
                    .map(|c| c.map(|v| v.to_string()).unwrap_or_else(|| "-".into()))
                    .collect();
                let skipped: Vec<String> = run.skipped_folds.iter().map(|f| f.to_string()).collect();
                let _ = writeln!(
                    s,
                    "cell {} {} {} seed {} folds {:016x} error {} C [{}] skipped [{}]{}",
                    c.dataset,
                    c.kernel,
                    c.algo,
                    self.seeds[r],
                    run.fold_fingerprint,
                    run.mean_error,
                    cs.join(" "),
                    skipped.join(" "),
                    if c.replicated { " replicated-across-kernels" } else { "" }
                );
            }
        }
        s
    }

    /// Writes `errors.tsv`, `scores.tsv` and `run.log` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (file, body) in [
            ("errors.tsv", self.errors_tsv()),
            ("scores.tsv", self.scores_tsv()),
            ("run.log", self.run_log()),
        ] {
            let p = dir.join(file);
            fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}

/// Worker count from `MARGINMETRIC_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var("MARGINMETRIC_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// [`run_benchmark`] inside a pool capped by `MARGINMETRIC_THREADS`.
pub fn benchmark(manifest: &Manifest, seed: u64) -> Result<BenchReport> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap() {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_benchmark(manifest, seed))
}
