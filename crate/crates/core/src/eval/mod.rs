//! Experimental protocol: nested cross-validation, McNemar comparisons and
//! win/tie/loss scoring over a benchmark manifest.

pub mod bench;
pub mod cv;
pub mod stats;

pub use bench::{benchmark, run_benchmark, BenchReport, CellResult, Manifest};
pub use cv::{fit_predict, inner_cv_table, run_cv, run_cv_with, select_c, Algo, CvOptions, CvResult};
pub use stats::{critical_value, mcnemar, score_pairwise, Comparison, McNemarOutcome, ScoreCell, ScoreTable};
