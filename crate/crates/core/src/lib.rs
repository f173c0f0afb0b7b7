//! # marginmetric
//!
//! Max-margin classification and Mahalanobis metric learning, side by side.
//!
//! The crate provides:
//!
//! * a soft-margin SVM and the ε-SVM variant, which additionally penalizes
//!   instances that sit far beyond their margin hyperplane; both are trained
//!   by one SMO solver over the box-constrained dual ([`boxqp`], [`maxmargin`]),
//! * LMNN metric learning by projected subgradient descent on the PSD cone
//!   ([`lmnn`]),
//! * the explicit quadratic feature map under which every squared Mahalanobis
//!   distance to a fixed center becomes an affine function ([`quadmap`]), and
//!   the resulting view of a learned metric as one local hyperplane per
//!   training instance ([`localview`]),
//! * a nested cross-validation benchmark with McNemar pairwise scoring
//!   ([`eval`]) and a command-line front end ([`cli`]).
//!
//! All randomness is driven by explicit seeds; every result is a pure
//! function of its inputs.

pub mod boxqp;
pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod kernel;
pub mod lmnn;
pub mod localview;
pub mod maxmargin;
pub mod persist;
pub mod quadmap;
pub mod rng;

pub use boxqp::{BoxQpProblem, DualSolution, SolverOptions};
pub use data::{Dataset, FoldPlan, Label, StandardizationParams};
pub use error::{Error, Result};
pub use kernel::{GramMatrix, KernelSpec};
pub use lmnn::{LmnnConfig, Mahalanobis, TripletSet};
pub use localview::{LocalModelSet, ScoreVariant};
pub use maxmargin::{EsvmModel, MarginModel, SvmModel, VerificationReport};
pub use persist::SavedModel;
pub use quadmap::{LocalHyperplane, QuadFeature};
