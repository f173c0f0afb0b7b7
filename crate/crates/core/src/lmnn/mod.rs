//! Large margin nearest neighbor metric learning.
//!
//! The metric `M` is optimized directly by projected subgradient descent:
//! each step moves against a subgradient of
//!
//! ```text
//! (1 − mu)·Σ_{l, i∈targ(l)} d²_M(x_l, x_i)
//!   + mu·Σ_{l, i∈targ(l), j: y_j≠y_l} [1 + d²_M(x_l, x_i) − d²_M(x_l, x_j)]₊
//! ```
//!
//! and projects back onto the PSD cone. Steps that increase the objective are
//! rejected and the step size halved; accepted steps grow it by 10%.

pub mod eigen;

use log::{debug, warn};
use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::data::{Dataset, Label};
use crate::error::{Error, Result};

pub use eigen::{jacobi_eigh, project_psd};

const METRIC_SYMMETRY_TOL: f64 = 1e-12;
const METRIC_MIN_EIGEN: f64 = -1e-8;
const MIN_STEP: f64 = 1e-30;

/// A PSD matrix defining `d²_M(x, z) = (x − z)ᵀM(x − z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mahalanobis {
    m: Array2<f64>,
}

impl Mahalanobis {
    /// Validates symmetry (1e-12) and positive semidefiniteness (1e-8).
    pub fn new(m: Array2<f64>) -> Result<Self> {
        let (r, c) = m.dim();
        if r != c {
            return Err(Error::NotSquare { rows: r, cols: c });
        }
        let mut asym = 0.0f64;
        for i in 0..r {
            for j in 0..i {
                asym = asym.max((m[[i, j]] - m[[j, i]]).abs());
            }
        }
        if asym > METRIC_SYMMETRY_TOL {
            return Err(Error::NotSymmetric(asym));
        }
        let min = eigen::min_eigenvalue(&m)?;
        if min < METRIC_MIN_EIGEN {
            return Err(Error::InvalidArgument(format!(
                "metric is not positive semidefinite (min eigenvalue {min})"
            )));
        }
        Ok(Mahalanobis { m })
    }

    pub fn identity(d: usize) -> Self {
        Mahalanobis { m: Array2::eye(d) }
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// `L = Λ^{1/2}Vᵀ`, so that `LᵀL = M`.
    pub fn factor(&self) -> Result<Array2<f64>> {
        let (values, vectors) = jacobi_eigh(&self.m)?;
        let roots = values.mapv(|l| l.max(0.0).sqrt());
        let mut l = vectors.t().to_owned();
        for (mut row, r) in l.axis_iter_mut(Axis(0)).zip(roots.iter()) {
            row *= *r;
        }
        Ok(l)
    }

    pub fn dist2(&self, x: ArrayView1<'_, f64>, z: ArrayView1<'_, f64>) -> Result<f64> {
        mahalanobis_dist2(&self.m, x, z)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        eigen::min_eigenvalue(&self.m)
    }
}

pub fn mahalanobis_dist2(m: &Array2<f64>, x: ArrayView1<'_, f64>, z: ArrayView1<'_, f64>) -> Result<f64> {
    let d = m.nrows();
    if x.len() != d || z.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: if x.len() != d { x.len() } else { z.len() },
        });
    }
    let diff = &x - &z;
    Ok(diff.dot(&m.dot(&diff)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LmnnConfig {
    pub k_targets: usize,
    pub mu: f64,
    pub step0: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for LmnnConfig {
    fn default() -> Self {
        LmnnConfig {
            k_targets: 5,
            mu: 0.5,
            step0: 1e-3,
            max_iters: 200,
            tol: 1e-6,
            seed: 42,
        }
    }
}

impl LmnnConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return Err(Error::InvalidArgument(format!("mu must lie in (0, 1), got {}", self.mu)));
        }
        if !(self.step0 > 0.0 && self.step0.is_finite()) {
            return Err(Error::InvalidArgument(format!("step0 must be positive, got {}", self.step0)));
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return Err(Error::InvalidArgument(format!("tol must be nonnegative, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Target neighbors and impostor candidates, fixed before optimization.
#[derive(Clone, Debug, PartialEq)]
pub struct TripletSet {
    pub targets: Vec<Vec<usize>>,
    pub impostor_candidates: Vec<Vec<usize>>,
}

impl TripletSet {
    pub fn n(&self) -> usize {
        self.targets.len()
    }
}

fn sq_euclid(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(p, q)| (p - q) * (p - q)).sum()
}

/// Euclidean `k` nearest same-class neighbors of every instance, ties to the
/// lower index. Classes too small for `k` get truncated lists.
pub fn select_target_neighbors(data: &Dataset, k: usize) -> TripletSet {
    let n = data.n();
    for label in [Label::Positive, Label::Negative] {
        let size = data.class_count(label);
        if size > 0 && size <= k {
            warn!(
                "class {} has {size} members; target neighbors truncated to {}",
                label.as_str(),
                size - 1
            );
        }
    }
    let mut targets = Vec::with_capacity(n);
    let mut impostors = Vec::with_capacity(n);
    for l in 0..n {
        let yl = data.label(l);
        let mut same: Vec<(f64, usize)> = (0..n)
            .filter(|&i| i != l && data.label(i) == yl)
            .map(|i| (sq_euclid(data.row(l), data.row(i)), i))
            .collect();
        same.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        targets.push(same.into_iter().take(k).map(|(_, i)| i).collect());
        impostors.push((0..n).filter(|&j| data.label(j) != yl).collect());
    }
    TripletSet {
        targets,
        impostor_candidates: impostors,
    }
}

/// Squared distances under `m` between all rows of `x`.
fn pairwise_dist2(m: &Array2<f64>, x: &Array2<f64>) -> Array2<f64> {
    let xm = x.dot(m);
    let g = xm.dot(&x.t());
    let n = x.nrows();
    let q: Vec<f64> = (0..n).map(|i| g[[i, i]]).collect();
    Array2::from_shape_fn((n, n), |(a, b)| q[a] + q[b] - 2.0 * g[[a, b]])
}

/// Objective value and a subgradient at `m`.
///
/// A hinge counts as active only when its argument is strictly positive.
pub fn lmnn_objective(m: &Array2<f64>, data: &Dataset, triplets: &TripletSet, mu: f64) -> Result<(f64, Array2<f64>)> {
    let d = data.d();
    if m.dim() != (d, d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: m.nrows(),
        });
    }
    if triplets.n() != data.n() {
        return Err(Error::DimensionMismatch {
            expected: data.n(),
            found: triplets.n(),
        });
    }
    let x = data.x();
    let n = data.n();
    let dist = pairwise_dist2(m, x);
    let mut w = Array2::<f64>::zeros((n, n));
    let mut pull = 0.0;
    let mut push = 0.0;
    for l in 0..n {
        let mut pull_l = 0.0;
        let mut push_l = 0.0;
        for &i in &triplets.targets[l] {
            let dli = dist[[l, i]];
            pull_l += dli;
            w[[l, i]] += 1.0 - mu;
            for &j in &triplets.impostor_candidates[l] {
                let h = 1.0 + dli - dist[[l, j]];
                if h > 0.0 {
                    push_l += h;
                    w[[l, i]] += mu;
                    w[[l, j]] -= mu;
                }
            }
        }
        pull += pull_l;
        push += push_l;
    }
    let value = (1.0 - mu) * pull + mu * push;

    // Σ_ab W_ab (x_a − x_b)(x_a − x_b)ᵀ = Xᵀ(diag(W1 + Wᵀ1) − W − Wᵀ)X
    let row = w.sum_axis(Axis(1));
    let col = w.sum_axis(Axis(0));
    let mut lap = -(&w + &w.t());
    for a in 0..n {
        lap[[a, a]] += row[a] + col[a];
    }
    let grad = x.t().dot(&lap.dot(x));
    Ok((value, eigen::symmetrize(&grad)))
}

/// Everything recorded during training.
#[derive(Clone, Debug)]
pub struct LmnnTrace {
    pub metric: Mahalanobis,
    pub triplets: TripletSet,
    /// Objective at `I` followed by every accepted iterate.
    pub objectives: Vec<f64>,
    pub accepted: usize,
    pub rejected: usize,
}

pub fn train_lmnn(data: &Dataset, cfg: &LmnnConfig) -> Result<Mahalanobis> {
    Ok(train_lmnn_traced(data, cfg)?.metric)
}

/// Projected subgradient descent from `M = I`.
pub fn train_lmnn_traced(data: &Dataset, cfg: &LmnnConfig) -> Result<LmnnTrace> {
    cfg.validate()?;
    let triplets = select_target_neighbors(data, cfg.k_targets);
    let d = data.d();
    let mut m = Array2::<f64>::eye(d);
    let (mut value, mut grad) = lmnn_objective(&m, data, &triplets, cfg.mu)?;
    let mut objectives = vec![value];
    let mut step = cfg.step0;
    let mut accepted = 0;
    let mut rejected = 0;
    for it in 0..cfg.max_iters {
        let candidate = project_psd(&(&m - &(&grad * step)))?;
        let (v, g) = lmnn_objective(&candidate, data, &triplets, cfg.mu)?;
        if v <= value {
            let rel = (value - v) / value.abs().max(f64::MIN_POSITIVE);
            m = candidate;
            value = v;
            grad = g;
            objectives.push(v);
            accepted += 1;
            step *= 1.1;
            if rel < cfg.tol {
                debug!("lmnn converged after {} iterations, objective {value}", it + 1);
                break;
            }
        } else {
            rejected += 1;
            step *= 0.5;
            if step < MIN_STEP {
                debug!("lmnn step size underflow after {} iterations", it + 1);
                break;
            }
        }
    }
    Ok(LmnnTrace {
        metric: Mahalanobis { m },
        triplets,
        objectives,
        accepted,
        rejected,
    })
}

/// Training indices ordered by ascending key, ties to the lower index.
pub fn rank_by_key(keys: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]).then(a.cmp(&b)));
    order
}

/// Majority label among the first `k` of `order`; a tied vote goes to the
/// label of `order[0]`.
pub fn majority_vote(order: &[usize], labels: &[Label], k: usize) -> Label {
    let mut pos = 0usize;
    let mut neg = 0usize;
    for &i in order.iter().take(k) {
        match labels[i] {
            Label::Positive => pos += 1,
            Label::Negative => neg += 1,
        }
    }
    if pos > neg {
        Label::Positive
    } else if neg > pos {
        Label::Negative
    } else {
        labels[order[0]]
    }
}

pub(crate) fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k must lie in 1..={n}, got {k}")));
    }
    Ok(())
}

/// Squared `M`-distances from `x` to every training row.
pub fn distances_to(m: &Array2<f64>, train: &Dataset, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    (0..train.n()).map(|i| mahalanobis_dist2(m, x, train.row(i))).collect()
}

pub fn knn_predict(metric: &Mahalanobis, train: &Dataset, x: ArrayView1<'_, f64>, k: usize) -> Result<Label> {
    check_k(k, train.n())?;
    let dist = distances_to(metric.matrix(), train, x)?;
    let order = rank_by_key(dist.as_slice().expect("contiguous"));
    Ok(majority_vote(&order, train.labels(), k))
}

pub fn knn_predict_all(metric: &Mahalanobis, train: &Dataset, test: &Array2<f64>, k: usize) -> Result<Vec<Label>> {
    test.outer_iter().map(|x| knn_predict(metric, train, x, k)).collect()
}
