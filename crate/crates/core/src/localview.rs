//! A learned metric seen as one hyperplane per training instance in
//! quadratic space.
//!
//! For center `x_l` the functional `s_l(x) = w_lᵀΦ(x) + b_l` equals
//! `d²_M(x, x_l)`. All hyperplanes share the quadratic part of `w_l`; only the
//! linear part `−2Mx_l` and the offset depend on the center. Ranking centers
//! by `s_l` therefore reproduces Mahalanobis kNN exactly.

use ndarray::{Array1, Array2, ArrayView1};

use crate::data::{Dataset, Label};
use crate::error::{Error, Result};
use crate::lmnn::{self, Mahalanobis, TripletSet};
use crate::quadmap::{self, LocalHyperplane};

const GAMMA: f64 = 1.0;

#[derive(Clone, Debug)]
pub struct LocalModelSet {
    pub models: Vec<LocalHyperplane>,
    pub w_quad_shared: Array1<f64>,
    pub source_metric: Mahalanobis,
}

/// Which per-center functional to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ScoreVariant {
    /// `H_l`: `w_lᵀΦ(x) + b_l`, identical to `d²_M(x, x_l)`.
    #[default]
    Center,
    /// `H'_l`: the `H_l` value shifted down by `R_l² + γ/2`.
    Shifted,
}

impl LocalModelSet {
    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    /// Scores of `x` against every center.
    pub fn scores(&self, x: ArrayView1<'_, f64>, variant: ScoreVariant) -> Result<Vec<f64>> {
        (0..self.len()).map(|l| local_score(self, l, x, variant)).collect()
    }
}

/// One hyperplane per instance of `data`, with `R_l²` the largest squared
/// distance to a target neighbor and `γ = 1`.
pub fn build_local_models(metric: &Mahalanobis, data: &Dataset, triplets: &TripletSet) -> Result<LocalModelSet> {
    if triplets.n() != data.n() {
        return Err(Error::DimensionMismatch {
            expected: data.n(),
            found: triplets.n(),
        });
    }
    let m = metric.matrix();
    let w_quad = quadmap::quadratic_weights(m)?;
    let mut models = Vec::with_capacity(data.n());
    for l in 0..data.n() {
        let mut r2 = 0.0f64;
        for &i in &triplets.targets[l] {
            r2 = r2.max(lmnn::mahalanobis_dist2(m, data.row(l), data.row(i))?);
        }
        models.push(quadmap::from_shared(
            w_quad.clone(),
            m,
            l,
            data.row(l),
            r2.sqrt(),
            GAMMA,
        )?);
    }
    Ok(LocalModelSet {
        models,
        w_quad_shared: w_quad,
        source_metric: metric.clone(),
    })
}

pub fn local_score(set: &LocalModelSet, l: usize, x: ArrayView1<'_, f64>, variant: ScoreVariant) -> Result<f64> {
    let h = set.models.get(l).ok_or(Error::IndexOutOfRange {
        index: l,
        len: set.len(),
    })?;
    let s = quadmap::eval_linearized(h, x)?;
    Ok(match variant {
        ScoreVariant::Center => s,
        ScoreVariant::Shifted => s - h.shift(),
    })
}

/// Majority vote over the `k` centers with the smallest `H_l` score, with the
/// same tie rules as [`lmnn::knn_predict`].
pub fn local_vote_predict(set: &LocalModelSet, train_labels: &[Label], x: ArrayView1<'_, f64>, k: usize) -> Result<Label> {
    local_vote_predict_with(set, train_labels, x, k, ScoreVariant::Center)
}

/// Voting under either functional; only [`ScoreVariant::Center`] is
/// guaranteed to match kNN.
pub fn local_vote_predict_with(
    set: &LocalModelSet,
    train_labels: &[Label],
    x: ArrayView1<'_, f64>,
    k: usize,
    variant: ScoreVariant,
) -> Result<Label> {
    if train_labels.len() != set.len() {
        return Err(Error::DimensionMismatch {
            expected: set.len(),
            found: train_labels.len(),
        });
    }
    lmnn::check_k(k, set.len())?;
    let scores = set.scores(x, variant)?;
    let order = lmnn::rank_by_key(&scores);
    Ok(lmnn::majority_vote(&order, train_labels, k))
}

/// `(center_index, R_l, band)` for every center, by center index.
pub fn band_report(set: &LocalModelSet) -> Vec<(usize, f64, f64)> {
    let mut rows: Vec<_> = set.models.iter().map(|h| (h.center_index, h.radius, h.band)).collect();
    rows.sort_by_key(|r| r.0);
    rows
}

/// Per center, the largest `|s_l(x) − d²_M(x, x_l)| / (1 + d²_M)` over the
/// rows of `points`.
pub fn linearization_residuals(set: &LocalModelSet, centers: &Dataset, points: &Array2<f64>) -> Result<Vec<f64>> {
    let m = set.source_metric.matrix();
    let mut out = vec![0.0f64; set.len()];
    for x in points.outer_iter() {
        for (l, worst) in out.iter_mut().enumerate() {
            let exact = lmnn::mahalanobis_dist2(m, x, centers.row(l))?;
            let lin = local_score(set, l, x, ScoreVariant::Center)?;
            *worst = worst.max((lin - exact).abs() / (1.0 + exact.abs()));
        }
    }
    Ok(out)
}
