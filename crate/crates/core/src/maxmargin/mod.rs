//! Soft-margin SVM and ε-SVM.
//!
//! Both are kernel expansions `f(x) = Σ_i δ_i y_i k(x_i, x) + b` over the
//! support set. The SVM solves the shared dual with `δ ∈ [0, C]`. ε-SVM adds
//! the penalty `λ Σ_i max(0, y_i f(x_i) − 1)` on instances lying beyond
//! their margin hyperplane, which widens the box to `δ ∈ [−λ, C]`.
//!
//! Primal values reported here use the `½‖w‖²` convention, which is the
//! primal the dual in [`crate::boxqp`] corresponds to.

mod metric_view;

pub use metric_view::{
    collapse_to_diagonal, h1_signed_distance, verify_metric_equivalence,
    verify_metric_equivalence_with, VerificationReport,
};

use std::ops::Deref;

use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::boxqp::{self, BoxQpProblem, SolverOptions};
use crate::data::{Dataset, Label};
use crate::error::{Error, Result};
use crate::kernel::{self, GramMatrix, KernelKind, KernelSpec};

/// A trained kernel expansion with its dual variables.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginModel {
    /// Dual variables over the full training set.
    pub delta: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    /// Zero for the plain SVM.
    pub lambda: f64,
    pub spec: KernelSpec,
    /// Training trace used to scale kernel rows (1 when not normalized).
    pub normalization_factor: f64,
    /// Training indices with `δ_i ≠ 0`, ascending.
    pub support: Vec<usize>,
    /// Rows of the support instances, aligned with `support`.
    pub support_vectors: Array2<f64>,
    pub support_labels: Vec<Label>,
    pub objective: f64,
    pub iterations: usize,
    pub kkt_violation: f64,
    pub converged: bool,
}

impl MarginModel {
    pub fn dim(&self) -> usize {
        self.support_vectors.ncols()
    }

    fn coef(&self, s: usize) -> f64 {
        self.delta[self.support[s]] * self.support_labels[s].sign()
    }

    /// `f(x) = Σ_i δ_i y_i k(x_i, x) / factor + b`.
    pub fn decision_value(&self, x: ArrayView1<'_, f64>) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        let xv = x.to_vec();
        let mut sum = 0.0;
        for (s, sv) in self.support_vectors.outer_iter().enumerate() {
            let k = self.spec.apply(sv.as_slice().expect("row-major"), &xv) / self.normalization_factor;
            sum += self.coef(s) * k;
        }
        Ok(sum + self.bias)
    }

    /// `sign(f(x))`, with `f(x) = 0` predicted as `+1`.
    pub fn predict(&self, x: ArrayView1<'_, f64>) -> Result<Label> {
        Ok(Label::from_decision(self.decision_value(x)?))
    }

    pub fn predict_all(&self, x: &Array2<f64>) -> Result<Vec<Label>> {
        x.outer_iter().map(|r| self.predict(r)).collect()
    }

    /// `‖w‖²` in the (normalized) feature space.
    pub fn weight_norm_sq(&self) -> f64 {
        let rows: Vec<Vec<f64>> = self.support_vectors.outer_iter().map(|r| r.to_vec()).collect();
        let mut total = 0.0;
        for (s, rs) in rows.iter().enumerate() {
            for (t, rt) in rows.iter().enumerate() {
                total += self.coef(s) * self.coef(t) * self.spec.apply(rs, rt) / self.normalization_factor;
            }
        }
        total
    }

    /// Geometric margin `1/‖w‖`.
    pub fn geometric_margin(&self) -> f64 {
        1.0 / self.weight_norm_sq().sqrt()
    }

    /// Explicit `w` for a linear kernel, `None` otherwise.
    pub fn primal_weights(&self) -> Option<Array1<f64>> {
        if self.spec.kind != KernelKind::Linear {
            return None;
        }
        let mut w = Array1::zeros(self.dim());
        for (s, sv) in self.support_vectors.outer_iter().enumerate() {
            w.scaled_add(self.coef(s) / self.normalization_factor, &sv);
        }
        Some(w)
    }

    /// Training decision values `f(x_i)` read off the Gram matrix.
    pub fn training_decisions(&self, gram: &GramMatrix, labels: &[Label]) -> Vec<f64> {
        let k = gram.matrix();
        (0..k.nrows())
            .map(|i| {
                let mut s = 0.0;
                for &j in &self.support {
                    s += self.delta[j] * labels[j].sign() * k[[i, j]];
                }
                s + self.bias
            })
            .collect()
    }

    /// Slacks `ξ_i = max(0, 1 − y_i f(x_i))` and beyond-margin distances
    /// `η_i = max(0, y_i f(x_i) − 1)`.
    pub fn slacks(&self, gram: &GramMatrix, labels: &[Label]) -> (Vec<f64>, Vec<f64>) {
        let f = self.training_decisions(gram, labels);
        let mut xi = Vec::with_capacity(f.len());
        let mut eta = Vec::with_capacity(f.len());
        for (fi, l) in f.iter().zip(labels) {
            let m = l.sign() * fi;
            xi.push((1.0 - m).max(0.0));
            eta.push((m - 1.0).max(0.0));
        }
        (xi, eta)
    }

    /// `½‖w‖² + λ Σ η_i + C Σ ξ_i`.
    pub fn primal_objective(&self, gram: &GramMatrix, labels: &[Label]) -> f64 {
        let (xi, eta) = self.slacks(gram, labels);
        0.5 * self.weight_norm_sq() + self.lambda * eta.iter().sum::<f64>() + self.c * xi.iter().sum::<f64>()
    }
}

fn train_boxed(
    data: &Dataset,
    gram: &GramMatrix,
    c: f64,
    lambda: f64,
    opts: &SolverOptions,
) -> Result<MarginModel> {
    if gram.n() != data.n() {
        return Err(Error::DimensionMismatch {
            expected: data.n(),
            found: gram.n(),
        });
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("C must be positive, got {c}")));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
    }
    let signs = data.signs();
    let lo = if lambda == 0.0 { 0.0 } else { -lambda };
    let problem = BoxQpProblem::uniform(gram.matrix(), &signs, lo, c)?;
    let sol = boxqp::solve(&problem, opts)?;
    let support: Vec<usize> = (0..data.n()).filter(|&i| sol.delta[i] != 0.0).collect();
    Ok(MarginModel {
        support_vectors: data.x().select(Axis(0), &support),
        support_labels: support.iter().map(|&i| data.label(i)).collect(),
        support,
        delta: sol.delta,
        bias: sol.bias,
        c,
        lambda,
        spec: *gram.spec(),
        normalization_factor: gram.normalization_factor(),
        objective: sol.objective,
        iterations: sol.iterations,
        kkt_violation: sol.kkt_violation,
        converged: sol.converged,
    })
}

/// L1 soft-margin SVM.
#[derive(Clone, Debug, PartialEq)]
pub struct SvmModel(MarginModel);

/// ε-SVM: soft margin plus a penalty on distance beyond the margin.
#[derive(Clone, Debug, PartialEq)]
pub struct EsvmModel(MarginModel);

impl Deref for SvmModel {
    type Target = MarginModel;
    fn deref(&self) -> &MarginModel {
        &self.0
    }
}

impl Deref for EsvmModel {
    type Target = MarginModel;
    fn deref(&self) -> &MarginModel {
        &self.0
    }
}

impl SvmModel {
    pub fn into_inner(self) -> MarginModel {
        self.0
    }
}

impl EsvmModel {
    pub fn into_inner(self) -> MarginModel {
        self.0
    }
}

pub fn train_svm(data: &Dataset, gram: &GramMatrix, c: f64) -> Result<SvmModel> {
    train_svm_with(data, gram, c, &SolverOptions::default())
}

pub fn train_svm_with(data: &Dataset, gram: &GramMatrix, c: f64, opts: &SolverOptions) -> Result<SvmModel> {
    train_boxed(data, gram, c, 0.0, opts).map(SvmModel)
}

pub fn train_esvm(data: &Dataset, gram: &GramMatrix, c: f64, lambda: f64) -> Result<EsvmModel> {
    train_esvm_with(data, gram, c, lambda, &SolverOptions::default())
}

pub fn train_esvm_with(
    data: &Dataset,
    gram: &GramMatrix,
    c: f64,
    lambda: f64,
    opts: &SolverOptions,
) -> Result<EsvmModel> {
    train_boxed(data, gram, c, lambda, opts).map(EsvmModel)
}

/// Builds the Gram matrix of `data` and trains an SVM on it.
pub fn fit_svm(data: &Dataset, spec: &KernelSpec, c: f64) -> Result<SvmModel> {
    let g = kernel::gram(spec, data)?;
    train_svm(data, &g, c)
}

pub fn fit_esvm(data: &Dataset, spec: &KernelSpec, c: f64, lambda: f64) -> Result<EsvmModel> {
    let g = kernel::gram(spec, data)?;
    train_esvm(data, &g, c, lambda)
}
