//! SVM seen as learning a diagonal scaling plus translation around the
//! fixed hyperplane `H₁: 1ᵀx = 0`.
//!
//! Two checks live here. [`verify_metric_equivalence`] searches unit-norm
//! directions for the largest achievable margin and compares it with the
//! geometric margin of the hard-margin SVM. [`collapse_to_diagonal`] folds a
//! full linear map `L` into the diagonal map with identical signed distances
//! to `H₁`.

use ndarray::{Array1, Array2, ArrayView1};

use crate::boxqp::SolverOptions;
use crate::data::{Dataset, Label};
use crate::error::{Error, Result};
use crate::kernel::{self, KernelSpec};
use crate::rng;

const HARD_MARGIN_C: f64 = 1e6;
const SEPARABLE_SLACK: f64 = 1e-6;
const DEFAULT_REFINE_STEPS: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    /// Best margin found by the direction search (`-inf` with no trials).
    pub max_margin_found: f64,
    /// `1/‖w*‖` of the hard-margin SVM.
    pub svm_margin: f64,
    /// `max_margin_found − svm_margin`.
    pub gap: f64,
    pub trials: usize,
}

impl VerificationReport {
    /// False when no direction was sampled.
    pub fn has_evidence(&self) -> bool {
        self.trials > 0
    }
}

/// Margin of direction `w` with the best bias: half the gap between the
/// lowest positive and highest negative projection.
fn direction_margin(data: &Dataset, w: &[f64]) -> f64 {
    let mut min_pos = f64::INFINITY;
    let mut max_neg = f64::NEG_INFINITY;
    for (i, row) in data.x().outer_iter().enumerate() {
        let p: f64 = row.iter().zip(w).map(|(a, b)| a * b).sum();
        match data.label(i) {
            Label::Positive => min_pos = min_pos.min(p),
            Label::Negative => max_neg = max_neg.max(p),
        }
    }
    0.5 * (min_pos - max_neg)
}

fn normalize(w: &mut [f64]) -> bool {
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return false;
    }
    w.iter_mut().for_each(|v| *v /= norm);
    true
}

pub fn verify_metric_equivalence(data: &Dataset, trials: usize, seed: u64) -> Result<VerificationReport> {
    verify_metric_equivalence_with(data, trials, seed, DEFAULT_REFINE_STEPS)
}

/// Random search over unit directions (`trials` draws), then coordinate
/// perturbation refinement of the best one for `refine_steps` rounds.
/// Fails on data a hard-margin linear SVM cannot separate.
pub fn verify_metric_equivalence_with(
    data: &Dataset,
    trials: usize,
    seed: u64,
    refine_steps: usize,
) -> Result<VerificationReport> {
    let spec = KernelSpec::linear().raw();
    let gram = kernel::gram(&spec, data)?;
    let opts = SolverOptions { tol: 1e-9, ..Default::default() };
    let svm = super::train_svm_with(data, &gram, HARD_MARGIN_C, &opts)?;
    let (xi, _) = svm.slacks(&gram, data.labels());
    let max_slack = xi.iter().cloned().fold(0.0, f64::max);
    if max_slack > SEPARABLE_SLACK {
        return Err(Error::NotSeparable { max_slack });
    }
    let svm_margin = svm.geometric_margin();

    if trials == 0 {
        return Ok(VerificationReport {
            max_margin_found: f64::NEG_INFINITY,
            svm_margin,
            gap: f64::NEG_INFINITY,
            trials: 0,
        });
    }

    let d = data.d();
    let mut rng = rng::seeded(seed);
    let mut best_w = vec![0.0; d];
    let mut best = f64::NEG_INFINITY;
    let mut w = vec![0.0; d];
    for _ in 0..trials {
        w.iter_mut().for_each(|v| *v = rng::normal(&mut rng));
        if !normalize(&mut w) {
            continue;
        }
        let m = direction_margin(data, &w);
        if m > best {
            best = m;
            best_w.copy_from_slice(&w);
        }
    }

    let mut step = 0.1;
    for _ in 0..refine_steps {
        let mut improved = false;
        for k in 0..d {
            for sign in [1.0, -1.0] {
                let mut cand = best_w.clone();
                cand[k] += sign * step;
                if !normalize(&mut cand) {
                    continue;
                }
                let m = direction_margin(data, &cand);
                if m > best {
                    best = m;
                    best_w = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }

    Ok(VerificationReport {
        max_margin_found: best,
        svm_margin,
        gap: best - svm_margin,
        trials,
    })
}

/// Diagonal `D_L` with `D_kk = Σ_i L_ik`: for every `x`, `1ᵀLx = 1ᵀD_L x`.
pub fn collapse_to_diagonal(l: &Array2<f64>) -> Result<Array1<f64>> {
    let (r, c) = l.dim();
    if r != c {
        return Err(Error::NotSquare { rows: r, cols: c });
    }
    Ok(l.sum_axis(ndarray::Axis(0)))
}

/// Signed distance of an already transformed point `v` to `1ᵀv + b = 0`.
pub fn h1_signed_distance(v: ArrayView1<'_, f64>, b: f64) -> f64 {
    (v.sum() + b) / (v.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn column_sums() {
        let d = collapse_to_diagonal(&array![[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(d, array![4.0, 6.0]);
        assert_eq!(collapse_to_diagonal(&Array2::eye(3)).unwrap(), array![1.0, 1.0, 1.0]);
        assert!(collapse_to_diagonal(&Array2::zeros((2, 3))).is_err());
    }

    #[test]
    fn symmetric_pair_margin_is_one() {
        let d = Dataset::new(array![[1.0, 0.0], [-1.0, 0.0]], vec![Label::Positive, Label::Negative]).unwrap();
        let r = verify_metric_equivalence(&d, 100_000, 1).unwrap();
        assert!((r.svm_margin - 1.0).abs() < 1e-9);
        assert!((r.max_margin_found - 1.0).abs() < 1e-3);
        assert!(r.gap <= 1e-3);
    }

    #[test]
    fn zero_trials_has_no_evidence() {
        let d = Dataset::new(array![[1.0, 0.0], [-1.0, 0.0]], vec![Label::Positive, Label::Negative]).unwrap();
        let r = verify_metric_equivalence(&d, 0, 1).unwrap();
        assert!(!r.has_evidence());
        assert_eq!(r.max_margin_found, f64::NEG_INFINITY);
    }

    #[test]
    fn overlapping_classes_rejected() {
        let d = Dataset::new(
            array![[1.0, 0.0], [-1.0, 0.0], [-1.0, 0.0], [1.0, 0.0]],
            vec![Label::Positive, Label::Negative, Label::Positive, Label::Negative],
        )
        .unwrap();
        assert!(matches!(
            verify_metric_equivalence(&d, 10, 0),
            Err(Error::NotSeparable { .. })
        ));
    }
}
