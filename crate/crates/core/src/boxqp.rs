//! SMO solver for the box-constrained dual shared by SVM and ε-SVM:
//!
//! ```text
//! maximize   Σ_i δ_i − ½ Σ_ij δ_i δ_j y_i y_j K_ij
//! subject to Σ_i δ_i y_i = 0,   lo_i ≤ δ_i ≤ hi_i
//! ```
//!
//! The soft-margin SVM uses `lo = 0, hi = C`. ε-SVM has two multiplier sets
//! `0 ≤ α ≤ C`, `0 ≤ β ≤ λ` that enter the objective only through
//! `δ = α − β`, so it is the same problem with `lo = −λ`. An optimal `δ`
//! maps back to `α = max(δ, 0)`, `β = max(−δ, 0)`.
//!
//! Each step picks the maximal violating pair and solves the two-variable
//! subproblem in closed form, clipping the step against both variables'
//! own boxes. The solver keeps `f_i = Σ_j δ_j y_j K_ij` up to date
//! incrementally; in terms of `s_i = y_i − f_i`, optimality is
//! `max_{up} s ≤ min_{low} s` and any bias `b` in that interval satisfies KKT.

use ndarray::Array2;

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct BoxQpProblem<'a> {
    kernel: &'a Array2<f64>,
    labels: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl<'a> BoxQpProblem<'a> {
    /// `labels` must be `±1`; every box must satisfy `lo ≤ 0 ≤ hi`, `lo < hi`.
    pub fn new(kernel: &'a Array2<f64>, labels: &[f64], lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let n = labels.len();
        let (r, c) = kernel.dim();
        if r != c {
            return Err(Error::NotSquare { rows: r, cols: c });
        }
        for len in [r, lo.len(), hi.len()] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: len,
                });
            }
        }
        if let Some(bad) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(Error::InvalidArgument(format!("label {bad} is not ±1")));
        }
        for i in 0..n {
            let (l, h) = (lo[i], hi[i]);
            if !(l.is_finite() && h.is_finite() && l <= 0.0 && 0.0 <= h && l < h) {
                return Err(Error::InfeasibleBox { index: i, lo: l, hi: h });
            }
        }
        Ok(BoxQpProblem {
            kernel,
            labels: labels.to_vec(),
            lo,
            hi,
        })
    }

    /// Same box `[lo, hi]` for every variable.
    pub fn uniform(kernel: &'a Array2<f64>, labels: &[f64], lo: f64, hi: f64) -> Result<Self> {
        let n = labels.len();
        Self::new(kernel, labels, vec![lo; n], vec![hi; n])
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn kernel(&self) -> &Array2<f64> {
        self.kernel
    }

    /// `f_i = Σ_j δ_j y_j K_ij`.
    pub fn margins(&self, delta: &[f64]) -> Vec<f64> {
        let n = self.n();
        let coef: Vec<f64> = (0..n).map(|j| delta[j] * self.labels[j]).collect();
        (0..n)
            .map(|i| {
                let row = self.kernel.row(i);
                coef.iter().zip(row.iter()).map(|(c, k)| c * k).sum()
            })
            .collect()
    }

    pub fn objective(&self, delta: &[f64]) -> f64 {
        let f = self.margins(delta);
        objective_from_margins(&self.labels, delta, &f)
    }

    fn in_up(&self, i: usize, delta: f64) -> bool {
        if self.labels[i] > 0.0 {
            delta < self.hi[i]
        } else {
            delta > self.lo[i]
        }
    }

    fn in_low(&self, i: usize, delta: f64) -> bool {
        if self.labels[i] > 0.0 {
            delta > self.lo[i]
        } else {
            delta < self.hi[i]
        }
    }
}

fn objective_from_margins(labels: &[f64], delta: &[f64], f: &[f64]) -> f64 {
    let linear: f64 = delta.iter().sum();
    let quad: f64 = delta
        .iter()
        .zip(labels)
        .zip(f)
        .map(|((d, y), fi)| d * y * fi)
        .sum();
    linear - 0.5 * quad
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Stop once the maximal KKT violation `max_up s − min_low s` is below this.
    pub tol: f64,
    /// Pair-update budget.
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-6,
            max_iter: 10_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualSolution {
    pub delta: Vec<f64>,
    pub bias: f64,
    pub objective: f64,
    pub iterations: usize,
    pub kkt_violation: f64,
    /// False when `max_iter` was exhausted before reaching `tol`.
    pub converged: bool,
}

struct Extremes {
    up: Option<(usize, f64)>,
    low: Option<(usize, f64)>,
}

fn extremes(problem: &BoxQpProblem<'_>, delta: &[f64], f: &[f64]) -> Extremes {
    let mut up: Option<(usize, f64)> = None;
    let mut low: Option<(usize, f64)> = None;
    for i in 0..problem.n() {
        let s = problem.labels[i] - f[i];
        if problem.in_up(i, delta[i]) && up.is_none_or(|(_, m)| s > m) {
            up = Some((i, s));
        }
        if problem.in_low(i, delta[i]) && low.is_none_or(|(_, m)| s < m) {
            low = Some((i, s));
        }
    }
    Extremes { up, low }
}

const TAU: f64 = 1e-12;

pub fn solve(problem: &BoxQpProblem<'_>, opts: &SolverOptions) -> Result<DualSolution> {
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {}", opts.tol)));
    }
    let n = problem.n();
    let k = problem.kernel;
    let y = &problem.labels;
    let mut delta = vec![0.0; n];
    let mut f = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        let ext = extremes(problem, &delta, &f);
        let (Some((i, si)), Some((j, sj))) = (ext.up, ext.low) else {
            converged = true;
            break;
        };
        if si - sj <= opts.tol {
            converged = true;
            break;
        }
        let mut eta = k[[i, i]] + k[[j, j]] - 2.0 * k[[i, j]];
        if eta <= TAU {
            eta = TAU;
        }
        let step_i = if y[i] > 0.0 {
            problem.hi[i] - delta[i]
        } else {
            delta[i] - problem.lo[i]
        };
        let step_j = if y[j] > 0.0 {
            delta[j] - problem.lo[j]
        } else {
            problem.hi[j] - delta[j]
        };
        let mut t = (si - sj) / eta;
        let mut clip_i = false;
        let mut clip_j = false;
        if t >= step_i {
            t = step_i;
            clip_i = true;
        }
        if t >= step_j {
            t = step_j;
            clip_j = true;
            clip_i = step_i == step_j;
        }

        debug_assert!({
            let gain = t * (si - sj) - 0.5 * t * t * (k[[i, i]] + k[[j, j]] - 2.0 * k[[i, j]]);
            gain >= -1e-12 * (1.0 + t.abs() * (si - sj).abs())
        }, "dual objective decreased on a pair update");

        delta[i] = if clip_i {
            if y[i] > 0.0 { problem.hi[i] } else { problem.lo[i] }
        } else {
            delta[i] + y[i] * t
        };
        delta[j] = if clip_j {
            if y[j] > 0.0 { problem.lo[j] } else { problem.hi[j] }
        } else {
            delta[j] - y[j] * t
        };
        for (m, fm) in f.iter_mut().enumerate() {
            *fm += t * (k[[m, i]] - k[[m, j]]);
        }
        iterations += 1;
    }

    // Refresh the cache exactly before reporting.
    let f = problem.margins(&delta);
    let objective = objective_from_margins(y, &delta, &f);
    let (bias, kkt_violation) = bias_from_margins(problem, &delta, &f);
    if !converged {
        log::warn!(
            "SMO stopped after {iterations} pair updates with KKT violation {kkt_violation:e}"
        );
    }
    Ok(DualSolution {
        delta,
        bias,
        objective,
        iterations,
        kkt_violation,
        converged,
    })
}

/// Bias from a feasible `delta`: the mean of `y_i − f_i` over free
/// variables, or the midpoint of the KKT interval when every variable sits
/// at a bound. Returns `(bias, kkt_violation)`.
pub fn recover_bias(problem: &BoxQpProblem<'_>, delta: &[f64]) -> (f64, f64) {
    let f = problem.margins(delta);
    bias_from_margins(problem, delta, &f)
}

fn bias_from_margins(problem: &BoxQpProblem<'_>, delta: &[f64], f: &[f64]) -> (f64, f64) {
    let ext = extremes(problem, delta, f);
    let violation = match (ext.up, ext.low) {
        (Some((_, m)), Some((_, mm))) => (m - mm).max(0.0),
        _ => 0.0,
    };
    let (mut sum, mut count) = (0.0, 0usize);
    for i in 0..problem.n() {
        if problem.lo[i] < delta[i] && delta[i] < problem.hi[i] {
            sum += problem.labels[i] - f[i];
            count += 1;
        }
    }
    if count > 0 {
        return (sum / count as f64, violation);
    }
    let bias = match (ext.up, ext.low) {
        (Some((_, lower)), Some((_, upper))) => 0.5 * (lower + upper),
        (Some((_, lower)), None) => lower,
        (None, Some((_, upper))) => upper,
        (None, None) => 0.0,
    };
    (bias, violation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn pair_kernel() -> Array2<f64> {
        // x1 = (1,0), x2 = (-1,0), linear kernel
        array![[1.0, -1.0], [-1.0, 1.0]]
    }

    #[test]
    fn two_point_closed_form() {
        // Dual reduces to 2δ − 2δ², maximized at δ = 1/2 with value 1/2.
        let k = pair_kernel();
        let p = BoxQpProblem::uniform(&k, &[1.0, -1.0], 0.0, 10.0).unwrap();
        let s = solve(&p, &SolverOptions { tol: 1e-12, ..Default::default() }).unwrap();
        assert!(s.converged);
        assert!((s.delta[0] - 0.5).abs() < 1e-12);
        assert!((s.delta[1] - 0.5).abs() < 1e-12);
        assert!(s.bias.abs() < 1e-12);
        assert!((s.objective - 0.5).abs() < 1e-12);
    }

    #[test]
    fn collapsed_box_rejected() {
        let k = pair_kernel();
        let err = BoxQpProblem::uniform(&k, &[1.0, -1.0], 0.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::InfeasibleBox { .. }));
        assert!(BoxQpProblem::uniform(&k, &[1.0, -1.0], 0.5, 1.0).is_err());
        assert!(BoxQpProblem::uniform(&k, &[1.0, 2.0], 0.0, 1.0).is_err());
    }

    #[test]
    fn bias_midpoint_when_all_at_bounds() {
        // Both variables at 0 with lo = 0: s = y − f = y. Up set = {0} (s = 1)...
        // use labels so that the interval is [-1, 1].
        let k = Array2::zeros((2, 2));
        let p = BoxQpProblem::uniform(&k, &[-1.0, 1.0], 0.0, 1.0).unwrap();
        // δ = (1, 1): y=-1 at hi is in up (s = -1); y=+1 at hi is in low (s = 1).
        let (b, v) = recover_bias(&p, &[1.0, 1.0]);
        assert_eq!(b, 0.0);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn bias_single_free_variable() {
        // f_0 = δ_0 y_0 K_00 + δ_1 y_1 K_01 = 0.3 with δ_0 free.
        let k = array![[0.6, 0.0], [0.0, 1.0]];
        let p = BoxQpProblem::uniform(&k, &[1.0, -1.0], 0.0, 1.0).unwrap();
        let (b, _) = recover_bias(&p, &[0.5, 1.0]);
        assert!((b - 0.7).abs() < 1e-15);
    }

    #[test]
    fn equality_and_box_hold() {
        let k = array![
            [2.0, 0.5, 0.1, 0.3],
            [0.5, 1.0, 0.2, 0.0],
            [0.1, 0.2, 1.5, 0.4],
            [0.3, 0.0, 0.4, 0.8]
        ];
        let y = [1.0, -1.0, 1.0, -1.0];
        let p = BoxQpProblem::uniform(&k, &y, -0.3, 0.7).unwrap();
        let s = solve(&p, &SolverOptions::default()).unwrap();
        let eq: f64 = s.delta.iter().zip(&y).map(|(d, y)| d * y).sum();
        assert!(eq.abs() <= 1e-10);
        for d in &s.delta {
            assert!(*d >= -0.3 - 1e-12 && *d <= 0.7 + 1e-12);
        }
        assert!(s.kkt_violation <= 1e-6);
        assert!((s.objective - p.objective(&s.delta)).abs() < 1e-12);
    }

    #[test]
    fn max_iter_flags_non_convergence() {
        let k = pair_kernel();
        let p = BoxQpProblem::uniform(&k, &[1.0, -1.0], 0.0, 10.0).unwrap();
        let s = solve(&p, &SolverOptions { tol: 1e-9, max_iter: 0 }).unwrap();
        assert!(!s.converged);
        assert_eq!(s.iterations, 0);
    }
}
