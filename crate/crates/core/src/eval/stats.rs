//! McNemar's test and win/tie/loss scoring.

use std::collections::BTreeMap;

use crate::data::Label;
use crate::error::{Error, Result};

/// Continuity-corrected chi-square critical values, one degree of freedom.
const CRITICAL_VALUES: [(f64, f64); 4] = [
    (0.10, 2.705543),
    (0.05, 3.841459),
    (0.01, 6.634897),
    (0.001, 10.827566),
];

pub fn critical_value(alpha: f64) -> Result<f64> {
    CRITICAL_VALUES
        .iter()
        .find(|(a, _)| *a == alpha)
        .map(|(_, v)| *v)
        .ok_or_else(|| Error::InvalidArgument(format!("unsupported significance level {alpha}")))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McNemarOutcome {
    /// A wrong, B right.
    pub n01: usize,
    /// A right, B wrong.
    pub n10: usize,
    pub statistic: f64,
    pub significant: bool,
    pub alpha: f64,
}

impl McNemarOutcome {
    pub fn from_counts(n01: usize, n10: usize, alpha: f64) -> Result<Self> {
        let crit = critical_value(alpha)?;
        let total = n01 + n10;
        let statistic = if total == 0 {
            0.0
        } else {
            let diff = (n01 as f64 - n10 as f64).abs() - 1.0;
            diff * diff / total as f64
        };
        Ok(McNemarOutcome {
            n01,
            n10,
            statistic,
            significant: statistic > crit,
            alpha,
        })
    }

    /// Points for (A, B): 1/0 to the significantly better side, else ½ each.
    pub fn points(&self) -> (f64, f64) {
        if !self.significant || self.n01 == self.n10 {
            (0.5, 0.5)
        } else if self.n10 > self.n01 {
            (1.0, 0.0)
        } else {
            (0.0, 1.0)
        }
    }
}

pub fn mcnemar(a: &[Label], b: &[Label], truth: &[Label], alpha: f64) -> Result<McNemarOutcome> {
    if a.len() != truth.len() || b.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            found: if a.len() != truth.len() { a.len() } else { b.len() },
        });
    }
    let mut n01 = 0;
    let mut n10 = 0;
    for ((pa, pb), t) in a.iter().zip(b).zip(truth) {
        match (pa == t, pb == t) {
            (false, true) => n01 += 1,
            (true, false) => n10 += 1,
            _ => {}
        }
    }
    McNemarOutcome::from_counts(n01, n10, alpha)
}

/// One pairwise comparison on one (dataset, kernel) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub dataset: String,
    pub kernel: String,
    pub algo_a: String,
    pub algo_b: String,
    pub outcome: McNemarOutcome,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreCell {
    pub dataset: String,
    pub kernel: String,
    pub algo_a: String,
    pub algo_b: String,
    pub points_a: f64,
    pub points_b: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScoreTable {
    pub cells: Vec<ScoreCell>,
}

impl ScoreTable {
    /// Overall points per algorithm, sorted by name.
    pub fn totals(&self) -> BTreeMap<String, f64> {
        let mut t = BTreeMap::new();
        for c in &self.cells {
            *t.entry(c.algo_a.clone()).or_insert(0.0) += c.points_a;
            *t.entry(c.algo_b.clone()).or_insert(0.0) += c.points_b;
        }
        t
    }

    /// Points per (kernel, algorithm).
    pub fn totals_by_kernel(&self) -> BTreeMap<(String, String), f64> {
        let mut t = BTreeMap::new();
        for c in &self.cells {
            *t.entry((c.kernel.clone(), c.algo_a.clone())).or_insert(0.0) += c.points_a;
            *t.entry((c.kernel.clone(), c.algo_b.clone())).or_insert(0.0) += c.points_b;
        }
        t
    }

    pub fn total(&self, algo: &str) -> f64 {
        self.totals().get(algo).copied().unwrap_or(0.0)
    }
}

pub fn score_pairwise(comparisons: &[Comparison]) -> ScoreTable {
    let cells = comparisons
        .iter()
        .map(|c| {
            let (pa, pb) = c.outcome.points();
            ScoreCell {
                dataset: c.dataset.clone(),
                kernel: c.kernel.clone(),
                algo_a: c.algo_a.clone(),
                algo_b: c.algo_b.clone(),
                points_a: pa,
                points_b: pb,
            }
        })
        .collect();
    ScoreTable { cells }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        let o = McNemarOutcome::from_counts(15, 5, 0.05).unwrap();
        assert_eq!(o.statistic, 4.05);
        assert!(o.significant);
        assert_eq!(o.points(), (0.0, 1.0));
        let o = McNemarOutcome::from_counts(3, 3, 0.05).unwrap();
        assert!((o.statistic - 1.0 / 6.0).abs() < 1e-15);
        assert!(!o.significant);
        let o = McNemarOutcome::from_counts(0, 0, 0.05).unwrap();
        assert_eq!(o.statistic, 0.0);
        assert!(!o.significant);
        assert!(McNemarOutcome::from_counts(1, 1, 0.2).is_err());
    }

    #[test]
    fn counts_from_predictions() {
        use Label::{Negative as N, Positive as P};
        let truth = [P, P, N, N];
        let o = mcnemar(&[P, N, N, P], &[N, P, N, N], &truth, 0.05).unwrap();
        assert_eq!((o.n01, o.n10), (2, 1));
        assert!(mcnemar(&[P], &[P, P], &[P, P], 0.05).is_err());
    }
}
