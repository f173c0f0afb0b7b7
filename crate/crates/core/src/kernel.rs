//! Kernels and trace-normalized Gram matrices.
//!
//! Functional forms:
//!
//! * linear: `xᵀz`
//! * polynomial: `(xᵀz + offset)^degree`, offset defaults to 1
//! * gaussian: `exp(-‖x - z‖² / (2σ²))`
//!
//! With trace normalization the training Gram matrix is divided by its trace
//! and every later kernel row (test points) is divided by the same training
//! trace, so train and test live in one consistently scaled feature space.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1};

use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelKind {
    Linear,
    Polynomial { degree: u32, offset: f64 },
    Gaussian { sigma: f64 },
}

/// A kernel and whether its Gram matrices are trace normalized.
///
/// String form: `linear`, `poly:<degree>[:<offset>]`, `gauss:<sigma>`, with
/// an optional `:raw` suffix that turns trace normalization off.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub trace_normalize: bool,
}

impl KernelSpec {
    pub fn linear() -> Self {
        KernelSpec {
            kind: KernelKind::Linear,
            trace_normalize: true,
        }
    }

    pub fn polynomial(degree: u32, offset: f64) -> Self {
        KernelSpec {
            kind: KernelKind::Polynomial { degree, offset },
            trace_normalize: true,
        }
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::KernelSpec(format!("gauss:{sigma}")));
        }
        Ok(KernelSpec {
            kind: KernelKind::Gaussian { sigma },
            trace_normalize: true,
        })
    }

    pub fn raw(mut self) -> Self {
        self.trace_normalize = false;
        self
    }

    /// The four kernels of the benchmark protocol.
    pub fn benchmark_set() -> Vec<KernelSpec> {
        vec![
            KernelSpec::linear(),
            KernelSpec::polynomial(2, 1.0),
            KernelSpec::polynomial(3, 1.0),
            KernelSpec::gaussian(1.0).expect("positive sigma"),
        ]
    }

    /// Kernel value without a dimension check.
    #[inline]
    pub(crate) fn apply(&self, x: &[f64], z: &[f64]) -> f64 {
        match self.kind {
            KernelKind::Linear => dot(x, z),
            KernelKind::Polynomial { degree, offset } => {
                (dot(x, z) + offset).powi(degree as i32)
            }
            KernelKind::Gaussian { sigma } => {
                let d2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / (2.0 * sigma * sigma)).exp()
            }
        }
    }
}

#[inline]
fn dot(x: &[f64], z: &[f64]) -> f64 {
    x.iter().zip(z).map(|(a, b)| a * b).sum()
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            KernelKind::Linear => write!(f, "linear")?,
            KernelKind::Polynomial { degree, offset } => write!(f, "poly:{degree}:{offset}")?,
            KernelKind::Gaussian { sigma } => write!(f, "gauss:{sigma}")?,
        }
        if !self.trace_normalize {
            write!(f, ":raw")?;
        }
        Ok(())
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::KernelSpec(s.to_string());
        let mut parts: Vec<&str> = s.trim().split(':').collect();
        let mut trace_normalize = true;
        if parts.len() > 1 && parts.last() == Some(&"raw") {
            trace_normalize = false;
            parts.pop();
        }
        let kind = match parts.as_slice() {
            ["linear"] => KernelKind::Linear,
            ["poly", deg] | ["poly", deg, _] => {
                let degree: u32 = deg.parse().map_err(|_| bad())?;
                let offset = match parts.get(2) {
                    Some(o) => o.parse().map_err(|_| bad())?,
                    None => 1.0,
                };
                if degree == 0 || !f64::is_finite(offset) {
                    return Err(bad());
                }
                KernelKind::Polynomial { degree, offset }
            }
            ["gauss", sigma] => {
                let sigma: f64 = sigma.parse().map_err(|_| bad())?;
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(bad());
                }
                KernelKind::Gaussian { sigma }
            }
            _ => return Err(bad()),
        };
        Ok(KernelSpec {
            kind,
            trace_normalize,
        })
    }
}

pub fn eval_kernel(spec: &KernelSpec, x: ArrayView1<'_, f64>, z: ArrayView1<'_, f64>) -> Result<f64> {
    if x.len() != z.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: z.len(),
        });
    }
    Ok(spec.apply(&x.to_vec(), &z.to_vec()))
}

/// An `n×n` kernel matrix and the factor it was divided by.
#[derive(Clone, Debug)]
pub struct GramMatrix {
    k: Array2<f64>,
    spec: KernelSpec,
    normalization_factor: f64,
}

impl GramMatrix {
    /// Wraps a precomputed matrix (factor 1).
    pub fn from_matrix(k: Array2<f64>, spec: KernelSpec) -> Result<Self> {
        let (r, c) = k.dim();
        if r != c {
            return Err(Error::NotSquare { rows: r, cols: c });
        }
        Ok(GramMatrix {
            k,
            spec,
            normalization_factor: 1.0,
        })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.k
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn normalization_factor(&self) -> f64 {
        self.normalization_factor
    }

    pub fn n(&self) -> usize {
        self.k.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.k.diag().sum()
    }
}

/// Assembles the Gram matrix of `data`, trace normalized if the spec says so.
pub fn gram(spec: &KernelSpec, data: &Dataset) -> Result<GramMatrix> {
    gram_of_rows(spec, data.x())
}

pub fn gram_of_rows(spec: &KernelSpec, x: &Array2<f64>) -> Result<GramMatrix> {
    let n = x.nrows();
    let rows: Vec<Vec<f64>> = x.outer_iter().map(|r| r.to_vec()).collect();
    let mut k = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v = spec.apply(&rows[i], &rows[j]);
            k[[i, j]] = v;
            k[[j, i]] = v;
        }
    }
    let mut factor = 1.0;
    if spec.trace_normalize {
        let trace = k.diag().sum();
        if !(trace > 0.0 && trace.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "cannot trace-normalize a Gram matrix with trace {trace}"
            )));
        }
        k.mapv_inplace(|v| v / trace);
        factor = trace;
    }
    Ok(GramMatrix {
        k,
        spec: *spec,
        normalization_factor: factor,
    })
}

/// Kernel values between `x` and every training row, divided by `factor`
/// (the training normalization factor).
pub fn test_kernel_row(
    spec: &KernelSpec,
    train: &Array2<f64>,
    x: ArrayView1<'_, f64>,
    factor: f64,
) -> Result<Array1<f64>> {
    if x.len() != train.ncols() {
        return Err(Error::DimensionMismatch {
            expected: train.ncols(),
            found: x.len(),
        });
    }
    let xv = x.to_vec();
    Ok(train
        .outer_iter()
        .map(|r| spec.apply(r.as_slice().expect("row-major"), &xv) / factor)
        .collect())
}
