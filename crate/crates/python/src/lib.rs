//! Python bindings for `marginmetric`.
//!
//! Matrices are passed as lists of rows and labels as `+1` / `-1` integers.

use marginmetric::data::{self, Dataset, Label, StandardizationParams};
use marginmetric::eval::{self, Algo};
use marginmetric::kernel::KernelSpec;
use marginmetric::lmnn::{self, LmnnConfig, Mahalanobis};
use marginmetric::maxmargin::{self, MarginModel};
use marginmetric::quadmap;
use marginmetric::Error;
use ndarray::{Array1, Array2};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Array2<f64>> {
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != d) {
        return Err(PyValueError::new_err("rows must all have the same length"));
    }
    Array2::from_shape_vec((n, d), rows.into_iter().flatten().collect())
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

fn rows(x: &Array2<f64>) -> Vec<Vec<f64>> {
    x.outer_iter().map(|r| r.to_vec()).collect()
}

fn label(v: i64) -> PyResult<Label> {
    match v {
        1 => Ok(Label::Positive),
        -1 => Ok(Label::Negative),
        _ => Err(PyValueError::new_err(format!("labels must be +1 or -1, got {v}"))),
    }
}

fn labels(v: Vec<i64>) -> PyResult<Vec<Label>> {
    v.into_iter().map(label).collect()
}

fn signs(v: &[Label]) -> Vec<i64> {
    v.iter().map(|l| l.sign() as i64).collect()
}

#[pyclass(name = "Dataset", module = "marginmetric_py", from_py_object)]
#[derive(Clone)]
pub struct PyDataset {
    inner: Dataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    fn new(x: Vec<Vec<f64>>, y: Vec<i64>) -> PyResult<Self> {
        let inner = Dataset::new(matrix(x)?, labels(y)?).map_err(to_py)?;
        Ok(PyDataset { inner })
    }

    /// Loads a `.csv` (label in the last column) or libsvm text file.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyDataset { inner: data::load_auto(path).map_err(to_py)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    #[getter]
    fn x(&self) -> Vec<Vec<f64>> {
        rows(self.inner.x())
    }

    #[getter]
    fn y(&self) -> Vec<i64> {
        signs(self.inner.labels())
    }

    /// Z-scored copy, fit on this dataset.
    fn standardized(&self) -> PyResult<Self> {
        let p = StandardizationParams::fit(&self.inner);
        Ok(PyDataset { inner: p.apply_dataset(&self.inner).map_err(to_py)? })
    }

    fn subset(&self, indices: Vec<usize>) -> PyResult<Self> {
        if let Some(&i) = indices.iter().find(|&&i| i >= self.inner.n()) {
            return Err(PyValueError::new_err(format!("index {i} out of range")));
        }
        Ok(PyDataset { inner: self.inner.subset(&indices).map_err(to_py)? })
    }

    fn __len__(&self) -> usize {
        self.inner.n()
    }

    fn __repr__(&self) -> String {
        format!("Dataset(n={}, d={})", self.inner.n(), self.inner.d())
    }
}

#[pyclass(name = "KernelSpec", module = "marginmetric_py", from_py_object)]
#[derive(Clone)]
pub struct PyKernelSpec {
    inner: KernelSpec,
}

#[pymethods]
impl PyKernelSpec {
    /// `linear`, `poly:<degree>[:<offset>]` or `gauss:<sigma>`, optionally
    /// suffixed with `:raw`.
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        Ok(PyKernelSpec { inner: spec.parse().map_err(to_py)? })
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("KernelSpec({:?})", self.inner.to_string())
    }
}

#[pyclass(name = "MarginModel", module = "marginmetric_py")]
pub struct PyMarginModel {
    inner: MarginModel,
}

#[pymethods]
impl PyMarginModel {
    #[staticmethod]
    fn fit_svm(data: &PyDataset, kernel: &PyKernelSpec, c: f64) -> PyResult<Self> {
        let m = maxmargin::fit_svm(&data.inner, &kernel.inner, c).map_err(to_py)?;
        Ok(PyMarginModel { inner: m.into_inner() })
    }

    /// ε-SVM; `lam` defaults to `c / 3`.
    #[staticmethod]
    #[pyo3(signature = (data, kernel, c, lam=None))]
    fn fit_esvm(data: &PyDataset, kernel: &PyKernelSpec, c: f64, lam: Option<f64>) -> PyResult<Self> {
        let lam = lam.unwrap_or(c * eval::cv::LAMBDA_RATIO);
        let m = maxmargin::fit_esvm(&data.inner, &kernel.inner, c, lam).map_err(to_py)?;
        Ok(PyMarginModel { inner: m.into_inner() })
    }

    fn decision_function(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        let x = matrix(x)?;
        x.outer_iter().map(|r| self.inner.decision_value(r).map_err(to_py)).collect()
    }

    fn predict(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<i64>> {
        Ok(signs(&self.inner.predict_all(&matrix(x)?).map_err(to_py)?))
    }

    #[getter]
    fn delta(&self) -> Vec<f64> {
        self.inner.delta.clone()
    }

    #[getter]
    fn bias(&self) -> f64 {
        self.inner.bias
    }

    #[getter]
    fn support(&self) -> Vec<usize> {
        self.inner.support.clone()
    }

    #[getter]
    fn objective(&self) -> f64 {
        self.inner.objective
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn geometric_margin(&self) -> f64 {
        self.inner.geometric_margin()
    }

    fn __repr__(&self) -> String {
        format!(
            "MarginModel(kernel={:?}, c={}, lam={}, support={})",
            self.inner.spec.to_string(),
            self.inner.c,
            self.inner.lambda,
            self.inner.support.len()
        )
    }
}

#[pyclass(name = "Metric", module = "marginmetric_py")]
pub struct PyMetric {
    inner: Mahalanobis,
}

#[pymethods]
impl PyMetric {
    #[new]
    fn new(m: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(PyMetric { inner: Mahalanobis::new(matrix(m)?).map_err(to_py)? })
    }

    #[staticmethod]
    fn identity(d: usize) -> Self {
        PyMetric { inner: Mahalanobis::identity(d) }
    }

    /// Learns a metric with LMNN.
    #[staticmethod]
    #[pyo3(signature = (data, k_targets=5, mu=0.5, max_iters=200, seed=42))]
    fn train_lmnn(data: &PyDataset, k_targets: usize, mu: f64, max_iters: usize, seed: u64) -> PyResult<Self> {
        let cfg = LmnnConfig { k_targets, mu, max_iters, seed, ..Default::default() };
        Ok(PyMetric { inner: lmnn::train_lmnn(&data.inner, &cfg).map_err(to_py)? })
    }

    #[getter]
    fn matrix(&self) -> Vec<Vec<f64>> {
        rows(self.inner.matrix())
    }

    fn dist2(&self, x: Vec<f64>, z: Vec<f64>) -> PyResult<f64> {
        self.inner.dist2(Array1::from(x).view(), Array1::from(z).view()).map_err(to_py)
    }

    fn knn_predict(&self, train: &PyDataset, x: Vec<Vec<f64>>, k: usize) -> PyResult<Vec<i64>> {
        let pred = lmnn::knn_predict_all(&self.inner, &train.inner, &matrix(x)?, k).map_err(to_py)?;
        Ok(signs(&pred))
    }

    fn __repr__(&self) -> String {
        format!("Metric(d={})", self.inner.dim())
    }
}

/// Explicit quadratic feature map: squares, cross terms, then linear terms.
#[pyfunction]
fn phi(x: Vec<f64>) -> Vec<f64> {
    quadmap::phi(Array1::from(x).view()).values.to_vec()
}

/// Continuity-corrected McNemar test. Returns `(n01, n10, statistic, significant)`.
#[pyfunction]
#[pyo3(signature = (a, b, truth, alpha=0.05))]
fn mcnemar(a: Vec<i64>, b: Vec<i64>, truth: Vec<i64>, alpha: f64) -> PyResult<(usize, usize, f64, bool)> {
    let o = eval::mcnemar(&labels(a)?, &labels(b)?, &labels(truth)?, alpha).map_err(to_py)?;
    Ok((o.n01, o.n10, o.statistic, o.significant))
}

/// Fold index of every instance.
#[pyfunction]
fn kfold(n: usize, k: usize, seed: u64) -> PyResult<Vec<usize>> {
    Ok(data::kfold_split(n, k, seed).map_err(to_py)?.assignments)
}

/// Nested cross-validation. Returns `(mean_error, per_fold_errors)`.
#[pyfunction]
#[pyo3(signature = (data, algo, kernel, folds=10, seed=42))]
fn cross_validate(data: &PyDataset, algo: &str, kernel: &PyKernelSpec, folds: usize, seed: u64) -> PyResult<(f64, Vec<f64>)> {
    let algo: Algo = algo.parse().map_err(to_py)?;
    let res = eval::run_cv(&data.inner, algo, &kernel.inner, folds, seed).map_err(to_py)?;
    Ok((res.mean_error, res.per_fold_errors))
}

#[pymodule]
pub fn marginmetric_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyKernelSpec>()?;
    m.add_class::<PyMarginModel>()?;
    m.add_class::<PyMetric>()?;
    m.add_function(wrap_pyfunction!(phi, m)?)?;
    m.add_function(wrap_pyfunction!(mcnemar, m)?)?;
    m.add_function(wrap_pyfunction!(kfold, m)?)?;
    m.add_function(wrap_pyfunction!(cross_validate, m)?)?;
    Ok(())
}
