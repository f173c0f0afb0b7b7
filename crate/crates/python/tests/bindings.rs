use pyo3::prelude::*;
use pyo3::types::PyDict;

fn run(code: &str) -> PyResult<()> {
    Python::attach(|py| {
        let module = pyo3::wrap_pymodule!(marginmetric_py::marginmetric_py)(py);
        let globals = PyDict::new(py);
        globals.set_item("mm", module)?;
        py.run(&std::ffi::CString::new(code).unwrap(), Some(&globals), None)
    })
}

#[test]
fn fit_and_predict() {
    run(r#"
x = [[-2.0, 0.1], [-1.5, -0.3], [-1.8, 0.4], [2.0, 0.0], [1.7, 0.2], [2.2, -0.5]]
y = [-1, -1, -1, 1, 1, 1]
ds = mm.Dataset(x, y)
m = mm.MarginModel.fit_svm(ds, mm.KernelSpec("linear"), 10.0)
assert m.predict(x) == y
e = mm.MarginModel.fit_esvm(ds, mm.KernelSpec("linear"), 10.0, lam=0.0)
assert e.delta == m.delta
metric = mm.Metric.train_lmnn(ds, k_targets=1, max_iters=10)
assert metric.knn_predict(ds, x, 1) == y
assert len(mm.phi([1.0, 2.0, 3.0])) == 9
"#)
    .unwrap();
}

#[test]
fn errors_become_python_exceptions() {
    run(r#"
try:
    mm.Dataset([[1.0], [2.0]], [1, 1])
    raise AssertionError("single class accepted")
except ValueError:
    pass
try:
    mm.Dataset([[1.0], [2.0]], [1, 0])
    raise AssertionError("label 0 accepted")
except ValueError:
    pass
try:
    mm.KernelSpec("gauss:-1")
    raise AssertionError("negative sigma accepted")
except ValueError:
    pass
"#)
    .unwrap();
}
