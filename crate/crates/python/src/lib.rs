//! Python bindings. Reports come back as plain dicts and lists.

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

use properclass::classify::{group_lookup as core_group_lookup, stability_check as core_stability_check};
use properclass::invariants::{self as inv, ClassOptions};
use properclass::map_model::certify_proper as core_certify_proper;
use properclass::normalize::{normalize as core_normalize, NormalizeOptions};
use properclass::pontryagin::{parse_signs, realizable_1d as core_realizable_1d, realizable_1d_at};
use properclass::suite::{counterexample_suite as core_suite, SuiteItem, SuiteOptions};
use properclass::{Config, Error, MapSpec, SphereMapSpec};

create_exception!(properclass_py, ComputationError, PyRuntimeError, "A certified computation could not complete.");

fn err(e: Error) -> PyErr {
    match e {
        Error::Parse { .. }
        | Error::InvalidMap(_)
        | Error::InvalidInput(_)
        | Error::DimensionMismatch { .. }
        | Error::NotUnit { .. } => PyValueError::new_err(e.to_string()),
        _ => ComputationError::new_err((e.to_string(), e.kind())),
    }
}

fn to_py<T: Serialize>(py: Python<'_>, v: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn config(seed: Option<u64>) -> Config {
    seed.map(Config::with_seed).unwrap_or_default()
}

fn proper(f: &PyMapSpec, window: f64) -> PyResult<MapSpec> {
    if f.inner.is_proper() {
        Ok(f.inner.clone())
    } else {
        core_certify_proper(f.inner.clone(), window).map_err(err)
    }
}

/// A map `R^n -> R^k` built from the expression language.
#[pyclass(name = "MapSpec", frozen, skip_from_py_object)]
pub struct PyMapSpec {
    inner: MapSpec,
}

#[pymethods]
impl PyMapSpec {
    #[new]
    #[pyo3(signature = (src, domain_dim=None))]
    fn new(src: &str, domain_dim: Option<usize>) -> PyResult<Self> {
        Ok(Self { inner: MapSpec::parse(src, domain_dim).map_err(err)? })
    }

    #[getter]
    fn domain_dim(&self) -> usize {
        self.inner.domain_dim()
    }

    #[getter]
    fn codomain_dim(&self) -> usize {
        self.inner.codomain_dim()
    }

    #[getter]
    fn is_proper(&self) -> bool {
        self.inner.is_proper()
    }

    fn __call__(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.eval(&x).map_err(err)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("MapSpec('{}')", self.inner)
    }
}

/// A map `S^m -> S^d`.
#[pyclass(name = "SphereMapSpec", frozen, skip_from_py_object)]
pub struct PySphereMapSpec {
    inner: SphereMapSpec,
}

#[pymethods]
impl PySphereMapSpec {
    #[new]
    #[pyo3(signature = (src, domain_sphere_dim=None))]
    fn new(src: &str, domain_sphere_dim: Option<usize>) -> PyResult<Self> {
        Ok(Self { inner: SphereMapSpec::parse(src, domain_sphere_dim).map_err(err)? })
    }

    #[getter]
    fn domain_sphere_dim(&self) -> usize {
        self.inner.domain_sphere_dim()
    }

    #[getter]
    fn codomain_sphere_dim(&self) -> usize {
        self.inner.codomain_sphere_dim()
    }

    fn __call__(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.eval(&x).map_err(err)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("SphereMapSpec('{}')", self.inner)
    }
}

/// Check properness on sample shells and return the map flagged proper.
#[pyfunction]
#[pyo3(signature = (f, window=50.0))]
fn certify_proper(f: &PyMapSpec, window: f64) -> PyResult<PyMapSpec> {
    Ok(PyMapSpec { inner: core_certify_proper(f.inner.clone(), window).map_err(err)? })
}

#[pyfunction]
fn group_lookup(py: Python<'_>, n: usize, k: usize) -> PyResult<Py<PyAny>> {
    to_py(py, &core_group_lookup(n, k).map_err(err)?)
}

#[pyfunction]
fn stability_check(py: Python<'_>, m: u32, n: u32, k: u32) -> PyResult<Py<PyAny>> {
    to_py(py, &core_stability_check(m, n, k).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (g, samples=4096))]
fn winding_number(g: &PySphereMapSpec, samples: usize) -> PyResult<i64> {
    inv::winding_number(&g.inner, samples).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (g, target=None))]
fn degree_s2(g: &PySphereMapSpec, target: Option<[f64; 3]>) -> PyResult<i64> {
    let y = target.unwrap_or(inv::DEFAULT_DEGREE_TARGET);
    inv::degree_s2(&g.inner, &y, &Config::default().tol).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (g, seed=None))]
fn hopf_invariant(g: &PySphereMapSpec, seed: Option<u64>) -> PyResult<i64> {
    inv::hopf_invariant(&g.inner, &config(seed)).map_err(err)
}

/// Signs of `f` at `-inf` and `+inf` as a `(minus, plus)` tuple; non-proper maps are certified first.
#[pyfunction]
#[pyo3(signature = (f, window=50.0))]
fn end_signs(f: &PyMapSpec, window: f64) -> PyResult<(i32, i32)> {
    let s = inv::end_signs(&proper(f, window)?, window, &Config::default().tol).map_err(err)?;
    Ok((s.minus, s.plus))
}

/// Class of a proper map; non-proper maps are certified first.
#[pyfunction]
#[pyo3(signature = (f, window=50.0, seed=None))]
fn proper_class(py: Python<'_>, f: &PyMapSpec, window: f64, seed: Option<u64>) -> PyResult<Py<PyAny>> {
    let g = proper(f, window)?;
    let opts = ClassOptions { window, ..ClassOptions::default() };
    let r = py.detach(|| inv::proper_class(&g, &opts, &config(seed))).map_err(err)?;
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (g, seed=None))]
fn sphere_invariant(py: Python<'_>, g: &PySphereMapSpec, seed: Option<u64>) -> PyResult<Py<PyAny>> {
    let r = py.detach(|| inv::sphere_invariant(&g.inner, &ClassOptions::default(), &config(seed))).map_err(err)?;
    to_py(py, &r)
}

/// Escape radius, sphere bound and boundary map of a proper map.
#[pyfunction]
#[pyo3(signature = (f, window=50.0, radii=vec![1.0, 2.0, 4.0]))]
fn normalize(py: Python<'_>, f: &PyMapSpec, window: f64, radii: Vec<f64>) -> PyResult<Py<PyAny>> {
    let g = proper(f, window)?;
    let r = py.detach(|| core_normalize(&g, &NormalizeOptions { window, radii }, &Config::default().tol)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("escape_radius", r.escape_radius)?;
    d.set_item("sphere_bound", r.sphere_bound)?;
    d.set_item("g1_ball_max_norm", r.g1_ball_max_norm)?;
    d.set_item("boundary_map", PySphereMapSpec { inner: r.boundary_map })?;
    d.set_item("certificates", to_py(py, &r.track.certificates)?)?;
    Ok(d.into_any().unbind())
}

#[pyfunction]
#[pyo3(signature = (signs, positions=None))]
fn realizable_1d(py: Python<'_>, signs: &str, positions: Option<Vec<f64>>) -> PyResult<Py<PyAny>> {
    let s = parse_signs(signs).map_err(err)?;
    let r = match positions {
        Some(p) => realizable_1d_at(&p, &s),
        None => core_realizable_1d(&s),
    }
    .map_err(err)?;
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (items=None, fiber_step=None, seed=None))]
fn counterexample_suite(
    py: Python<'_>,
    items: Option<Vec<String>>,
    fiber_step: Option<f64>,
    seed: Option<u64>,
) -> PyResult<Py<PyAny>> {
    let mut opts = SuiteOptions { fiber_step, ..SuiteOptions::default() };
    if let Some(names) = items {
        opts.items = names
            .iter()
            .map(|n| {
                serde_json::from_value::<SuiteItem>(serde_json::Value::String(n.clone()))
                    .map_err(|_| PyValueError::new_err(format!("unknown suite item `{n}`")))
            })
            .collect::<PyResult<_>>()?;
    }
    let r = py.detach(|| core_suite(&opts, &config(seed))).map_err(err)?;
    to_py(py, &r)
}

#[pymodule]
pub fn properclass_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("ComputationError", m.py().get_type::<ComputationError>())?;
    m.add_class::<PyMapSpec>()?;
    m.add_class::<PySphereMapSpec>()?;
    m.add_function(wrap_pyfunction!(certify_proper, m)?)?;
    m.add_function(wrap_pyfunction!(group_lookup, m)?)?;
    m.add_function(wrap_pyfunction!(stability_check, m)?)?;
    m.add_function(wrap_pyfunction!(winding_number, m)?)?;
    m.add_function(wrap_pyfunction!(degree_s2, m)?)?;
    m.add_function(wrap_pyfunction!(hopf_invariant, m)?)?;
    m.add_function(wrap_pyfunction!(end_signs, m)?)?;
    m.add_function(wrap_pyfunction!(proper_class, m)?)?;
    m.add_function(wrap_pyfunction!(sphere_invariant, m)?)?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(realizable_1d, m)?)?;
    m.add_function(wrap_pyfunction!(counterexample_suite, m)?)?;
    Ok(())
}
