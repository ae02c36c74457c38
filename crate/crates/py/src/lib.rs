//! Python module `berry_holonomy`.
//!
//! Complex numbers cross as Python `complex`, matrices as nested lists of
//! `complex` (row-major, ready for `numpy.array`), reports as dicts.

#![allow(clippy::useless_conversion)]

use berry_cli::commands::{cmd_verify, irreducibility};
use berry_cli::config::{default_centers, settings};
use berry_cli::CliError;
use berry_core::connection::{berry_phase_diagonal, connection_closed as closed_connection, ClosedForm};
use berry_core::curvature::{
    curvature_closed as closed_curvature, curvature_span_dimension as span_dimension, f_squared as closed_f_squared,
    f_squared_from_wedge, Component, CurvatureForm,
};
use berry_core::holonomy::{holonomy_algebra_dimension as algebra_dimension, parallel_transport};
use berry_core::oracle::{
    connection_numeric as numeric_connection, curvature_numeric as numeric_curvature, DifferentiationPlan,
};
use berry_core::path::{LoopPath, Segment};
use berry_core::{CMatrix, Error as CoreError, ParameterPoint, TruncatedSpace, C64};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

pub type Matrix = Vec<Vec<C64>>;

pub fn rows(x: &CMatrix) -> Matrix {
    (0..x.nrows())
        .map(|i| (0..x.ncols()).map(|j| x[(i, j)]).collect())
        .collect()
}

fn core_err(e: CoreError) -> PyErr {
    match e {
        CoreError::NotStabilized { .. } | CoreError::NotAntiHermitian { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn cli_err(e: CliError) -> PyErr {
    match e {
        CliError::Core(inner) => core_err(inner),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn plan(h: f64) -> PyResult<DifferentiationPlan> {
    DifferentiationPlan::new(h).map_err(core_err)
}

fn space(dim: usize) -> PyResult<TruncatedSpace> {
    TruncatedSpace::new(dim).map_err(core_err)
}

fn to_py(py: Python<'_>, v: &Value) -> PyResult<PyObject> {
    Ok(match v {
        Value::Null => py.None(),
        Value::Bool(b) => b.into_py(py),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_py(py),
            None => n.as_f64().unwrap_or(f64::NAN).into_py(py),
        },
        Value::String(s) => s.into_py(py),
        Value::Array(items) => {
            let list = PyList::empty_bound(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            list.into_py(py)
        }
        Value::Object(map) => {
            let dict = PyDict::new_bound(py);
            for (k, item) in map {
                dict.set_item(k, to_py(py, item)?)?;
            }
            dict.into_py(py)
        }
    })
}

/// A point `(λ, μ)` of the parameter space.
#[pyclass(name = "ParameterPoint", module = "berry_holonomy")]
#[derive(Clone, Copy)]
pub struct PyParameterPoint {
    inner: ParameterPoint,
}

#[pymethods]
impl PyParameterPoint {
    #[new]
    #[pyo3(signature = (lam, mu))]
    fn new(lam: C64, mu: C64) -> PyResult<Self> {
        let inner = ParameterPoint::new(lam, mu).check_finite().map_err(core_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn lam(&self) -> C64 {
        self.inner.lambda
    }

    #[getter]
    fn mu(&self) -> C64 {
        self.inner.mu
    }

    fn distance(&self, other: &PyParameterPoint) -> f64 {
        self.inner.distance(&other.inner)
    }

    fn __repr__(&self) -> String {
        let (l, m) = (self.inner.lambda, self.inner.mu);
        format!("ParameterPoint(lam=({}{:+}j), mu=({}{:+}j))", l.re, l.im, m.re, m.im)
    }
}

/// Six curvature components keyed `C_lambda_mu`, … and the point's `m`.
#[pyclass(name = "Curvature", module = "berry_holonomy")]
pub struct PyCurvature {
    inner: CurvatureForm,
}

#[pymethods]
impl PyCurvature {
    #[getter]
    fn m(&self) -> usize {
        self.inner.m
    }

    fn component(&self, label: &str) -> PyResult<Matrix> {
        Component::ALL
            .iter()
            .find(|c| c.label() == label)
            .map(|&c| rows(self.inner.component(c)))
            .ok_or_else(|| PyValueError::new_err(format!("unknown component '{label}'")))
    }

    fn labels(&self) -> Vec<&'static str> {
        Component::ALL.map(|c| c.label()).to_vec()
    }

    fn hermiticity_defect(&self) -> f64 {
        self.inner.hermiticity_defect()
    }

    /// Coefficient of `dλ∧dμ∧dλ̄∧dμ̄` in `F∧F`.
    fn wedge_square(&self) -> Matrix {
        rows(&f_squared_from_wedge(&self.inner).matrix)
    }

    fn max_abs_diff(&self, other: &PyCurvature) -> f64 {
        self.inner.max_abs_diff(&other.inner)
    }
}

/// `(A_λ, A_μ)` in closed form.
#[pyfunction]
#[pyo3(signature = (lam, mu, m))]
fn connection_closed(lam: C64, mu: C64, m: usize) -> PyResult<(Matrix, Matrix)> {
    let c = closed_connection(ParameterPoint::new(lam, mu), m).map_err(core_err)?;
    Ok((rows(&c.a_lambda), rows(&c.a_mu)))
}

/// `(A_λ, A_μ, estimated_error)` by finite differences on a truncated Fock space.
#[pyfunction]
#[pyo3(signature = (lam, mu, m, dim = 128, h = 1e-4))]
fn connection_numeric(lam: C64, mu: C64, m: usize, dim: usize, h: f64) -> PyResult<(Matrix, Matrix, f64)> {
    let o = numeric_connection(ParameterPoint::new(lam, mu), m, space(dim)?, &plan(h)?).map_err(core_err)?;
    Ok((rows(&o.matrices.a_lambda), rows(&o.matrices.a_mu), o.estimated_error))
}

#[pyfunction]
#[pyo3(signature = (lam, mu, m))]
fn curvature_closed(lam: C64, mu: C64, m: usize) -> PyResult<PyCurvature> {
    let inner = closed_curvature(ParameterPoint::new(lam, mu), m).map_err(core_err)?;
    Ok(PyCurvature { inner })
}

#[pyfunction]
#[pyo3(signature = (lam, mu, m, dim = 128, h = 1e-4))]
fn curvature_numeric(lam: C64, mu: C64, m: usize, dim: usize, h: f64) -> PyResult<PyCurvature> {
    let o = numeric_curvature(ParameterPoint::new(lam, mu), m, space(dim)?, &plan(h)?).map_err(core_err)?;
    Ok(PyCurvature { inner: o.form })
}

#[pyfunction]
#[pyo3(signature = (lam, mu, m))]
fn f_squared(lam: C64, mu: C64, m: usize) -> PyResult<Matrix> {
    Ok(rows(
        &closed_f_squared(ParameterPoint::new(lam, mu), m)
            .map_err(core_err)?
            .matrix,
    ))
}

fn lambda_circle(radius: f64, mu: C64, samples: usize) -> PyResult<LoopPath> {
    LoopPath::lambda_circle(radius, mu, samples).map_err(core_err)
}

/// Holonomy of the counter-clockwise λ-circle at fixed μ.
#[pyfunction]
#[pyo3(signature = (radius, mu, m, samples = 4096))]
fn holonomy_lambda_circle(radius: f64, mu: C64, m: usize, samples: usize) -> PyResult<Matrix> {
    let path = lambda_circle(radius, mu, samples)?;
    let r = parallel_transport(&path, &ClosedForm { m }).map_err(core_err)?;
    Ok(rows(&r.w))
}

/// Holonomy of a loop given as a JSON list of segments.
#[pyfunction]
#[pyo3(signature = (segments_json, m, samples = 4096))]
fn holonomy(segments_json: &str, m: usize, samples: usize) -> PyResult<Matrix> {
    let segments: Vec<Segment> =
        serde_json::from_str(segments_json).map_err(|e| PyValueError::new_err(format!("invalid segments: {e}")))?;
    let path = LoopPath::new(segments, samples).map_err(core_err)?;
    closed_connection(ParameterPoint::ORIGIN, m).map_err(core_err)?;
    let r = parallel_transport(&path, &ClosedForm { m }).map_err(core_err)?;
    Ok(rows(&r.w))
}

#[pyfunction]
#[pyo3(signature = (radius, mu, m, samples = 4096))]
fn berry_phases(radius: f64, mu: C64, m: usize, samples: usize) -> PyResult<Vec<f64>> {
    berry_phase_diagonal(&lambda_circle(radius, mu, samples)?, m).map_err(core_err)
}

fn centers_or_default(centers: Option<Vec<PyParameterPoint>>) -> Vec<ParameterPoint> {
    centers.map_or_else(default_centers, |c| c.into_iter().map(|p| p.inner).collect())
}

#[pyfunction]
#[pyo3(signature = (m, centers = None, budget = 16))]
fn holonomy_algebra_dimension(m: usize, centers: Option<Vec<PyParameterPoint>>, budget: usize) -> PyResult<usize> {
    algebra_dimension(&centers_or_default(centers), m, budget).map_err(core_err)
}

#[pyfunction]
#[pyo3(signature = (m, centers = None))]
fn curvature_span_dimension(m: usize, centers: Option<Vec<PyParameterPoint>>) -> PyResult<usize> {
    span_dimension(&centers_or_default(centers), m).map_err(core_err)
}

fn run_config(options: Option<&Bound<'_, PyDict>>) -> PyResult<berry_cli::config::RunConfig> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    if let Some(d) = options {
        for (k, v) in d.iter() {
            pairs.push((k.extract::<String>()?, v.str()?.to_string()));
        }
    }
    let borrowed: Vec<(&str, &str)> = pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
    settings(&borrowed).map_err(cli_err)
}

/// Full verification report as a dict; keys of `options` mirror the CLI flags.
#[pyfunction]
#[pyo3(signature = (**options))]
fn verify(py: Python<'_>, options: Option<&Bound<'_, PyDict>>) -> PyResult<PyObject> {
    let cfg = run_config(options)?;
    let outcome = py.allow_threads(|| cmd_verify(&cfg)).map_err(cli_err)?;
    to_py(py, &outcome.payload)
}

#[pyfunction]
#[pyo3(signature = (**options))]
fn irreducibility_report(py: Python<'_>, options: Option<&Bound<'_, PyDict>>) -> PyResult<PyObject> {
    let cfg = run_config(options)?;
    let report = py
        .allow_threads(|| irreducibility(&cfg, &default_centers()))
        .map_err(cli_err)?;
    let value = serde_json::to_value(report).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    to_py(py, &value)
}

#[pymodule]
fn berry_holonomy(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParameterPoint>()?;
    m.add_class::<PyCurvature>()?;
    m.add_function(wrap_pyfunction!(connection_closed, m)?)?;
    m.add_function(wrap_pyfunction!(connection_numeric, m)?)?;
    m.add_function(wrap_pyfunction!(curvature_closed, m)?)?;
    m.add_function(wrap_pyfunction!(curvature_numeric, m)?)?;
    m.add_function(wrap_pyfunction!(f_squared, m)?)?;
    m.add_function(wrap_pyfunction!(holonomy_lambda_circle, m)?)?;
    m.add_function(wrap_pyfunction!(holonomy, m)?)?;
    m.add_function(wrap_pyfunction!(berry_phases, m)?)?;
    m.add_function(wrap_pyfunction!(holonomy_algebra_dimension, m)?)?;
    m.add_function(wrap_pyfunction!(curvature_span_dimension, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(irreducibility_report, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
