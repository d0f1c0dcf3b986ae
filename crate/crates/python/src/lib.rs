use num_complex::Complex64;
use pyo3::exceptions::{PyArithmeticError, PyIndexError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyFloat, PyInt, PyList, PyString, PyTuple};
use serde_json::Value;

use levygauge::algebra::CMat;
use levygauge::geometry::{catalog, curvature, Connection, Metric, MetricKind};
use levygauge::harness::{check_table, cmd_trace_convergence, cmd_verify, CampaignConfig, CheckId};
use levygauge::levy::{levy_divergence_b, levy_operator_cesaro_series, levy_operator_on_transport, Basis, TraceConfig, TraceMode};
use levygauge::paths::{random_curve, Curve, Smoothness};
use levygauge::transport::{holonomy, PathData, TransportTable};
use levygauge::Error;

type Matrix = Vec<Vec<Complex64>>;

fn err(e: Error) -> PyErr {
    match e {
        Error::NonConvergence(_) | Error::Drift { .. } => PyArithmeticError::new_err(e.to_string()),
        Error::IndexOutOfRange { .. } => PyIndexError::new_err(e.to_string()),
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn matrix(m: &CMat) -> Matrix {
    let n = m.dim();
    (0..n).map(|i| (0..n).map(|j| m.get(i, j)).collect()).collect()
}

fn json_value(obj: &Bound<'_, PyAny>) -> PyResult<Value> {
    if obj.is_none() {
        Ok(Value::Null)
    } else if obj.is_instance_of::<PyBool>() {
        Ok(Value::Bool(obj.extract()?))
    } else if obj.is_instance_of::<PyInt>() {
        Ok(Value::from(obj.extract::<i64>()?))
    } else if obj.is_instance_of::<PyFloat>() {
        Ok(Value::from(obj.extract::<f64>()?))
    } else if obj.is_instance_of::<PyString>() {
        Ok(Value::String(obj.extract()?))
    } else if obj.is_instance_of::<PyList>() || obj.is_instance_of::<PyTuple>() {
        obj.try_iter()?.map(|item| json_value(&item?)).collect::<PyResult<Vec<_>>>().map(Value::Array)
    } else {
        Err(PyValueError::new_err(format!("unsupported parameter value {obj}")))
    }
}

fn metric_kind(name: &str) -> PyResult<MetricKind> {
    serde_json::from_value(Value::String(name.into())).map_err(|_| PyValueError::new_err(format!("unknown metric `{name}`")))
}

fn basis(name: &str) -> PyResult<Basis> {
    serde_json::from_value(Value::String(name.into())).map_err(|_| PyValueError::new_err(format!("unknown basis `{name}`")))
}

fn check_point(conn: &Connection, x: &[f64]) -> PyResult<()> {
    if x.len() != conn.dim() {
        return Err(err(Error::DimensionMismatch {
            expected: conn.dim(),
            got: x.len(),
        }));
    }
    Ok(())
}

/// A catalog connection, e.g. `Connection("bpst_instanton", rho=1.0)`.
#[pyclass(name = "Connection", module = "pylevygauge", frozen)]
struct PyConnection {
    inner: Connection,
}

#[pymethods]
impl PyConnection {
    #[new]
    #[pyo3(signature = (name, **params))]
    fn new(name: &str, params: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut map = serde_json::Map::new();
        if let Some(p) = params {
            for (k, v) in p.iter() {
                map.insert(k.extract()?, json_value(&v)?);
            }
        }
        let inner = catalog(name, &Value::Object(map)).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn fiber(&self) -> usize {
        self.inner.fiber()
    }

    /// `A_μ(x)` for every μ.
    fn potential(&self, x: Vec<f64>) -> PyResult<Vec<Matrix>> {
        check_point(&self.inner, &x)?;
        Ok(self.inner.potential(&x).iter().map(matrix).collect())
    }

    /// `F_{μν}(x)` as a nested `[μ][ν]` list.
    fn curvature(&self, x: Vec<f64>) -> PyResult<Vec<Vec<Matrix>>> {
        check_point(&self.inner, &x)?;
        let d = self.inner.dim();
        let f = curvature(&self.inner, &x);
        Ok(f.chunks(d).map(|row| row.iter().map(matrix).collect()).collect())
    }

    /// Whether the connection is a Yang–Mills vacuum for `metric`.
    fn is_vacuum(&self, metric: &str) -> PyResult<bool> {
        Ok(self.inner.is_vacuum(metric_kind(metric)?))
    }

    fn __repr__(&self) -> String {
        format!("Connection({:?}, dim={}, fiber={})", self.inner.name(), self.inner.dim(), self.inner.fiber())
    }
}

/// A curve starting at the origin, sampled on `cells` grid cells.
#[pyclass(name = "Curve", module = "pylevygauge", frozen)]
struct PyCurve {
    inner: Curve,
}

#[pymethods]
impl PyCurve {
    /// Seeded random Fourier curve.
    #[staticmethod]
    #[pyo3(signature = (seed, cells = 1024, dim = 4, amplitude = 0.5, modes = 3))]
    fn random(seed: u64, cells: usize, dim: usize, amplitude: f64, modes: usize) -> PyResult<Self> {
        let inner = random_curve(seed, Smoothness::Fourier(modes), cells, dim, amplitude).map_err(err)?;
        Ok(Self { inner })
    }

    /// Straight segment from the origin to `direction`.
    #[staticmethod]
    #[pyo3(signature = (direction, cells = 1024))]
    fn linear(direction: Vec<f64>, cells: usize) -> PyResult<Self> {
        Ok(Self {
            inner: Curve::linear(&direction, cells).map_err(err)?,
        })
    }

    /// Curve through the given grid nodes (the first must be the origin).
    #[staticmethod]
    fn from_nodes(nodes: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self {
            inner: Curve::from_nodes(&nodes).map_err(err)?,
        })
    }

    #[getter]
    fn cells(&self) -> usize {
        self.inner.cells()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn endpoint(&self) -> Vec<f64> {
        self.inner.endpoint().to_vec()
    }

    fn nodes(&self) -> Vec<Vec<f64>> {
        (0..=self.inner.cells()).map(|i| self.inner.node(i).to_vec()).collect()
    }

    fn resampled(&self, cells: usize) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.resampled(cells).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!("Curve(dim={}, cells={})", self.inner.dim(), self.inner.cells())
    }
}

/// Parallel transport `U_{1,0}` along the curve.
#[pyfunction(name = "holonomy")]
fn py_holonomy(conn: &PyConnection, curve: &PyCurve) -> PyResult<Matrix> {
    holonomy(&conn.inner, &curve.inner).map(|u| matrix(&u)).map_err(err)
}

/// Largest `‖U†U − I‖` over the transport table.
#[pyfunction]
fn unitarity_drift(conn: &PyConnection, curve: &PyCurve) -> PyResult<f64> {
    TransportTable::with_drift_bound(&conn.inner, &curve.inner, f64::INFINITY)
        .map(|t| t.drift())
        .map_err(err)
}

/// Lévy operator of transport, by the integral trace or as the
/// extrapolated Cesàro limit over `n_max` basis directions.
#[pyfunction]
#[pyo3(signature = (conn, curve, metric = "euclidean", mode = "integral", basis_name = "sin", n_max = 256))]
fn levy_operator(conn: &PyConnection, curve: &PyCurve, metric: &str, mode: &str, basis_name: &str, n_max: usize) -> PyResult<Matrix> {
    let kind = metric_kind(metric)?;
    let value = match mode {
        "integral" => {
            let data = PathData::new(&conn.inner, &curve.inner).map_err(err)?;
            levy_operator_on_transport(&data, &Metric::new(kind, conn.inner.dim()), &TraceMode::Integral).map_err(err)?
        }
        "cesaro" => {
            let cfg = TraceConfig::new(basis(basis_name)?, kind, n_max);
            cfg.validate().map_err(err)?;
            levy_operator_cesaro_series(&conn.inner, &curve.inner, &cfg).map_err(err)?.limit
        }
        other => return Err(PyValueError::new_err(format!("unknown mode `{other}` (integral or cesaro)"))),
    };
    Ok(matrix(&value))
}

/// Lévy divergence of the one-form `B = U_{0,1}∂U_{1,0}` (integral trace).
#[pyfunction(name = "levy_divergence_b")]
#[pyo3(signature = (conn, curve, metric = "euclidean"))]
fn py_levy_divergence_b(conn: &PyConnection, curve: &PyCurve, metric: &str) -> PyResult<Matrix> {
    let data = PathData::new(&conn.inner, &curve.inner).map_err(err)?;
    let m = Metric::new(metric_kind(metric)?, conn.inner.dim());
    levy_divergence_b(&data, &m, &TraceMode::Integral).map(|v| matrix(&v)).map_err(err)
}

/// Runs a campaign given as TOML text; returns `(passed, report_json)`.
#[pyfunction]
fn verify(config: &str) -> PyResult<(bool, String)> {
    let cfg = CampaignConfig::from_toml(config).map_err(err)?;
    let report = cmd_verify(&cfg).map_err(err)?;
    Ok((report.passed(), serde_json::to_string_pretty(&report).map_err(|e| err(e.into()))?))
}

/// Like `verify`, reading the campaign from a TOML or JSON file.
#[pyfunction]
fn verify_file(path: std::path::PathBuf) -> PyResult<(bool, String)> {
    let cfg = CampaignConfig::load(&path).map_err(err)?;
    let report = cmd_verify(&cfg).map_err(err)?;
    Ok((report.passed(), serde_json::to_string_pretty(&report).map_err(|e| err(e.into()))?))
}

/// Cesàro convergence on the synthetic kernel triple of a campaign.
#[pyfunction]
fn trace_convergence(config: &str) -> PyResult<(bool, String)> {
    let cfg = CampaignConfig::from_toml(config).map_err(err)?;
    let report = cmd_trace_convergence(&cfg).map_err(err)?;
    Ok((report.passed(), serde_json::to_string_pretty(&report).map_err(|e| err(e.into()))?))
}

/// `(id, statement, default tolerance)` for every check.
#[pyfunction]
fn checks() -> Vec<(String, String, f64)> {
    CheckId::ALL
        .iter()
        .map(|c| (c.as_str().to_string(), c.tag().to_string(), c.default_tolerance()))
        .collect()
}

#[pymodule]
fn pylevygauge(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConnection>()?;
    m.add_class::<PyCurve>()?;
    m.add_function(wrap_pyfunction!(py_holonomy, m)?)?;
    m.add_function(wrap_pyfunction!(unitarity_drift, m)?)?;
    m.add_function(wrap_pyfunction!(levy_operator, m)?)?;
    m.add_function(wrap_pyfunction!(py_levy_divergence_b, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(verify_file, m)?)?;
    m.add_function(wrap_pyfunction!(trace_convergence, m)?)?;
    m.add_function(wrap_pyfunction!(checks, m)?)?;
    m.add("CHECK_TABLE", check_table())?;
    Ok(())
}
