use aaflow_core::algebra;
use aaflow_core::connections;
use aaflow_core::flow::{self, FlowConfig};
use aaflow_core::hull_strominger;
use aaflow_core::verify::{self, VerifyOptions};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyModule};
use serde::Serialize;

/// Round-trips a serde value through Python's `json.loads`.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    PyModule::import(py, "json")?.call_method1("loads", (text,))
}

fn flow_config(py: Python<'_>, kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<FlowConfig> {
    let Some(kwargs) = kwargs else {
        return Ok(FlowConfig::default());
    };
    let text: String = PyModule::import(py, "json")?
        .call_method1("dumps", (kwargs,))?
        .extract()?;
    let cfg: FlowConfig =
        serde_json::from_str(&text).map_err(|e| PyValueError::new_err(format!("invalid flow config: {e}")))?;
    cfg.validate().map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(cfg)
}

/// The six free parameters of a balanced structure with trivial canonical bundle.
#[pyclass(name = "BalancedParams", module = "aaflow", from_py_object)]
#[derive(Clone, Copy)]
struct PyBalancedParams {
    inner: algebra::BalancedParams,
}

#[pymethods]
impl PyBalancedParams {
    #[new]
    #[pyo3(signature = (a22=0.0, a23=0.0, a24=0.0, a25=0.0, a32=0.0, a35=0.0))]
    fn new(a22: f64, a23: f64, a24: f64, a25: f64, a32: f64, a35: f64) -> PyResult<Self> {
        let inner = algebra::BalancedParams::new(a22, a23, a24, a25, a32, a35);
        if !inner.is_finite() {
            return Err(PyValueError::new_err("parameters must be finite"));
        }
        Ok(Self { inner })
    }

    #[getter]
    fn a22(&self) -> f64 {
        self.inner.a22
    }
    #[getter]
    fn a23(&self) -> f64 {
        self.inner.a23
    }
    #[getter]
    fn a24(&self) -> f64 {
        self.inner.a24
    }
    #[getter]
    fn a25(&self) -> f64 {
        self.inner.a25
    }
    #[getter]
    fn a32(&self) -> f64 {
        self.inner.a32
    }
    #[getter]
    fn a35(&self) -> f64 {
        self.inner.a35
    }

    /// The 4x4 matrix `A` as nested lists.
    fn matrix(&self) -> Vec<Vec<f64>> {
        let m = self.inner.matrix();
        (0..4).map(|i| (0..4).map(|j| m[(i, j)]).collect()).collect()
    }

    fn norm_aplus_sq(&self) -> f64 {
        self.inner.norm_aplus_sq()
    }

    fn is_kahler(&self) -> bool {
        self.inner.kahler_check()
    }

    fn to_list(&self) -> Vec<f64> {
        self.inner.to_array().to_vec()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "BalancedParams(a22={}, a23={}, a24={}, a25={}, a32={}, a35={})",
            p.a22, p.a23, p.a24, p.a25, p.a32, p.a35
        )
    }
}

/// Classification against the Hull–Strominger system as a dict.
#[pyfunction]
fn classify<'py>(py: Python<'py>, p: PyBalancedParams, tau: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &hull_strominger::classify(&p.inner, tau))
}

#[pyfunction]
fn proportionality_k(p: PyBalancedParams, tau: f64) -> f64 {
    connections::proportionality_K(&p.inner, tau)
}

/// One of `flat_instanton`, `not_instanton`, `kahler_instanton`.
#[pyfunction]
fn instanton_check(py: Python<'_>, p: PyBalancedParams, tau: f64) -> PyResult<String> {
    to_py(py, &connections::instanton_check(&p.inner, tau))?.extract()
}

/// Parses structure JSON and reports the geometric predicates.
#[pyfunction]
fn analyze<'py>(py: Python<'py>, structure_json: &str, tau: f64) -> PyResult<Bound<'py, PyAny>> {
    let spec = algebra::parse_structure_json(structure_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let s = spec.structure();
    let params = spec.balanced_params();
    let out = serde_json::json!({
        "balanced": s.balanced_check(),
        "trivial_canonical": s.canonical_trivial_check(),
        "integrability_residual": s.integrability_residual(),
        "balanced_params": params,
        "report": params.map(|p| hull_strominger::classify(&p, tau)),
    });
    to_py(py, &out)
}

#[pyfunction]
#[pyo3(signature = (p, **kwargs))]
fn slope_f(py: Python<'_>, p: PyBalancedParams, kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<f64> {
    Ok(flow::slope_f(&p.inner, &flow_config(py, kwargs)?))
}

/// Right-hand side of the bracket flow, as a BalancedParams tangent vector.
#[pyfunction]
#[pyo3(signature = (p, **kwargs))]
fn bracket_rhs(py: Python<'_>, p: PyBalancedParams, kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<PyBalancedParams> {
    Ok(PyBalancedParams {
        inner: flow::bracket_rhs(&p.inner, &flow_config(py, kwargs)?),
    })
}

/// Integrates the bracket flow. Keyword arguments are flow config fields
/// (`tau`, `alpha_prime`, `t_end`, `rel_tol`, `sampling`, ...).
#[pyfunction]
#[pyo3(signature = (p, **kwargs))]
fn integrate_bracket_flow<'py>(
    py: Python<'py>,
    p: PyBalancedParams,
    kwargs: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = flow_config(py, kwargs)?;
    let run = py
        .detach(|| flow::integrate_bracket_flow(&p.inner, &cfg))
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    let out = serde_json::json!({
        "status": run.status,
        "success": run.status.is_success(),
        "outside_hypotheses": run.outside_hypotheses,
        "initial_f": run.initial_f,
        "accepted_steps": run.accepted_steps,
        "rejected_steps": run.rejected_steps,
        "failure": run.failure,
        "samples": run.samples,
    });
    to_py(py, &out)
}

/// Sampled bracket-flow trajectory as deterministic CSV text.
#[pyfunction]
#[pyo3(signature = (p, **kwargs))]
fn trajectory_csv(py: Python<'_>, p: PyBalancedParams, kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<String> {
    let cfg = flow_config(py, kwargs)?;
    let run = py
        .detach(|| flow::integrate_bracket_flow(&p.inner, &cfg))
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(flow::trajectory_csv(&run.samples))
}

/// Metric flow on the nilpotent example against the closed form and the ODE solution.
#[pyfunction]
#[pyo3(signature = (t_end=10.0, samples=101))]
fn run_example<'py>(py: Python<'py>, t_end: f64, samples: usize) -> PyResult<Bound<'py, PyAny>> {
    let rep = py
        .detach(|| flow::run_example(t_end, samples))
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    to_py(py, &rep)
}

#[pyfunction]
#[pyo3(signature = (seed=0, draws=1000))]
fn run_verify<'py>(py: Python<'py>, seed: u64, draws: usize) -> PyResult<Bound<'py, PyAny>> {
    let opts = VerifyOptions {
        seed,
        draws,
        ..VerifyOptions::default()
    };
    let rep = py.detach(|| verify::run_suite(&opts));
    to_py(py, &rep)
}

#[pymodule]
fn aaflow(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBalancedParams>()?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(proportionality_k, m)?)?;
    m.add_function(wrap_pyfunction!(instanton_check, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(slope_f, m)?)?;
    m.add_function(wrap_pyfunction!(bracket_rhs, m)?)?;
    m.add_function(wrap_pyfunction!(integrate_bracket_flow, m)?)?;
    m.add_function(wrap_pyfunction!(trajectory_csv, m)?)?;
    m.add_function(wrap_pyfunction!(run_example, m)?)?;
    m.add_function(wrap_pyfunction!(run_verify, m)?)?;
    Ok(())
}
