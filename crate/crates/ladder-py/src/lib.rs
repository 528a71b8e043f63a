//! Python bindings: thin wrappers over the core solver, filter, adoption,
//! and simulator. Structured inputs/outputs cross the boundary as JSON-shaped
//! dicts to keep the surface small.

use ladder_core::adoption;
use ladder_core::belief::{self, BeliefState};
use ladder_core::ladder;
use ladder_core::model::{benchmark_config as bench_cfg, ModelParams, ScenarioConfig};
use ladder_core::sim;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

fn json_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Py<PyAny>> {
    Ok(match v {
        Value::Null => py.None(),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().unbind().into(),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_pyobject(py)?.unbind().into()
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.unbind().into()
            }
        }
        Value::String(s) => s.into_pyobject(py)?.unbind().into(),
        Value::Array(xs) => {
            let list = PyList::empty(py);
            for x in xs {
                list.append(json_to_py(py, x)?)?;
            }
            list.unbind().into()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, x) in map {
                dict.set_item(k, json_to_py(py, x)?)?;
            }
            dict.unbind().into()
        }
    })
}

fn to_py_dict<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let v = serde_json::to_value(value)
        .map_err(|e| PyRuntimeError::new_err(format!("serialization failed: {e}")))?;
    json_to_py(py, &v)
}

fn params_from_json(s: &str) -> PyResult<ModelParams> {
    serde_json::from_str(s).map_err(|e| PyValueError::new_err(format!("bad params JSON: {e}")))
}

fn config_from_json(s: &str) -> PyResult<ScenarioConfig> {
    serde_json::from_str(s).map_err(|e| PyValueError::new_err(format!("bad config JSON: {e}")))
}

/// (eta_plus, eta_minus) of the homogeneous inaction ODE.
#[pyfunction]
fn characteristic_roots(mu: f64, sigma: f64, r: f64) -> (f64, f64) {
    ladder::characteristic_roots(mu, sigma, r)
}

/// Solve the two-reset free-boundary system. `params_json` is a JSON object
/// with the ModelParams fields; returns the solution as a dict.
#[pyfunction]
fn solve_ladder(py: Python<'_>, params_json: &str) -> PyResult<Py<PyAny>> {
    let params = params_from_json(params_json)?;
    let sol = ladder::solve_ladder(&params, None, 1e-12, 200)
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    to_py_dict(py, &sol)
}

/// Grid QVI verification of a fresh solve: ODE residual, dominance margin,
/// and the impulse-choice indifference gap.
#[pyfunction]
#[pyo3(signature = (params_json, grid_n = 10_000, tol = 1e-8))]
fn qvi_check(py: Python<'_>, params_json: &str, grid_n: usize, tol: f64) -> PyResult<Py<PyAny>> {
    let params = params_from_json(params_json)?;
    let sol = ladder::solve_ladder(&params, None, 1e-12, 200)
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    to_py_dict(py, &ladder::qvi_check(&sol, &params, grid_n, tol))
}

/// Expected first exit time from (b1, b2) started at z0, in closed form.
#[pyfunction]
fn mean_exit_time(params_json: &str, b1: f64, b2: f64, z0: f64) -> PyResult<f64> {
    let params = params_from_json(params_json)?;
    ladder::mean_exit_time(&params, (b1, b2), z0)
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Adoption cutoff for linear surplus S(m) = a m - p.
#[pyfunction]
fn solve_alpha(kappa: f64, m_bar: f64, r: f64, a: f64, p: f64) -> f64 {
    adoption::solve_alpha_linear(kappa, m_bar, r, a, p)
}

/// Buyer value and expected waiting time at belief m given the cutoff.
#[pyfunction]
fn buyer_value(
    m: f64,
    alpha: f64,
    kappa: f64,
    m_bar: f64,
    r: f64,
    s_alpha: f64,
) -> (f64, f64) {
    adoption::buyer_value(m, alpha, kappa, m_bar, r, s_alpha)
}

/// Gaussian publication update of the belief (m, v) on signal y.
#[pyfunction]
fn publication_update(m: f64, v: f64, y: f64, sigma_eps2: f64) -> PyResult<(f64, f64)> {
    let post = belief::publication_update(BeliefState { m, v }, y, sigma_eps2)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok((post.m, post.v))
}

/// Exact mean-reverting drift of the belief over dt with no publications.
#[pyfunction]
fn drift_step(m: f64, v: f64, dt: f64, kappa: f64, m_bar: f64, sigma: f64) -> (f64, f64) {
    let s = belief::drift_step(BeliefState { m, v }, dt, kappa, m_bar, sigma);
    (s.m, s.v)
}

/// Solve the ladder for a full scenario and run the path batch; returns the
/// batch statistics as a dict. `config_json` holds the ScenarioConfig fields.
#[pyfunction]
fn simulate_batch_stats(py: Python<'_>, config_json: &str) -> PyResult<Py<PyAny>> {
    let config = config_from_json(config_json)?;
    let sol = ladder::solve_ladder(&config.params, None, 1e-12, 200)
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let policy = sim::Policy::from_ladder(&sol, None);
    to_py_dict(py, &sim::run_batch(&config, &policy))
}

/// The symmetric quadratic benchmark scenario as a dict (edit and feed back
/// as JSON to the other entry points).
#[pyfunction]
fn benchmark_config(py: Python<'_>) -> PyResult<Py<PyAny>> {
    to_py_dict(py, &bench_cfg())
}

#[pymodule]
fn ladder_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(characteristic_roots, m)?)?;
    m.add_function(wrap_pyfunction!(solve_ladder, m)?)?;
    m.add_function(wrap_pyfunction!(qvi_check, m)?)?;
    m.add_function(wrap_pyfunction!(mean_exit_time, m)?)?;
    m.add_function(wrap_pyfunction!(solve_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(buyer_value, m)?)?;
    m.add_function(wrap_pyfunction!(publication_update, m)?)?;
    m.add_function(wrap_pyfunction!(drift_step, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_batch_stats, m)?)?;
    m.add_function(wrap_pyfunction!(benchmark_config, m)?)?;
    Ok(())
}
