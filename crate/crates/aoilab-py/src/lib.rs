//! Python bindings: a thin shell over the core crate. Exact rationals
//! cross the boundary as "p/q" strings so nothing is lost to floats;
//! callers can hand them to `fractions.Fraction` directly.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use aoilab::aoi::average_aoi;
use aoilab::engine::simulate;
use aoilab::generators::{generate, GeneratorSpec};
use aoilab::harness;
use aoilab::io;
use aoilab::oracle;
use aoilab::policies::{policy_for, PolicyId};
use aoilab::ratio::Ratio;
use std::str::FromStr;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(frozen, name = "Instance")]
struct PyInstance {
    inner: aoilab::model::Instance,
}

#[pymethods]
impl PyInstance {
    /// Parse the canonical instance text format.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(PyInstance {
            inner: io::parse_instance(text).map_err(value_err)?,
        })
    }

    /// The six-update reference sequence with horizon 2.
    #[staticmethod]
    fn example3() -> Self {
        PyInstance {
            inner: aoilab::generators::example3(),
        }
    }

    #[staticmethod]
    #[pyo3(signature = (n, g_max, s_max, seed))]
    fn random_uniform(n: usize, g_max: &str, s_max: &str, seed: u64) -> PyResult<Self> {
        let spec = GeneratorSpec::RandomUniform {
            n,
            g_max: Ratio::from_str(g_max).map_err(value_err)?,
            s_max: Ratio::from_str(s_max).map_err(value_err)?,
            seed,
        };
        Ok(PyInstance {
            inner: generate(&spec).map_err(value_err)?,
        })
    }

    fn id(&self) -> String {
        io::instance_id(&self.inner)
    }

    fn serialize(&self) -> String {
        io::serialize_instance(&self.inner)
    }

    fn horizon(&self) -> String {
        self.inner.horizon().to_string()
    }

    /// `[(generation, size), ...]` as "p/q" strings.
    fn updates(&self) -> Vec<(String, String)> {
        self.inner
            .updates()
            .iter()
            .map(|u| (u.generation.to_string(), u.size.to_string()))
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Simulation output flattened to strings for Python consumption.
#[pyclass(frozen, name = "RunResult")]
struct PyRunResult {
    #[pyo3(get)]
    policy: String,
    #[pyo3(get)]
    integral: String,
    #[pyo3(get)]
    average: String,
    /// `(update, start, end)` per transmission segment.
    #[pyo3(get)]
    segments: Vec<(usize, String, String)>,
    /// `(update, completion_time)`.
    #[pyo3(get)]
    completions: Vec<(usize, String)>,
}

fn run_result(
    policy: String,
    trace: &aoilab::model::Trace,
    instance: &aoilab::model::Instance,
) -> PyResult<PyRunResult> {
    let report = average_aoi(trace, instance).map_err(value_err)?;
    Ok(PyRunResult {
        policy,
        integral: report.integral.to_string(),
        average: report.average.to_string(),
        segments: trace
            .segments
            .iter()
            .map(|s| (s.update_index, s.start.to_string(), s.end.to_string()))
            .collect(),
        completions: trace
            .completions
            .iter()
            .map(|(i, t)| (*i, t.to_string()))
            .collect(),
    })
}

/// Simulate one policy ("srpt-plus", "srpt-l", "srpt", "fcfs",
/// "non-preemptive-latest") on an instance.
#[pyfunction]
fn run(instance: &PyInstance, policy: &str) -> PyResult<PyRunResult> {
    let id = PolicyId::from_str(policy).map_err(value_err)?;
    let trace = simulate(&instance.inner, policy_for(id).as_ref()).map_err(value_err)?;
    run_result(policy.to_string(), &trace, &instance.inner)
}

/// Offline optimum by chain enumeration; returns the served chain too.
#[pyfunction]
#[pyo3(signature = (instance, cap = 20))]
fn optimal(instance: &PyInstance, cap: usize) -> PyResult<(Vec<usize>, PyRunResult)> {
    let opt = oracle::optimal(&instance.inner, cap).map_err(value_err)?;
    let result = run_result("oracle".into(), &opt.best_trace, &instance.inner)?;
    Ok((opt.best_chain.0, result))
}

/// Exact policy/optimal ratio as a "p/q" string.
#[pyfunction]
#[pyo3(signature = (instance, policy, cap = 20))]
fn competitive_ratio(instance: &PyInstance, policy: &str, cap: usize) -> PyResult<String> {
    let id = PolicyId::from_str(policy).map_err(value_err)?;
    Ok(harness::competitive_ratio(&instance.inner, id, cap)
        .map_err(value_err)?
        .to_string())
}

/// All structural property checks; returns (check_id, passed, skipped).
#[pyfunction]
#[pyo3(signature = (instance, cap = 20))]
fn check(instance: &PyInstance, cap: usize) -> PyResult<Vec<(String, bool, bool)>> {
    Ok(harness::run_all_checks(&instance.inner, cap)
        .map_err(value_err)?
        .into_iter()
        .map(|r| (r.check_id, r.passed, r.skipped))
        .collect())
}

#[pymodule]
fn aoilab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<PyRunResult>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(optimal, m)?)?;
    m.add_function(wrap_pyfunction!(competitive_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    Ok(())
}
