//! Python bindings: networks, partitioning, feasibility sampling, topology
//! checks and control episodes. Structured results cross the boundary as
//! Python dicts decoded from JSON.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use dnmg::fixtures;
use dnmg::lindistflow::Fidelity;
use dnmg::mfrt::{run_episode, ControllerConfig, EpisodeSchedule};
use dnmg::netmodel;
use dnmg::rpop::{
    cutting_plane, robust_feasibility_sample, verify_topology_under, Contingency, MasterSolution,
    RpopConfig,
};

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, v: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(runtime_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: serde::de::DeserializeOwned>(py: Python<'_>, obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = if let Ok(s) = obj.extract::<String>() {
        s
    } else {
        py.import("json")?
            .call_method1("dumps", (obj,))?
            .extract()?
    };
    serde_json::from_str(&text).map_err(value_err)
}

/// A validated distribution network with its block structure.
#[pyclass(name = "Network", module = "dnmg_py", frozen)]
struct PyNetwork {
    inner: netmodel::Network,
}

#[pymethods]
impl PyNetwork {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: netmodel::Network::from_json(text).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path).map_err(value_err)?;
        Self::from_json(&text)
    }

    /// Bundled 12-bus example.
    #[staticmethod]
    fn toybay() -> Self {
        Self {
            inner: fixtures::toybay(),
        }
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn blocks(&self) -> Vec<String> {
        self.inner.blocks.iter().map(|b| b.id.clone()).collect()
    }

    #[getter]
    fn switches(&self) -> Vec<String> {
        self.inner.switches.iter().map(|s| s.id.clone()).collect()
    }

    #[getter]
    fn generators(&self) -> Vec<String> {
        self.inner.generators.iter().map(|g| g.id.clone()).collect()
    }

    #[getter]
    fn buses(&self) -> Vec<String> {
        self.inner.buses.iter().map(|b| b.id.clone()).collect()
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn __repr__(&self) -> String {
        format!(
            "Network({:?}: {} buses, {} blocks, {} switches)",
            self.inner.name,
            self.inner.buses.len(),
            self.inner.blocks.len(),
            self.inner.switches.len()
        )
    }
}

fn contingency(net: &netmodel::Network, items: &[String]) -> PyResult<Contingency> {
    let mut c = Contingency::default();
    for i in items {
        c.parse_item(net, i).map_err(value_err)?;
    }
    Ok(c)
}

/// Robust partitioning; returns the result as a dict.
#[pyfunction]
#[pyo3(signature = (network, uncertainty=None, contingency=Vec::new(), max_iterations=50))]
fn partition<'py>(
    py: Python<'py>,
    network: &PyNetwork,
    uncertainty: Option<f64>,
    contingency: Vec<String>,
    max_iterations: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let net = &network.inner;
    let config = RpopConfig {
        uncertainty,
        max_iterations,
        contingency: self::contingency(net, &contingency)?,
        ..Default::default()
    };
    let res = py
        .detach(|| cutting_plane(net, &config))
        .map_err(runtime_err)?;
    to_py(py, &res)
}

/// Violations of a first-stage solution, as strings.
#[pyfunction]
#[pyo3(signature = (network, solution, contingency=Vec::new()))]
fn verify(
    py: Python<'_>,
    network: &PyNetwork,
    solution: &Bound<'_, PyAny>,
    contingency: Vec<String>,
) -> PyResult<Vec<String>> {
    let sol: MasterSolution = from_py(py, solution)?;
    let cont = self::contingency(&network.inner, &contingency)?;
    Ok(verify_topology_under(&network.inner, &sol, &cont)
        .iter()
        .map(|v| v.to_string())
        .collect())
}

/// Monte Carlo feasibility of a solution under random loads.
#[pyfunction]
#[pyo3(signature = (network, solution, level, samples=1000, seed=0, fidelity="linear", clustered=true))]
#[allow(clippy::too_many_arguments)]
fn check<'py>(
    py: Python<'py>,
    network: &PyNetwork,
    solution: &Bound<'py, PyAny>,
    level: f64,
    samples: usize,
    seed: u64,
    fidelity: &str,
    clustered: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let sol: MasterSolution = from_py(py, solution)?;
    let f: Fidelity = fidelity.parse().map_err(value_err)?;
    let net = &network.inner;
    let rep = py
        .detach(|| {
            robust_feasibility_sample(
                net,
                &sol,
                level,
                clustered,
                samples,
                seed,
                f,
                &RpopConfig::default(),
            )
        })
        .map_err(value_err)?;
    to_py(py, &rep)
}

/// Runs a control episode and returns the trajectory CSV.
#[pyfunction]
#[pyo3(signature = (network, schedule, controller=None, seed=0))]
fn simulate(
    py: Python<'_>,
    network: &PyNetwork,
    schedule: &Bound<'_, PyAny>,
    controller: Option<&Bound<'_, PyAny>>,
    seed: u64,
) -> PyResult<String> {
    let schedule: EpisodeSchedule = from_py(py, schedule)?;
    let cfg: ControllerConfig = match controller {
        Some(c) => from_py(py, c)?,
        None => ControllerConfig::default(),
    };
    let net = &network.inner;
    let log = py
        .detach(|| run_episode(net, &schedule, &cfg, seed))
        .map_err(value_err)?;
    log.to_csv(net).map_err(runtime_err)
}

/// Default controller settings as a dict.
#[pyfunction]
fn controller_defaults(py: Python<'_>) -> PyResult<Bound<'_, PyAny>> {
    to_py(py, &ControllerConfig::default())
}

#[pymodule]
fn dnmg_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNetwork>()?;
    m.add_function(wrap_pyfunction!(partition, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(controller_defaults, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
