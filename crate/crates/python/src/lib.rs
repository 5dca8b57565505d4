//! Python bindings: drive protocols, sweeps and classification from Python.
//!
//! Reports cross the boundary as JSON strings — decode with `json.loads`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use medwit::mediators::{
    build_bmv_phase, build_cnot_relay, build_nonlocal_demo, MediatorKind,
};
use medwit::protocol::{run, verdict, ProtocolSpec};
use medwit::scenario::{
    execute, parse_scenario, report_to_json, CampaignSpec, ScenarioFile,
};
use medwit::witness::eq4_separability_sweep;

fn to_py_err(err: medwit::Error) -> PyErr {
    if err.is_numerical() {
        PyRuntimeError::new_err(err.to_string())
    } else {
        PyValueError::new_err(err.to_string())
    }
}

/// A staged witness protocol over probes A, B and mediator M.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct Protocol {
    spec: ProtocolSpec,
}

#[pymethods]
impl Protocol {
    /// The CNOT relay: mediated entanglement that fires the witness.
    #[staticmethod]
    fn cnot_relay() -> Self {
        Protocol {
            spec: build_cnot_relay(),
        }
    }

    /// Phase-mediated protocol with basis phases `(φ00, φ01, φ10, φ11)`.
    #[staticmethod]
    fn bmv_phase(phases: (f64, f64, f64, f64)) -> Self {
        Protocol {
            spec: build_bmv_phase([phases.0, phases.1, phases.2, phases.3]),
        }
    }

    /// Direct probe coupling: entanglement without mediation.
    #[staticmethod]
    fn nonlocal_demo() -> Self {
        Protocol {
            spec: build_nonlocal_demo(),
        }
    }

    /// Parse the protocol schema (the `protocol` payload of a scenario).
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let spec: ProtocolSpec =
            serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        spec.validate().map_err(to_py_err)?;
        Ok(Protocol { spec })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.spec)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    /// Execute the protocol and return the witness report as JSON.
    fn run(&self) -> PyResult<String> {
        let trace = run(&self.spec).map_err(to_py_err)?;
        let report = verdict(&trace).map_err(to_py_err)?;
        serde_json::to_string_pretty(&report)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    /// Final probe-probe negativities for the two initializations.
    fn negativities(&self) -> PyResult<(f64, f64)> {
        let trace = run(&self.spec).map_err(to_py_err)?;
        let report = verdict(&trace).map_err(to_py_err)?;
        Ok((report.negativity_ab.plus, report.negativity_ab.minus))
    }

    fn __repr__(&self) -> String {
        format!(
            "Protocol(mediator='{}', stages={})",
            self.spec.mediator,
            self.spec.stages.len()
        )
    }
}

/// Run a scenario given as JSON text; returns the full report as JSON.
#[pyfunction]
#[pyo3(signature = (text, workers = 1))]
fn run_scenario(text: &str, workers: usize) -> PyResult<String> {
    let scenario = parse_scenario(text).map_err(to_py_err)?;
    let report = execute(&scenario, workers).map_err(to_py_err)?;
    report_to_json(&report).map_err(to_py_err)
}

/// Run a named demo (`cnot-relay`, `bmv-phase`, `nonlocal-cz`).
#[pyfunction]
fn run_demo(name: &str) -> PyResult<String> {
    let report = execute(&ScenarioFile::for_demo(name), 1).map_err(to_py_err)?;
    report_to_json(&report).map_err(to_py_err)
}

/// Run a sampling campaign; family is `classical_local` or `quantum_local`.
#[pyfunction]
#[pyo3(signature = (family, samples, seed, steps = 12, workers = 1))]
fn sweep(family: &str, samples: usize, seed: u64, steps: usize, workers: usize) -> PyResult<String> {
    let kind = match family {
        "classical_local" => MediatorKind::ClassicalLocal,
        "quantum_local" => MediatorKind::QuantumLocal,
        other => {
            return Err(PyValueError::new_err(format!("unknown family `{other}`")));
        }
    };
    let scenario = ScenarioFile::for_campaign(CampaignSpec {
        family: kind,
        samples,
        seed,
        n_steps: steps,
        negativity_threshold: None,
    });
    let report = execute(&scenario, workers).map_err(to_py_err)?;
    report_to_json(&report).map_err(to_py_err)
}

/// Classify declared variables given as the JSON list of a `variables`
/// scenario payload.
#[pyfunction]
fn classify(variables_json: &str) -> PyResult<String> {
    let variables: Vec<medwit::nonclassicality::VariableSpec> =
        serde_json::from_str(variables_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let report = execute(&ScenarioFile::for_variables(variables), 1).map_err(to_py_err)?;
    report_to_json(&report).map_err(to_py_err)
}

/// Separability sweep over the single-observable probe⊕mediator family.
#[pyfunction]
fn separability_sweep(samples: usize, seed: u64) -> PyResult<String> {
    let report = eq4_separability_sweep(samples, seed).map_err(to_py_err)?;
    serde_json::to_string_pretty(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
fn medwit_py(_py: Python<'_>, m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Protocol>()?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(run_demo, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(separability_sweep, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
