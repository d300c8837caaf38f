//! Python bindings. Documents cross the boundary as JSON text in the same
//! formats the CLI reads and writes.

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use roomsmith::compose::render_floor_plan;
use roomsmith::corrector;
use roomsmith::eval::{self, VoteTable};
use roomsmith::scene::{parse_graph_document, serialize_graph, SceneGraph};
use roomsmith::solver::{Layout, SolveError, SolverConfig};

create_exception!(roomsmith_py, Unsatisfiable, PyException, "No layout satisfies the scene graph.");

fn graph(text: &str) -> PyResult<SceneGraph> {
    parse_graph_document(text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable")
}

/// Repairs a scene graph. Returns `(graph_json, report_json)`.
#[pyfunction]
fn correct_graph(graph_json: &str) -> PyResult<(String, String)> {
    let report = corrector::correct_graph(&graph(graph_json)?, None, None);
    Ok((serialize_graph(&report.graph), to_json(&report)))
}

/// Violations in a scene graph as a JSON list.
#[pyfunction]
fn detect_violations(graph_json: &str) -> PyResult<String> {
    Ok(to_json(&corrector::detect_violations(&graph(graph_json)?)))
}

/// Places every object. Raises `Unsatisfiable` with the unsat report as
/// JSON when the search gives up.
#[pyfunction]
#[pyo3(signature = (graph_json, seed = None))]
fn solve_layout(py: Python<'_>, graph_json: &str, seed: Option<u64>) -> PyResult<String> {
    let g = graph(graph_json)?;
    let mut config = SolverConfig::default();
    if let Some(seed) = seed {
        config = config.with_seed(seed);
    }
    match py.detach(|| roomsmith::solver::solve_layout(&g, &config)) {
        Ok(layout) => Ok(layout.to_json()),
        Err(SolveError::Unsat(report)) => Err(Unsatisfiable::new_err(to_json(&report))),
        Err(e) => Err(PyValueError::new_err(e.to_string())),
    }
}

/// SVG floor plan of a solved layout.
#[pyfunction]
fn floor_plan(graph_json: &str, layout_json: &str) -> PyResult<String> {
    let layout: Layout = serde_json::from_str(layout_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    render_floor_plan(&layout, &graph(graph_json)?).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Aggregate metrics over `(source, manifest_json)` pairs.
#[pyfunction]
fn compute_metrics(documents: Vec<(String, String)>) -> String {
    eval::compute_metrics(&documents).to_json()
}

/// Strengths fitted to a win-count matrix, summing to 1.
#[pyfunction]
#[pyo3(signature = (items, wins, max_iterations = 10_000, tol = 1e-12))]
fn bradley_terry(items: Vec<String>, wins: Vec<Vec<f64>>, max_iterations: usize, tol: f64) -> PyResult<Vec<f64>> {
    let fit = eval::bradley_terry(&VoteTable { items, wins }, max_iterations, tol)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(fit.scores)
}

#[pymodule]
fn roomsmith_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("Unsatisfiable", m.py().get_type::<Unsatisfiable>())?;
    m.add_function(wrap_pyfunction!(correct_graph, m)?)?;
    m.add_function(wrap_pyfunction!(detect_violations, m)?)?;
    m.add_function(wrap_pyfunction!(solve_layout, m)?)?;
    m.add_function(wrap_pyfunction!(floor_plan, m)?)?;
    m.add_function(wrap_pyfunction!(compute_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(bradley_terry, m)?)?;
    Ok(())
}
