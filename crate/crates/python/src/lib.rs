//! Python bindings for the max k-cut toolkit.

use std::time::Duration;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use kcut_core::certify::{certify as run_certify, Theorem};
use kcut_core::chordal::chordal_extend as core_chordal_extend;
use kcut_core::exact::{branch_and_bound_opt as core_bnb, brute_force_opt as core_brute};
use kcut_core::formulations::{cut_value as core_cut_value, Formulation, Partitioning};
use kcut_core::graph::{gen_instance, parse_edge_list, Graph as CoreGraph, InstanceSpec};
use kcut_core::model::{export_lp_format, export_sdpa_format};
use kcut_core::polytopes::FractionalAssignment;
use kcut_core::relaxations::{
    bqo_relax_bound as core_bqo, emilo_relax_bound as core_emilo, remilo_relax_bound as core_remilo,
    round_fractional as core_round, vmilo_relax_bound_lp, BqoBound, BqoBudget, LpBound,
};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Weighted undirected graph on vertices `0..n`.
#[pyclass(name = "Graph", module = "kcut", frozen)]
pub struct PyGraph {
    inner: CoreGraph,
}

#[pymethods]
impl PyGraph {
    #[new]
    #[pyo3(signature = (n, edges = Vec::new()))]
    fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> PyResult<Self> {
        CoreGraph::new(n, edges).map(|inner| Self { inner }).map_err(value_err)
    }

    #[staticmethod]
    fn complete(n: usize) -> PyResult<Self> {
        CoreGraph::complete(n).map(|inner| Self { inner }).map_err(value_err)
    }

    #[staticmethod]
    fn cycle(n: usize) -> PyResult<Self> {
        CoreGraph::cycle(n).map(|inner| Self { inner }).map_err(value_err)
    }

    /// Parses the `n m` header plus one-based `u v w` lines format.
    #[staticmethod]
    fn from_edge_list(text: &str) -> PyResult<Self> {
        parse_edge_list(text).map(|inner| Self { inner }).map_err(value_err)
    }

    /// Erdős–Rényi graph with integer weights in `weight_min..=weight_max`.
    #[staticmethod]
    #[pyo3(signature = (n, p, seed, weight_min = 1, weight_max = 1))]
    fn random(n: usize, p: f64, seed: u64, weight_min: i64, weight_max: i64) -> PyResult<Self> {
        let spec = InstanceSpec::Random { n, p, weight_min, weight_max };
        gen_instance(&spec, seed).map(|inner| Self { inner }).map_err(value_err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.inner.edges().iter().map(|e| (e.u, e.v, e.w)).collect()
    }

    /// Density in percent.
    #[getter]
    fn density(&self) -> f64 {
        self.inner.stats().density
    }

    fn positive_weight(&self) -> f64 {
        self.inner.positive_weight()
    }

    fn to_edge_list(&self) -> String {
        self.inner.to_edge_list()
    }

    fn __repr__(&self) -> String {
        format!("Graph(n={}, m={})", self.inner.n(), self.inner.m())
    }
}

fn lp_dict<'py>(py: Python<'py>, b: &LpBound) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("bound", b.value)?;
    d.set_item("converged", b.converged)?;
    d.set_item("rounds", b.rounds)?;
    d.set_item("iterations", b.iterations)?;
    Ok(d)
}

#[pyfunction]
fn cut_value(g: &PyGraph, assignment: Vec<usize>, k: usize) -> PyResult<f64> {
    let p = Partitioning::new(assignment, k).map_err(value_err)?;
    core_cut_value(&g.inner, &p).map_err(value_err)
}

/// Exhaustive optimum: `(value, assignment)`.
#[pyfunction]
fn brute_force_opt(g: &PyGraph, k: usize) -> PyResult<(f64, Vec<usize>)> {
    let (v, p) = core_brute(&g.inner, k).map_err(value_err)?;
    Ok((v, p.assignment().to_vec()))
}

#[pyfunction]
#[pyo3(signature = (g, k, time_cap = 60.0))]
fn branch_and_bound_opt<'py>(py: Python<'py>, g: &PyGraph, k: usize, time_cap: f64) -> PyResult<Bound<'py, PyDict>> {
    let cap = Duration::try_from_secs_f64(time_cap).map_err(value_err)?;
    let r = py.detach(|| core_bnb(&g.inner, k, cap)).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("value", r.value)?;
    d.set_item("assignment", r.partitioning.assignment().to_vec())?;
    d.set_item("proved", r.status == kcut_core::exact::ProofStatus::Proved)?;
    d.set_item("upper_bound", r.upper_bound)?;
    d.set_item("nodes", r.nodes)?;
    Ok(d)
}

#[pyfunction]
fn vmilo_relax_bound<'py>(py: Python<'py>, g: &PyGraph, k: usize) -> PyResult<Bound<'py, PyDict>> {
    let b = py.detach(|| vmilo_relax_bound_lp(&g.inner, k)).map_err(value_err)?;
    lp_dict(py, &b)
}

#[pyfunction]
#[pyo3(signature = (g, k, lazy = false))]
fn emilo_relax_bound<'py>(py: Python<'py>, g: &PyGraph, k: usize, lazy: bool) -> PyResult<Bound<'py, PyDict>> {
    let b = py.detach(|| core_emilo(&g.inner, k, lazy)).map_err(value_err)?;
    lp_dict(py, &b)
}

#[pyfunction]
fn remilo_relax_bound<'py>(py: Python<'py>, g: &PyGraph, k: usize) -> PyResult<Bound<'py, PyDict>> {
    let b = py.detach(|| core_remilo(&g.inner, k)).map_err(value_err)?;
    lp_dict(py, &b)
}

/// `(lower, upper)`; equal when the optimum was proved within `time_cap`.
#[pyfunction]
#[pyo3(signature = (g, k, time_cap = 60.0, seed = 0))]
fn bqo_relax_bound(py: Python<'_>, g: &PyGraph, k: usize, time_cap: f64, seed: u64) -> PyResult<(f64, f64)> {
    let budget = BqoBudget {
        time_cap: Duration::try_from_secs_f64(time_cap).map_err(value_err)?,
        seed,
        ..BqoBudget::default()
    };
    Ok(match py.detach(|| core_bqo(&g.inner, k, budget)).map_err(value_err)? {
        BqoBound::Exact { value, .. } => (value, value),
        BqoBound::Bracket { lower, upper, .. } => (lower, upper),
    })
}

/// Rounds a fractional assignment (rows on the simplex) without losing objective.
#[pyfunction]
fn round_fractional(g: &PyGraph, x: Vec<Vec<f64>>) -> PyResult<Vec<usize>> {
    let x = FractionalAssignment::new(&x).map_err(value_err)?;
    let p = core_round(&g.inner, &x).map_err(value_err)?;
    Ok(p.assignment().to_vec())
}

type ChordalParts = (Vec<(usize, usize)>, Vec<usize>, Vec<Vec<usize>>);

/// `(fill_edges, elimination_order, maximal_cliques)`.
#[pyfunction]
fn chordal_extend(g: &PyGraph) -> ChordalParts {
    let info = core_chordal_extend(&g.inner);
    (info.fill_edges, info.peo, info.maximal_cliques)
}

/// Model text in `"lp"` or `"sdpa"` format.
#[pyfunction]
#[pyo3(signature = (g, k, formulation, format = "lp"))]
fn export(g: &PyGraph, k: usize, formulation: &str, format: &str) -> PyResult<String> {
    let f = Formulation::parse(formulation).ok_or_else(|| value_err(format!("unknown formulation {formulation:?}")))?;
    let model = f.build(&g.inner, k).map_err(value_err)?;
    match format {
        "lp" => export_lp_format(&model).map_err(value_err),
        "sdpa" => export_sdpa_format(&model).map_err(value_err),
        other => Err(value_err(format!("unknown format {other:?}"))),
    }
}

/// Runs a certification and returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (theorem, samples = 10_000, seed = 0))]
fn certify<'py>(py: Python<'py>, theorem: &str, samples: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let t = Theorem::parse(theorem).ok_or_else(|| value_err(format!("unknown theorem {theorem:?}")))?;
    let report = py.detach(|| run_certify(t, samples, seed));
    let text = serde_json::to_string(&report).map_err(value_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pymodule]
fn kcut(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_function(wrap_pyfunction!(cut_value, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_opt, m)?)?;
    m.add_function(wrap_pyfunction!(branch_and_bound_opt, m)?)?;
    m.add_function(wrap_pyfunction!(vmilo_relax_bound, m)?)?;
    m.add_function(wrap_pyfunction!(emilo_relax_bound, m)?)?;
    m.add_function(wrap_pyfunction!(remilo_relax_bound, m)?)?;
    m.add_function(wrap_pyfunction!(bqo_relax_bound, m)?)?;
    m.add_function(wrap_pyfunction!(round_fractional, m)?)?;
    m.add_function(wrap_pyfunction!(chordal_extend, m)?)?;
    m.add_function(wrap_pyfunction!(export, m)?)?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    Ok(())
}
