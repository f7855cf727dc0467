//! Python bindings. Matrices cross the boundary as lists of rows.

use dbnot_core::app::{cluster_dataset, BoundsSpec, DataSource, MeasureKind, RunConfig};
use dbnot_core::constraints::{self, DualBoundedSet};
use dbnot_core::entropic;
use dbnot_core::eval;
use dbnot_core::graph::{self, FeatureMatrix, InitMode, LabeledDataset};
use dbnot_core::linalg::{DenseMatrix, SparseAffinity};
use dbnot_core::mincut::{self, MinCutOracle};
use dbnot_core::solver::{self, Measure, SolveConfig, StepRule, TransportPlan};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

type Rows = Vec<Vec<f64>>;

fn py_err(e: dbnot_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn matrix(rows: &Rows) -> PyResult<DenseMatrix> {
    DenseMatrix::from_rows(rows).map_err(py_err)
}

fn affinity(rows: &Rows) -> PyResult<SparseAffinity> {
    SparseAffinity::from_dense(rows).map_err(py_err)
}

fn omega_for(f: &DenseMatrix, lower: f64, upper: f64) -> PyResult<DualBoundedSet> {
    DualBoundedSet::new(f.rows(), f.cols(), lower, upper).map_err(py_err)
}

fn parse_measure(name: &str) -> PyResult<Measure> {
    match name {
        "inner" => Ok(Measure::inner_product()),
        "norm" => Ok(Measure::norm()),
        _ => Err(PyValueError::new_err(format!("unknown measure {name:?}; use 'inner' or 'norm'"))),
    }
}

fn parse_step(name: &str) -> PyResult<StepRule> {
    match name {
        "easy" => Ok(StepRule::Easy),
        "line" => Ok(StepRule::LineSearch),
        "gap" => Ok(StepRule::DualGap),
        "certified" => Ok(StepRule::NonconvexCertified),
        _ => Err(PyValueError::new_err(format!(
            "unknown step {name:?}; use 'easy', 'line', 'gap' or 'certified'"
        ))),
    }
}

fn parse_init(name: &str) -> PyResult<InitMode> {
    match name {
        "spectral" => Ok(InitMode::SpectralWarm),
        "kmeans" => Ok(InitMode::KMeansWarm),
        "uniform" => Ok(InitMode::UniformJitter),
        _ => Err(PyValueError::new_err(format!(
            "unknown init {name:?}; use 'spectral', 'kmeans' or 'uniform'"
        ))),
    }
}

/// Euclidean projection onto the plans with unit rows and column sums in
/// `[lower, upper]`.
#[pyfunction]
#[pyo3(signature = (m, lower, upper, tol=1e-10, max_iter=10_000))]
fn project(m: Rows, lower: f64, upper: f64, tol: f64, max_iter: usize) -> PyResult<Rows> {
    let m = matrix(&m)?;
    let omega = omega_for(&m, lower, upper)?;
    let p = constraints::dykstra_project(&m, &omega, tol, max_iter).map_err(py_err)?;
    Ok(p.matrix.to_rows())
}

#[pyfunction]
fn project_row_simplex(v: Vec<f64>) -> Vec<f64> {
    constraints::project_row_simplex(&v)
}

/// Largest deviation of `f` from feasibility (rows, sign and column bounds).
#[pyfunction]
fn feasibility_deviation(f: Rows, lower: f64, upper: f64) -> PyResult<f64> {
    let f = matrix(&f)?;
    let omega = omega_for(&f, lower, upper)?;
    Ok(constraints::check_feasible(&f, &omega, 0.0).map_err(py_err)?.max_deviation())
}

/// Entropy-regularized minimizer of `⟨grad, P⟩` over the feasible plans.
#[pyfunction]
#[pyo3(signature = (grad, lower, upper, delta=None))]
fn entropic_plan(grad: Rows, lower: f64, upper: f64, delta: Option<f64>) -> PyResult<Rows> {
    let g = matrix(&grad)?;
    let omega = omega_for(&g, lower, upper)?;
    let delta = delta.unwrap_or_else(|| entropic::default_delta(&g));
    let p = entropic::feasible_gradient_entropic(&g, &omega, delta, entropic::DEFAULT_TOL, entropic::DEFAULT_MAX_ITER)
        .map_err(py_err)?;
    Ok(p.plan.to_rows())
}

#[pyfunction]
fn mincut_value(s: Rows, f: Rows) -> PyResult<f64> {
    mincut::mincut_value(&affinity(&s)?, &matrix(&f)?).map_err(py_err)
}

#[pyfunction]
fn mincut_gradient(s: Rows, f: Rows) -> PyResult<Rows> {
    Ok(mincut::mincut_gradient(&affinity(&s)?, &matrix(&f)?).map_err(py_err)?.to_rows())
}

/// Optimal step `μ` along `(1 − μ)·f + μ·fg`.
#[pyfunction]
fn line_search_mincut(s: Rows, f: Rows, fg: Rows) -> PyResult<f64> {
    mincut::line_search_mincut(&affinity(&s)?, &matrix(&f)?, &matrix(&fg)?).map_err(py_err)
}

/// Symmetric k-NN Gaussian affinity of the points (one point per row).
#[pyfunction]
#[pyo3(signature = (points, k, sigma=None))]
fn knn_affinity(points: Rows, k: usize, sigma: Option<f64>) -> PyResult<Rows> {
    let z = FeatureMatrix::from_samples(&points).map_err(py_err)?;
    let s = graph::knn_gaussian_affinity_with(&z, k, sigma).map_err(py_err)?;
    Ok(s.csr().to_dense().to_rows())
}

/// `(points, labels)` of the two-rings toy set.
#[pyfunction]
#[pyo3(signature = (n_per_ring=100, noise=0.05, seed=7))]
fn two_rings(n_per_ring: usize, noise: f64, seed: u64) -> PyResult<(Rows, Vec<usize>)> {
    let ds = graph::generate_two_rings(n_per_ring, noise, seed).map_err(py_err)?;
    let points = ds.features.samples().map(<[f64]>::to_vec).collect();
    Ok((points, ds.labels.unwrap_or_default()))
}

/// Size-constrained min cut from the feasible start `f0`.
#[pyfunction]
#[pyo3(signature = (s, f0, lower, upper, measure="inner", step="easy", max_iter=500, gap_tol=1e-9))]
#[allow(clippy::too_many_arguments)]
fn solve_mincut<'py>(
    py: Python<'py>,
    s: Rows,
    f0: Rows,
    lower: f64,
    upper: f64,
    measure: &str,
    step: &str,
    max_iter: usize,
    gap_tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let f0 = matrix(&f0)?;
    let omega = omega_for(&f0, lower, upper)?;
    let obj = MinCutOracle::new(affinity(&s)?).map_err(py_err)?;
    let cfg = SolveConfig {
        measure: parse_measure(measure)?,
        step: parse_step(step)?,
        max_iter,
        gap_tol,
        ..SolveConfig::default()
    };
    let start = TransportPlan::new(f0, omega).map_err(py_err)?;
    let rep = solver::solve(&obj, &omega, &start, &cfg).map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("plan", rep.solution().to_rows())?;
    out.set_item("labels", eval::labels_from_plan(rep.solution()))?;
    out.set_item("objective", rep.solution_objective())?;
    out.set_item("objective_trace", rep.objective_trace.clone())?;
    out.set_item("gap_trace", rep.gap_trace.clone())?;
    out.set_item("iterations", rep.iterations)?;
    out.set_item("stop_reason", format!("{:?}", rep.stop_reason))?;
    Ok(out)
}

/// Full pipeline on in-memory points: graph, initialization, solve, metrics.
#[pyfunction]
#[pyo3(signature = (points, c, labels=None, balance=0.1, k=10, measure="inner", step="easy", init="spectral", max_iter=500, seed=42))]
#[allow(clippy::too_many_arguments)]
fn cluster<'py>(
    py: Python<'py>,
    points: Rows,
    c: usize,
    labels: Option<Vec<usize>>,
    balance: f64,
    k: usize,
    measure: &str,
    step: &str,
    init: &str,
    max_iter: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let features = FeatureMatrix::from_samples(&points).map_err(py_err)?;
    let data = LabeledDataset::new(features, labels).map_err(py_err)?;
    let mut cfg = RunConfig::new(DataSource::InMemory, c);
    cfg.bounds = BoundsSpec::Slack { slack: balance };
    cfg.k = k;
    cfg.measure = match measure {
        "norm" => MeasureKind::Norm,
        "inner" => MeasureKind::Inner,
        other => return Err(PyValueError::new_err(format!("unknown measure {other:?}"))),
    };
    cfg.step = parse_step(step)?;
    cfg.init = parse_init(init)?;
    cfg.max_iter = max_iter;
    cfg.seed = seed;
    let res = cluster_dataset(&cfg, &data, None).map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("labels", res.labels)?;
    out.set_item("plan", res.plan.to_rows())?;
    out.set_item("objective", res.report.objective)?;
    out.set_item("iterations", res.report.iterations)?;
    out.set_item("column_sums", res.report.column_sums)?;
    out.set_item("bounds", (res.report.bounds.lower, res.report.bounds.upper))?;
    if let Some(m) = res.report.metrics {
        out.set_item("acc", m.acc)?;
        out.set_item("nmi", m.nmi)?;
        out.set_item("ari", m.ari)?;
    }
    Ok(out)
}

#[pyfunction]
fn accuracy(pred: Vec<usize>, truth: Vec<usize>) -> PyResult<f64> {
    eval::accuracy(&pred, &truth).map_err(py_err)
}

#[pyfunction]
fn nmi(pred: Vec<usize>, truth: Vec<usize>) -> PyResult<f64> {
    eval::nmi(&pred, &truth).map_err(py_err)
}

#[pyfunction]
fn ari(pred: Vec<usize>, truth: Vec<usize>) -> PyResult<f64> {
    eval::ari(&pred, &truth).map_err(py_err)
}

#[pymodule]
fn pydbnot(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(project, m)?)?;
    m.add_function(wrap_pyfunction!(project_row_simplex, m)?)?;
    m.add_function(wrap_pyfunction!(feasibility_deviation, m)?)?;
    m.add_function(wrap_pyfunction!(entropic_plan, m)?)?;
    m.add_function(wrap_pyfunction!(mincut_value, m)?)?;
    m.add_function(wrap_pyfunction!(mincut_gradient, m)?)?;
    m.add_function(wrap_pyfunction!(line_search_mincut, m)?)?;
    m.add_function(wrap_pyfunction!(knn_affinity, m)?)?;
    m.add_function(wrap_pyfunction!(two_rings, m)?)?;
    m.add_function(wrap_pyfunction!(solve_mincut, m)?)?;
    m.add_function(wrap_pyfunction!(cluster, m)?)?;
    m.add_function(wrap_pyfunction!(accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(nmi, m)?)?;
    m.add_function(wrap_pyfunction!(ari, m)?)?;
    Ok(())
}
