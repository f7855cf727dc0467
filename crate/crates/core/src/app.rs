//! The `cluster` and `convex-demo` commands as library functions.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::constraints::{check_feasible, DualBoundedSet};
use crate::error::{Error, Result};
use crate::eval::{accuracy, ari, cluster_sizes, labels_from_plan, nmi};
use crate::graph::{
    generate_two_moons, generate_two_rings, initial_plan, knn_gaussian_affinity_with, laplacian, load_csv,
    normalize_features, random_connected_graph, InitMode, LabeledDataset,
};
use crate::io::{colsum_csv, labels_csv, plan_csv, trace_csv, write_atomic, write_json};
use crate::linalg::DenseMatrix;
use crate::mincut::{ConvexLaplacianOracle, MinCutOracle};
use crate::solver::{solve, Measure, Objective, PhaseTimings, SolveConfig, SolveReport, StepRule, StopReason, TransportPlan};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DataSource {
    Csv { path: PathBuf },
    TwoRings { n_per_ring: usize, noise: f64, seed: u64 },
    TwoMoons { n_per_moon: usize, noise: f64, seed: u64 },
    /// Data handed over directly, e.g. from the Python bindings.
    InMemory,
}

impl DataSource {
    pub fn load(&self) -> Result<LabeledDataset> {
        match self {
            DataSource::Csv { path } => load_csv(path),
            DataSource::TwoRings { n_per_ring, noise, seed } => generate_two_rings(*n_per_ring, *noise, *seed),
            DataSource::TwoMoons { n_per_moon, noise, seed } => generate_two_moons(*n_per_moon, *noise, *seed),
            DataSource::InMemory => Err(Error::InvalidInput("in-memory data cannot be reloaded".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BoundsSpec {
    /// `b_l = floor((1 − slack)·n/c)`, `b_u = ceil((1 + slack)·n/c)`.
    Slack { slack: f64 },
    Explicit { lower: f64, upper: f64 },
}

impl BoundsSpec {
    pub fn resolve(&self, n: usize, c: usize) -> Result<DualBoundedSet> {
        match *self {
            BoundsSpec::Slack { slack } => DualBoundedSet::with_slack(n, c, slack),
            BoundsSpec::Explicit { lower, upper } => DualBoundedSet::new(n, c, lower, upper),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    Norm,
    Inner,
}

impl MeasureKind {
    pub fn measure(self) -> Measure {
        match self {
            MeasureKind::Norm => Measure::norm(),
            MeasureKind::Inner => Measure::inner_product(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub source: DataSource,
    pub c: usize,
    pub bounds: BoundsSpec,
    pub k: usize,
    pub sigma: Option<f64>,
    pub normalize: bool,
    pub measure: MeasureKind,
    pub step: StepRule,
    pub max_iter: usize,
    pub seed: u64,
    pub init: InitMode,
    pub select_best_gap: bool,
}

impl RunConfig {
    pub fn new(source: DataSource, c: usize) -> Self {
        Self {
            source,
            c,
            bounds: BoundsSpec::Slack { slack: 0.1 },
            k: 10,
            sigma: None,
            normalize: true,
            measure: MeasureKind::Inner,
            step: StepRule::Easy,
            max_iter: 500,
            seed: 42,
            init: InitMode::SpectralWarm,
            select_best_gap: true,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Metrics {
    pub acc: f64,
    pub nmi: f64,
    pub ari: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RunTimings {
    pub load_s: f64,
    pub graph_s: f64,
    pub init_s: f64,
    pub solve_s: f64,
    pub solve_phases: PhaseTimings,
    pub eval_s: f64,
    pub total_s: f64,
}

/// Contents of `report.json`. Only `timings` varies between identical runs.
#[derive(Debug, Clone, Serialize)]
pub struct ClusterReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub config: RunConfig,
    pub n: usize,
    pub d: usize,
    pub c: usize,
    pub bounds: Bounds,
    pub affinity_nnz: usize,
    pub smoothness: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub selected_iterate: &'static str,
    pub best_gap_index: usize,
    pub objective: f64,
    pub objective_trace: Vec<f64>,
    pub gap_trace: Vec<f64>,
    pub metrics: Option<Metrics>,
    pub cluster_sizes: Vec<usize>,
    pub column_sums: Vec<f64>,
    pub max_feasibility_deviation: f64,
    pub timings: RunTimings,
}

#[derive(Debug, Clone)]
pub struct ClusterOutcome {
    pub report: ClusterReport,
    pub labels: Vec<usize>,
    pub plan: DenseMatrix,
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

/// Loads data, builds the graph, solves the size-constrained min cut, and
/// writes the artifacts into `out` when given.
pub fn cmd_cluster(config: &RunConfig, out: Option<&Path>) -> Result<ClusterOutcome> {
    let start = Instant::now();
    let data = config.source.load()?;
    let load_s = secs(start);
    let mut outcome = cluster_dataset(config, &data, out)?;
    outcome.report.timings.load_s = load_s;
    outcome.report.timings.total_s = secs(start);
    if let Some(dir) = out {
        write_json(&dir.join("report.json"), &outcome.report)?;
    }
    Ok(outcome)
}

/// [`cmd_cluster`] on an already loaded dataset; `config.source` is only
/// recorded in the report.
pub fn cluster_dataset(config: &RunConfig, data: &LabeledDataset, out: Option<&Path>) -> Result<ClusterOutcome> {
    let start = Instant::now();
    let mut timings = RunTimings::default();
    let n = data.features.n();
    let omega = config.bounds.resolve(n, config.c)?;

    let t = Instant::now();
    let z = if config.normalize { normalize_features(&data.features) } else { data.features.clone() };
    let s = knn_gaussian_affinity_with(&z, config.k, config.sigma)?;
    timings.graph_s = secs(t);

    let t = Instant::now();
    let f0 = initial_plan(&omega, config.init, Some(&z), Some(&s), config.seed)?;
    timings.init_s = secs(t);

    let affinity_nnz = s.csr().nnz();
    let oracle = MinCutOracle::new(s)?;
    let solve_cfg = SolveConfig {
        measure: config.measure.measure(),
        step: config.step,
        max_iter: config.max_iter,
        seed: config.seed,
        select_best_gap: config.select_best_gap,
        ..SolveConfig::default()
    };
    let t = Instant::now();
    let rep = solve(&oracle, &omega, &f0, &solve_cfg)?;
    timings.solve_s = secs(t);
    timings.solve_phases = rep.timings.clone();

    let t = Instant::now();
    let plan = rep.solution().clone();
    let labels = labels_from_plan(&plan);
    let metrics = match &data.labels {
        Some(truth) => Some(Metrics {
            acc: accuracy(&labels, truth)?,
            nmi: nmi(&labels, truth)?,
            ari: ari(&labels, truth)?,
        }),
        None => None,
    };
    let feas = check_feasible(&plan, &omega, 0.0)?;
    timings.eval_s = secs(t);
    timings.total_s = secs(start);

    let report = ClusterReport {
        schema_version: SCHEMA_VERSION,
        command: "cluster",
        config: config.clone(),
        n,
        d: data.features.d(),
        c: config.c,
        bounds: Bounds {
            lower: omega.lower(),
            upper: omega.upper(),
        },
        affinity_nnz,
        smoothness: rep.smoothness,
        iterations: rep.iterations,
        stop_reason: rep.stop_reason,
        selected_iterate: if config.select_best_gap { "best_gap" } else { "last" },
        best_gap_index: rep.best_index,
        objective: rep.solution_objective(),
        objective_trace: rep.objective_trace.clone(),
        gap_trace: rep.gap_trace.clone(),
        metrics,
        cluster_sizes: cluster_sizes(&labels, config.c)?,
        column_sums: plan.col_sums(),
        max_feasibility_deviation: feas.max_deviation(),
        timings,
    };
    if let Some(dir) = out {
        write_cluster_artifacts(dir, &report, &labels, &plan)?;
    }
    Ok(ClusterOutcome { report, labels, plan })
}

fn write_cluster_artifacts(dir: &Path, report: &ClusterReport, labels: &[usize], plan: &DenseMatrix) -> Result<()> {
    write_atomic(&dir.join("labels.csv"), labels_csv(labels).as_bytes())?;
    write_atomic(
        &dir.join("trace.csv"),
        trace_csv(&report.objective_trace, &report.gap_trace).as_bytes(),
    )?;
    write_atomic(
        &dir.join("colsum.csv"),
        colsum_csv(&report.column_sums, report.bounds.lower, report.bounds.upper).as_bytes(),
    )?;
    write_atomic(&dir.join("plan.csv"), plan_csv(plan).as_bytes())?;
    write_json(&dir.join("report.json"), report)
}

/// Extra-edge probability of the demo graph on top of its spanning tree.
pub const DEMO_DENSITY: f64 = 0.1;
/// Iteration budget of the convex demo.
pub const DEMO_MAX_ITER: usize = 50;

#[derive(Debug, Clone, Serialize)]
pub struct ConvexDemoReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub n: usize,
    pub c: usize,
    pub seed: u64,
    pub smoothness: f64,
    pub delta: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub max_deviation: f64,
    pub deviation_trace: Vec<f64>,
    pub objective_trace: Vec<f64>,
    pub gap_trace: Vec<f64>,
    pub timings: PhaseTimings,
}

/// Solver settings of the convex demo for an objective with smoothness `l`.
///
/// The entropic measure uses a fixed `δ = L` rather than the gradient-range
/// default: a fixed `δ` makes the feasible gradient tend to the uniform plan
/// as the gradient vanishes, which singles out `1/c` among the plans `1pᵀ`
/// that all attain the optimal value 0.
pub fn convex_demo_config(l: f64, max_iter: usize) -> SolveConfig {
    SolveConfig {
        measure: Measure::InnerProduct {
            delta: Some(l),
            tol: 1e-12,
            max_iter: 10_000,
        },
        step: StepRule::LineSearch,
        max_iter,
        gap_tol: 0.0,
        record_history: true,
        select_best_gap: false,
        ..SolveConfig::default()
    }
}

/// Random row-stochastic start, deterministic per seed.
pub fn random_plan(n: usize, c: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = DenseMatrix::zeros(n, c);
    for i in 0..n {
        let row: Vec<f64> = (0..c).map(|_| rng.random_range(0.01..1.0)).collect();
        let s: f64 = row.iter().sum();
        m.row_mut(i).iter_mut().zip(&row).for_each(|(x, r)| *x = r / s);
    }
    m
}

pub fn max_deviation_from_uniform(f: &DenseMatrix) -> f64 {
    let u = 1.0 / f.cols() as f64;
    f.as_slice().iter().map(|x| (x - u).abs()).fold(0.0, f64::max)
}

/// `min tr(FᵀLF)` over row-stochastic plans on a random connected graph.
pub fn cmd_convex_demo(n: usize, c: usize, seed: u64, out: Option<&Path>) -> Result<(ConvexDemoReport, SolveReport)> {
    if c < 2 {
        return Err(Error::InvalidInput(format!("need c >= 2, got {c}")));
    }
    let omega = DualBoundedSet::rows_only(n, c)?;
    let s = random_connected_graph(n, DEMO_DENSITY, seed)?;
    let oracle = ConvexLaplacianOracle::new(laplacian(&s))?;
    let f0 = TransportPlan::new(random_plan(n, c, seed), omega)?;
    let cfg = convex_demo_config(oracle.smoothness(), DEMO_MAX_ITER);
    let rep = solve(&oracle, &omega, &f0, &cfg)?;
    let deviation_trace: Vec<f64> = rep.iterates.iter().map(max_deviation_from_uniform).collect();
    let report = ConvexDemoReport {
        schema_version: SCHEMA_VERSION,
        command: "convex-demo",
        n,
        c,
        seed,
        smoothness: oracle.smoothness(),
        delta: oracle.smoothness(),
        iterations: rep.iterations,
        stop_reason: rep.stop_reason,
        max_deviation: max_deviation_from_uniform(&rep.last),
        deviation_trace,
        objective_trace: rep.objective_trace.clone(),
        gap_trace: rep.gap_trace.clone(),
        timings: rep.timings.clone(),
    };
    if let Some(dir) = out {
        write_atomic(&dir.join("trace.csv"), trace_csv(&rep.objective_trace, &rep.gap_trace).as_bytes())?;
        write_atomic(&dir.join("plan.csv"), plan_csv(&rep.last).as_bytes())?;
        write_json(&dir.join("report.json"), &report)?;
    }
    Ok((report, rep))
}
