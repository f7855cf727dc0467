//! Nonlinear optimal transport over plans with unit row sums and bounded
//! column sums, solved by a Frank-Wolfe iteration, plus size-constrained
//! min-cut clustering built on it.
//!
//! ```
//! use dbnot_core::{constraints::DualBoundedSet, graph, mincut::MinCutOracle, solver};
//!
//! let data = graph::generate_two_rings(20, 0.02, 1).unwrap();
//! let s = graph::knn_gaussian_affinity(&data.features, 5).unwrap();
//! let omega = DualBoundedSet::with_slack(40, 2, 0.2).unwrap();
//! let f0 = graph::initial_plan(&omega, graph::InitMode::SpectralWarm, None, Some(&s), 0).unwrap();
//! let report = solver::solve(&MinCutOracle::new(s).unwrap(), &omega, &f0, &Default::default()).unwrap();
//! assert!(report.objective_trace.len() >= 1);
//! ```

pub mod app;
pub mod constraints;
pub mod entropic;
pub mod error;
pub mod eval;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod mincut;
pub mod oracle;
pub mod solver;
pub mod verify;

pub use constraints::{check_feasible, dykstra_project, DualBoundedSet};
pub use error::{Error, Result};
pub use linalg::{CsrMatrix, DenseMatrix, SparseAffinity};
pub use solver::{solve, Measure, Objective, SolveConfig, SolveReport, StepRule, TransportPlan};
