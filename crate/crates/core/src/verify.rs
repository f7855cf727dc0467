//! Fixed-seed self-checks behind `dbnot verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::app::convex_demo_config;
use crate::constraints::{
    check_feasible, dykstra_project, project_row_simplex, project_row_simplex_sorted, DualBoundedSet,
};
use crate::entropic::feasible_gradient_entropic;
use crate::error::{Error, Result};
use crate::eval::{accuracy, ari, nmi};
use crate::graph::{laplacian, random_connected_graph};
use crate::linalg::{DenseMatrix, SparseAffinity};
use crate::mincut::{ConvexLaplacianOracle, MinCutOracle};
use crate::oracle;
use crate::solver::{solve, Objective, SolveConfig, StepRule, TransportPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Projections,
    Convergence,
    Metrics,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "projections" => Ok(Suite::Projections),
            "convergence" => Ok(Suite::Convergence),
            "metrics" => Ok(Suite::Metrics),
            "all" => Ok(Suite::All),
            other => Err(Error::InvalidInput(format!("unknown suite {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, result: Result<(bool, String)>) -> Check {
    match result {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

pub fn run(suite: Suite) -> Vec<Check> {
    let mut out = Vec::new();
    if matches!(suite, Suite::Projections | Suite::All) {
        out.push(check("dykstra matches QP oracle", dykstra_vs_oracle(100, 1)));
        out.push(check("newton simplex matches sort", simplex_newton_vs_sort(1000, 2)));
        out.push(check("entropic marginals", entropic_marginals(50, 3)));
    }
    if matches!(suite, Suite::Convergence | Suite::All) {
        out.push(check("convex certificate 4nL/(t+1)", convex_certificate(12, 3, 4)));
        out.push(check("gap dominates suboptimality", gap_dominance(12, 3, 5)));
        out.push(check("nonconvex certificate", nonconvex_certificate(8, 6)));
        out.push(check("two cliques recovered", two_cliques()));
    }
    if matches!(suite, Suite::Metrics | Suite::All) {
        out.push(check("metrics match brute force", metrics_exhaustive(6, 3)));
    }
    out
}

/// Random `Ω` with integer bounds, `n ≤ max_n`, `c ≤ max_c`.
pub fn random_omega(rng: &mut ChaCha8Rng, max_n: usize, max_c: usize) -> DualBoundedSet {
    let c = rng.random_range(2..=max_c);
    let n = rng.random_range(c..=max_n.max(c));
    let lo = rng.random_range(0..=n / c);
    let hi = rng.random_range(n.div_ceil(c)..=n);
    DualBoundedSet::new(n, c, lo as f64, hi as f64).expect("integer bounds bracket n/c")
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, c: usize, lo: f64, hi: f64) -> DenseMatrix {
    DenseMatrix::new(n, c, (0..n * c).map(|_| rng.random_range(lo..hi)).collect()).expect("finite")
}

pub fn dykstra_vs_oracle(cases: usize, seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..cases {
        let omega = random_omega(&mut rng, 6, 3);
        let m = random_matrix(&mut rng, omega.n(), omega.c(), -1.0, 2.0);
        let got = dykstra_project(&m, &omega, 1e-12, 100_000)?.matrix;
        let want = oracle::project_active_set(&m, &omega)?;
        worst = worst.max(got.distance(&want)?);
    }
    Ok((worst <= 1e-6, format!("max distance {worst:.2e} over {cases} instances")))
}

pub fn simplex_newton_vs_sort(cases: usize, seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..cases {
        let v: Vec<f64> = (0..10).map(|_| rng.random_range(-3.0..3.0)).collect();
        let a = project_row_simplex(&v);
        let b = project_row_simplex_sorted(&v);
        worst = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(worst, f64::max);
    }
    Ok((worst <= 1e-10, format!("max difference {worst:.2e} over {cases} vectors")))
}

pub fn entropic_marginals(cases: usize, seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut row, mut col) = (0.0_f64, 0.0_f64);
    for _ in 0..cases {
        let omega = random_omega(&mut rng, 12, 4);
        let g = random_matrix(&mut rng, omega.n(), omega.c(), 0.0, 1.0);
        let p = feasible_gradient_entropic(&g, &omega, 0.05, 1e-10, 100_000)?.plan;
        row = p.row_sums().iter().map(|s| (s - 1.0).abs()).fold(row, f64::max);
        col = col.max(check_feasible(&p, &omega, 0.0)?.max_bound_violation());
    }
    Ok((
        row <= 1e-12 && col <= 1e-4,
        format!("row error {row:.2e}, column bound violation {col:.2e}"),
    ))
}

const STEPS: [StepRule; 3] = [StepRule::Easy, StepRule::LineSearch, StepRule::DualGap];

fn convex_instance(n: usize, seed: u64) -> Result<ConvexLaplacianOracle> {
    ConvexLaplacianOracle::new(laplacian(&random_connected_graph(n, 0.3, seed)?))
}

/// Largest `(H(F^t) − H*) − 4nL/(t+1)` over all steps rules; `H* = 0`.
pub fn convex_certificate(n: usize, c: usize, seed: u64) -> Result<(bool, String)> {
    let obj = convex_instance(n, seed)?;
    let omega = DualBoundedSet::rows_only(n, c)?;
    let f0 = TransportPlan::new(crate::app::random_plan(n, c, seed), omega)?;
    let l = obj.smoothness();
    let mut worst = f64::NEG_INFINITY;
    for step in STEPS {
        let cfg = SolveConfig {
            step,
            ..convex_demo_config(l, 500)
        };
        let rep = solve(&obj, &omega, &f0, &cfg)?;
        for (t, h) in rep.objective_trace.iter().enumerate() {
            let bound = 4.0 * n as f64 * l / (t as f64 + 1.0);
            worst = worst.max(h - bound);
        }
    }
    Ok((worst <= 0.0, format!("max excess over bound {worst:.3e}")))
}

pub fn gap_dominance(n: usize, c: usize, seed: u64) -> Result<(bool, String)> {
    let obj = convex_instance(n, seed)?;
    let omega = DualBoundedSet::rows_only(n, c)?;
    let f0 = TransportPlan::new(crate::app::random_plan(n, c, seed), omega)?;
    let mut worst = f64::NEG_INFINITY;
    for step in STEPS {
        let cfg = SolveConfig {
            step,
            ..convex_demo_config(obj.smoothness(), 200)
        };
        let rep = solve(&obj, &omega, &f0, &cfg)?;
        for (g, h) in rep.gap_trace.iter().zip(&rep.objective_trace) {
            worst = worst.max(h - g - 1e-8);
        }
    }
    Ok((worst <= 0.0, format!("max of H − H* − g − 1e-8: {worst:.3e}")))
}

fn random_dense_graph(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut s = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < 0.6 {
                let w = rng.random_range(0.1..1.0);
                s[i][j] = w;
                s[j][i] = w;
            }
        }
    }
    s
}

/// Running-min gap against `max{2(H(F0) − H_best), 2nL}/√(t+1)`.
pub fn nonconvex_certificate(n: usize, seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..3 {
        let dense = random_dense_graph(n, &mut rng);
        let omega = DualBoundedSet::new(n, 2, 3.0, 5.0)?;
        let (h_best, _) = oracle::best_hard_mincut(&dense, &omega);
        let obj = MinCutOracle::new(SparseAffinity::from_dense(&dense)?)?;
        let raw = random_matrix(&mut rng, n, 2, 0.0, 1.0);
        let f0 = TransportPlan::new(dykstra_project(&raw, &omega, 1e-12, 100_000)?.matrix, omega)?;
        let cfg = SolveConfig {
            step: StepRule::NonconvexCertified,
            max_iter: 500,
            gap_tol: 0.0,
            ..SolveConfig::default()
        };
        let rep = solve(&obj, &omega, &f0, &cfg)?;
        let h0 = rep.objective_trace[0];
        let scale = (2.0 * (h0 - h_best)).max(2.0 * n as f64 * obj.smoothness());
        for (t, g) in rep.running_min_gap().iter().enumerate() {
            worst = worst.max(g - scale / (t as f64 + 1.0).sqrt());
        }
    }
    Ok((worst <= 0.0, format!("max excess over bound {worst:.3e}")))
}

/// Two disjoint 5-cliques with sizes in `[4, 6]`.
pub fn two_cliques_affinity() -> Vec<Vec<f64>> {
    let mut s = vec![vec![0.0; 10]; 10];
    for i in 0..10 {
        for j in 0..10 {
            if i != j && (i < 5) == (j < 5) {
                s[i][j] = 1.0;
            }
        }
    }
    s
}

pub fn two_cliques() -> Result<(bool, String)> {
    let dense = two_cliques_affinity();
    let omega = DualBoundedSet::new(10, 2, 4.0, 6.0)?;
    let (h_best, _) = oracle::best_hard_mincut(&dense, &omega);
    let obj = MinCutOracle::new(SparseAffinity::from_dense(&dense)?)?;
    let mut warm = DenseMatrix::zeros(10, 2);
    for i in 0..10 {
        let a = if i < 5 { 0.6 } else { 0.4 };
        warm.row_mut(i).copy_from_slice(&[a, 1.0 - a]);
    }
    let f0 = TransportPlan::new(warm, omega)?;
    let cfg = SolveConfig {
        step: StepRule::LineSearch,
        ..SolveConfig::default()
    };
    let rep = solve(&obj, &omega, &f0, &cfg)?;
    let labels = crate::eval::labels_from_plan(rep.solution());
    let separated = labels[..5].iter().all(|&l| l == labels[0])
        && labels[5..].iter().all(|&l| l == labels[5])
        && labels[0] != labels[5];
    let err = (rep.solution_objective() - h_best).abs();
    Ok((
        separated && err <= 1e-6,
        format!("objective error {err:.2e}, separated={separated}"),
    ))
}

pub fn metrics_exhaustive(n: usize, max_blocks: usize) -> Result<(bool, String)> {
    let parts = oracle::set_partitions(n, max_blocks);
    let (mut acc_mismatch, mut nmi_err, mut ari_err) = (0usize, 0.0_f64, 0.0_f64);
    for p in &parts {
        for t in &parts {
            if accuracy(p, t)? != oracle::accuracy_brute(p, t) {
                acc_mismatch += 1;
            }
            nmi_err = nmi_err.max((nmi(p, t)? - oracle::nmi_brute(p, t)).abs());
            ari_err = ari_err.max((ari(p, t)? - oracle::ari_brute(p, t)).abs());
        }
    }
    Ok((
        acc_mismatch == 0 && nmi_err <= 1e-12 && ari_err <= 1e-12,
        format!(
            "{} pairs: accuracy mismatches {acc_mismatch}, nmi error {nmi_err:.2e}, ari error {ari_err:.2e}",
            parts.len() * parts.len()
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names() {
        assert_eq!("all".parse::<Suite>().unwrap(), Suite::All);
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn metrics_suite_passes() {
        for c in run(Suite::Metrics) {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
