//! The Frank-Wolfe driver over `Ω`: gradient, feasible gradient, dual gap,
//! step size, convex-combination update.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::constraints::{check_feasible, dykstra_project, DualBoundedSet, DEFAULT_FEASIBILITY_TOL};
use crate::entropic::{self, feasible_gradient_entropic};
use crate::error::{shape_mismatch, Error, Result};
use crate::linalg::DenseMatrix;

/// Gaps with magnitude below this are treated as exact zeros.
pub const GAP_ROUNDOFF: f64 = 1e-12;
/// Consecutive zero steps before the run is declared stationary.
pub const STALL_LIMIT: usize = 3;
const GOLDEN_ITERS: usize = 90;
/// Entropic plans violating the bounds by more than this are snapped back
/// into `Ω` with a Dykstra projection.
const ENTROPIC_REPAIR_TOL: f64 = 1e-9;

/// A smooth objective `H` on `n × c` plans.
pub trait Objective {
    fn value(&self, f: &DenseMatrix) -> Result<f64>;
    fn gradient(&self, f: &DenseMatrix) -> Result<DenseMatrix>;
    /// Lipschitz constant of the gradient in Frobenius norm.
    fn smoothness(&self) -> f64;
    /// Exact minimizer of `μ ↦ H((1−μ)F + μ·fg)` on `[0, 1]`, if the
    /// objective has one in closed form.
    fn line_search(&self, _f: &DenseMatrix, _fg: &DenseMatrix) -> Option<Result<f64>> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// `2/(t+2)`
    Easy,
    /// Segment minimizer (closed form when available, golden section otherwise).
    LineSearch,
    /// `min(g / (L‖fg − F‖²), 1)`
    DualGap,
    /// `min(g / (2Ln), 1)`
    NonconvexCertified,
}

/// How the feasible gradient is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Measure {
    /// Euclidean projection of `F − s·∇H` onto `Ω`; `s` defaults to `1/L`.
    Norm { scale: Option<f64>, tol: f64, max_iter: usize },
    /// Entropy-regularized linear minimization; `δ` defaults to a fraction
    /// of the gradient's range.
    InnerProduct { delta: Option<f64>, tol: f64, max_iter: usize },
}

impl Measure {
    pub fn norm() -> Self {
        Measure::Norm {
            scale: None,
            tol: 1e-10,
            max_iter: 5000,
        }
    }

    pub fn inner_product() -> Self {
        Measure::InnerProduct {
            delta: None,
            tol: entropic::DEFAULT_TOL,
            max_iter: entropic::DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveConfig {
    pub measure: Measure,
    pub step: StepRule,
    pub max_iter: usize,
    pub gap_tol: f64,
    pub seed: u64,
    /// Keep every iterate in [`SolveReport::iterates`].
    pub record_history: bool,
    /// Return the smallest-gap iterate as the solution instead of the last one.
    pub select_best_gap: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            measure: Measure::inner_product(),
            step: StepRule::Easy,
            max_iter: 500,
            gap_tol: 1e-9,
            seed: 0,
            record_history: false,
            select_best_gap: true,
        }
    }
}

/// A plan checked against its `Ω`.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    matrix: DenseMatrix,
    omega: DualBoundedSet,
}

impl TransportPlan {
    pub fn new(matrix: DenseMatrix, omega: DualBoundedSet) -> Result<Self> {
        let rep = check_feasible(&matrix, &omega, DEFAULT_FEASIBILITY_TOL)?;
        if !rep.is_feasible() {
            return Err(Error::InfeasibleStart(format!(
                "max deviation {:.3e} exceeds {:.0e}",
                rep.max_deviation(),
                DEFAULT_FEASIBILITY_TOL
            )));
        }
        Ok(Self { matrix, omega })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn omega(&self) -> &DualBoundedSet {
        &self.omega
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.matrix
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    GapTolerance,
    Stationary,
    MaxIterations,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct PhaseTimings {
    pub objective_s: f64,
    pub gradient_s: f64,
    pub feasible_gradient_s: f64,
    pub step_s: f64,
}

#[derive(Debug, Default)]
struct Timer {
    objective: Duration,
    gradient: Duration,
    feasible_gradient: Duration,
    step: Duration,
}

impl Timer {
    fn finish(&self) -> PhaseTimings {
        PhaseTimings {
            objective_s: self.objective.as_secs_f64(),
            gradient_s: self.gradient.as_secs_f64(),
            feasible_gradient_s: self.feasible_gradient.as_secs_f64(),
            step_s: self.step.as_secs_f64(),
        }
    }
}

/// Outcome of [`solve`]. Entry `k` of each trace refers to iterate `F^(k)`,
/// with `F^(0)` the starting plan.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub objective_trace: Vec<f64>,
    pub gap_trace: Vec<f64>,
    pub step_trace: Vec<f64>,
    pub best_index: usize,
    pub best: DenseMatrix,
    pub last: DenseMatrix,
    pub iterates: Vec<DenseMatrix>,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub timings: PhaseTimings,
    pub smoothness: f64,
    select_best_gap: bool,
}

impl SolveReport {
    /// The iterate chosen per [`SolveConfig::select_best_gap`].
    pub fn solution(&self) -> &DenseMatrix {
        if self.select_best_gap {
            &self.best
        } else {
            &self.last
        }
    }

    pub fn solution_objective(&self) -> f64 {
        if self.select_best_gap {
            self.objective_trace[self.best_index]
        } else {
            *self.objective_trace.last().expect("trace is never empty")
        }
    }

    /// `min_{k ≤ t} g^(k)` for every `t`.
    pub fn running_min_gap(&self) -> Vec<f64> {
        let mut m = f64::INFINITY;
        self.gap_trace
            .iter()
            .map(|&g| {
                m = m.min(g);
                m
            })
            .collect()
    }
}

/// `⟨F − fg, ∇H⟩`
pub fn dual_gap(f: &DenseMatrix, fg: &DenseMatrix, grad: &DenseMatrix) -> Result<f64> {
    if f.shape() != fg.shape() {
        return Err(shape_mismatch("dual_gap", f.shape(), fg.shape()));
    }
    if f.shape() != grad.shape() {
        return Err(shape_mismatch("dual_gap", f.shape(), grad.shape()));
    }
    Ok(f.as_slice()
        .iter()
        .zip(fg.as_slice())
        .zip(grad.as_slice())
        .map(|((a, b), g)| (a - b) * g)
        .sum())
}

fn clamp_roundoff(g: f64) -> f64 {
    if g.abs() < GAP_ROUNDOFF {
        0.0
    } else {
        g
    }
}

pub fn step_easy(t: usize) -> Result<f64> {
    if t < 1 {
        return Err(Error::InvalidInput("easy step needs t >= 1".into()));
    }
    Ok(2.0 / (t as f64 + 2.0))
}

/// `min(g / (L‖diff‖_F²), 1)`.
pub fn step_dual_gap(g: f64, l: f64, diff: &DenseMatrix) -> Result<f64> {
    let g = clamp_roundoff(g);
    if g < 0.0 {
        return Err(Error::InvalidInput(format!("dual gap must be nonnegative, got {g}")));
    }
    if g == 0.0 {
        return Ok(0.0);
    }
    let d2 = diff.frobenius_norm().powi(2);
    if d2 == 0.0 {
        return Err(Error::Numerical(format!(
            "positive gap {g} with a null direction"
        )));
    }
    Ok((g / (l * d2)).min(1.0))
}

/// `min(g / (2Ln), 1)`.
pub fn step_nonconvex(g: f64, l: f64, n: usize) -> Result<f64> {
    let g = clamp_roundoff(g);
    if g < 0.0 {
        return Err(Error::InvalidInput(format!("dual gap must be nonnegative, got {g}")));
    }
    Ok((g / (2.0 * l * n as f64)).min(1.0))
}

/// `(1 − μ)F + μ·fg`.
pub fn dnf_step(f: &DenseMatrix, fg: &DenseMatrix, mu: f64) -> Result<DenseMatrix> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::InvalidStep(mu));
    }
    if f.shape() != fg.shape() {
        return Err(shape_mismatch("dnf_step", f.shape(), fg.shape()));
    }
    let data = f
        .as_slice()
        .iter()
        .zip(fg.as_slice())
        .map(|(a, b)| (1.0 - mu) * a + mu * b)
        .collect();
    DenseMatrix::new(f.rows(), f.cols(), data)
}

/// Feasible gradient of `grad` at `f` under `measure`.
pub fn feasible_gradient(
    f: &DenseMatrix,
    grad: &DenseMatrix,
    omega: &DualBoundedSet,
    measure: &Measure,
    smoothness: f64,
) -> Result<DenseMatrix> {
    match *measure {
        Measure::Norm { scale, tol, max_iter } => {
            let s = scale.unwrap_or(1.0 / smoothness);
            let mut target = f.clone();
            target.axpy(-s, grad)?;
            Ok(dykstra_project(&target, omega, tol, max_iter)?.matrix)
        }
        Measure::InnerProduct { delta, tol, max_iter } => {
            let delta = delta.unwrap_or_else(|| entropic::default_delta(grad));
            let p = feasible_gradient_entropic(grad, omega, delta, tol, max_iter)?.plan;
            if check_feasible(&p, omega, ENTROPIC_REPAIR_TOL)?.is_feasible() {
                Ok(p)
            } else {
                Ok(dykstra_project(&p, omega, 1e-11, 10_000)?.matrix)
            }
        }
    }
}

/// Golden-section minimizer of `φ` on `[0, 1]`, compared against both endpoints.
fn golden_section(phi: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (phi(x1)?, phi(x2)?);
    for _ in 0..GOLDEN_ITERS {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = phi(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = phi(x2)?;
        }
    }
    let mid = 0.5 * (a + b);
    let mut best = (phi(0.0)?, 0.0);
    for x in [mid, 1.0] {
        let v = phi(x)?;
        if v < best.0 {
            best = (v, x);
        }
    }
    Ok(best.1)
}

fn line_search<O: Objective + ?Sized>(obj: &O, f: &DenseMatrix, fg: &DenseMatrix) -> Result<f64> {
    match obj.line_search(f, fg) {
        Some(mu) => mu,
        None => golden_section(|mu| obj.value(&dnf_step(f, fg, mu)?)),
    }
}

/// Runs the Frank-Wolfe iteration from `f0`.
pub fn solve<O: Objective + ?Sized>(
    obj: &O,
    omega: &DualBoundedSet,
    f0: &TransportPlan,
    config: &SolveConfig,
) -> Result<SolveReport> {
    if config.max_iter < 1 {
        return Err(Error::InvalidInput("max_iter must be at least 1".into()));
    }
    omega.check_shape(f0.matrix(), "solve")?;
    let rep = check_feasible(f0.matrix(), omega, DEFAULT_FEASIBILITY_TOL)?;
    if !rep.is_feasible() {
        return Err(Error::InfeasibleStart(format!(
            "max deviation {:.3e} for this Ω",
            rep.max_deviation()
        )));
    }
    let l = obj.smoothness();
    if !(l.is_finite() && l > 0.0) {
        return Err(Error::InvalidInput(format!("smoothness must be positive, got {l}")));
    }
    let n = omega.n();
    let mut timer = Timer::default();
    let mut f = f0.matrix().clone();
    let mut objective_trace = Vec::new();
    let mut gap_trace = Vec::new();
    let mut step_trace = Vec::new();
    let mut iterates = Vec::new();
    let mut best = (f64::INFINITY, 0, f.clone());
    let mut zero_steps = 0;
    let mut stop_reason = StopReason::MaxIterations;
    let mut k = 0;
    loop {
        let t0 = Instant::now();
        let value = obj.value(&f)?;
        timer.objective += t0.elapsed();

        let t0 = Instant::now();
        let grad = obj.gradient(&f)?;
        timer.gradient += t0.elapsed();
        if grad.shape() != f.shape() {
            return Err(shape_mismatch("objective gradient", f.shape(), grad.shape()));
        }

        let t0 = Instant::now();
        let fg = feasible_gradient(&f, &grad, omega, &config.measure, l)?;
        timer.feasible_gradient += t0.elapsed();

        let gap = clamp_roundoff(dual_gap(&f, &fg, &grad)?);
        objective_trace.push(value);
        gap_trace.push(gap);
        if config.record_history {
            iterates.push(f.clone());
        }
        if gap.abs() < best.0 {
            best = (gap.abs(), k, f.clone());
        }
        if gap.abs() <= config.gap_tol {
            stop_reason = StopReason::GapTolerance;
            break;
        }
        if k == config.max_iter {
            break;
        }

        let t0 = Instant::now();
        let g = gap.max(0.0);
        let mu = match config.step {
            StepRule::Easy => step_easy(k + 1)?,
            StepRule::LineSearch => line_search(obj, &f, &fg)?,
            StepRule::DualGap => step_dual_gap(g, l, &fg.sub(&f)?)?,
            StepRule::NonconvexCertified => step_nonconvex(g, l, n)?,
        };
        f = dnf_step(&f, &fg, mu)?;
        timer.step += t0.elapsed();
        step_trace.push(mu);
        k += 1;

        if mu == 0.0 {
            zero_steps += 1;
            if zero_steps >= STALL_LIMIT {
                stop_reason = StopReason::Stationary;
                // Record the final iterate so every trace ends on `last`.
                let value = obj.value(&f)?;
                let grad = obj.gradient(&f)?;
                let fg = feasible_gradient(&f, &grad, omega, &config.measure, l)?;
                let gap = clamp_roundoff(dual_gap(&f, &fg, &grad)?);
                objective_trace.push(value);
                gap_trace.push(gap);
                if config.record_history {
                    iterates.push(f.clone());
                }
                if gap.abs() < best.0 {
                    best = (gap.abs(), k, f.clone());
                }
                break;
            }
        } else {
            zero_steps = 0;
        }
    }
    Ok(SolveReport {
        objective_trace,
        gap_trace,
        step_trace,
        best_index: best.1,
        best: best.2,
        last: f,
        iterates,
        iterations: k,
        stop_reason,
        timings: timer.finish(),
        smoothness: l,
        select_best_gap: config.select_best_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::DualBoundedSet;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// `H(F) = ½‖F − T‖²`, gradient `F − T`, `L = 1`.
    struct Quadratic(DenseMatrix);

    impl Objective for Quadratic {
        fn value(&self, f: &DenseMatrix) -> Result<f64> {
            Ok(0.5 * f.sub(&self.0)?.frobenius_norm().powi(2))
        }
        fn gradient(&self, f: &DenseMatrix) -> Result<DenseMatrix> {
            f.sub(&self.0)
        }
        fn smoothness(&self) -> f64 {
            1.0
        }
    }

    struct Flat;

    impl Objective for Flat {
        fn value(&self, _f: &DenseMatrix) -> Result<f64> {
            Ok(3.0)
        }
        fn gradient(&self, f: &DenseMatrix) -> Result<DenseMatrix> {
            Ok(DenseMatrix::zeros(f.rows(), f.cols()))
        }
        fn smoothness(&self) -> f64 {
            1.0
        }
    }

    fn random(n: usize, c: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        DenseMatrix::new(n, c, (0..n * c).map(|_| rng.random::<f64>()).collect()).unwrap()
    }

    #[test]
    fn gap_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random(5, 3, &mut rng);
        let fg = random(5, 3, &mut rng);
        let g = random(5, 3, &mut rng);
        assert_eq!(dual_gap(&f, &f, &g).unwrap(), 0.0);
        let mut direct = 0.0;
        for i in 0..5 {
            for j in 0..3 {
                direct += (f.get(i, j) - fg.get(i, j)) * g.get(i, j);
            }
        }
        assert!((dual_gap(&f, &fg, &g).unwrap() - direct).abs() < 1e-12);
        assert!(dual_gap(&f, &DenseMatrix::zeros(4, 3), &g).is_err());
    }

    #[test]
    fn step_examples() {
        assert_eq!(step_easy(1).unwrap(), 2.0 / 3.0);
        assert_eq!(step_easy(2).unwrap(), 0.5);
        assert!((step_easy(198).unwrap() - 0.01).abs() < 1e-15);
        assert!(step_easy(0).is_err());

        let diff = DenseMatrix::from_rows(&[[2.0, 0.0]]).unwrap();
        assert_eq!(step_dual_gap(0.0, 2.0, &diff).unwrap(), 0.0);
        assert_eq!(step_dual_gap(1e6, 2.0, &diff).unwrap(), 1.0);
        assert_eq!(step_dual_gap(1.0, 2.0, &diff).unwrap(), 0.125);
        assert_eq!(step_dual_gap(-1e-14, 2.0, &diff).unwrap(), 0.0);
        assert!(step_dual_gap(1.0, 2.0, &DenseMatrix::zeros(1, 2)).is_err());

        assert_eq!(step_nonconvex(0.0, 3.0, 5).unwrap(), 0.0);
        assert_eq!(step_nonconvex(60.0, 3.0, 5).unwrap(), 1.0);
        assert_eq!(step_nonconvex(15.0, 3.0, 5).unwrap(), 0.5);
    }

    #[test]
    fn dnf_step_examples() {
        let omega = DualBoundedSet::new(4, 2, 1.0, 3.0).unwrap();
        let f = omega.uniform_plan();
        let fg = DenseMatrix::from_rows(&[[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]]).unwrap();
        assert_eq!(dnf_step(&f, &fg, 0.0).unwrap(), f);
        assert_eq!(dnf_step(&f, &fg, 1.0).unwrap(), fg);
        let mid = dnf_step(&f, &fg, 0.5).unwrap();
        assert_eq!(mid.get(0, 0), 0.75);
        assert!(check_feasible(&mid, &omega, 1e-12).unwrap().is_feasible());
        assert!(matches!(dnf_step(&f, &fg, 1.5), Err(Error::InvalidStep(_))));
    }

    #[test]
    fn golden_section_finds_parabola_vertex() {
        let mu = golden_section(|x| Ok((x - 0.3).powi(2))).unwrap();
        assert!((mu - 0.3).abs() < 1e-8);
        assert_eq!(golden_section(|x| Ok(-x)).unwrap(), 1.0);
    }

    #[test]
    fn flat_objective_stops_immediately() {
        let omega = DualBoundedSet::new(6, 3, 1.0, 3.0).unwrap();
        let f0 = TransportPlan::new(omega.uniform_plan(), omega).unwrap();
        for measure in [Measure::norm(), Measure::inner_product()] {
            let cfg = SolveConfig {
                measure,
                ..SolveConfig::default()
            };
            let rep = solve(&Flat, &omega, &f0, &cfg).unwrap();
            assert_eq!(rep.iterations, 0);
            assert_eq!(rep.gap_trace, vec![0.0]);
            assert_eq!(rep.stop_reason, StopReason::GapTolerance);
            assert_eq!(&rep.last, f0.matrix());
        }
    }

    #[test]
    fn infeasible_start_rejected() {
        let omega = DualBoundedSet::new(4, 2, 1.0, 3.0).unwrap();
        assert!(TransportPlan::new(DenseMatrix::filled(4, 2, 0.6), omega).is_err());
    }

    #[test]
    fn quadratic_reaches_projection() {
        // The minimizer of ½‖F − T‖² over Ω is the projection of T.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let omega = DualBoundedSet::new(5, 2, 2.0, 3.0).unwrap();
        let target = random(5, 2, &mut rng).scaled(2.0);
        let want = crate::oracle::project_active_set(&target, &omega).unwrap();
        let f0 = TransportPlan::new(omega.uniform_plan(), omega).unwrap();
        let obj = Quadratic(target);
        for step in [StepRule::LineSearch, StepRule::DualGap] {
            let cfg = SolveConfig {
                measure: Measure::norm(),
                step,
                max_iter: 2000,
                ..SolveConfig::default()
            };
            let rep = solve(&obj, &omega, &f0, &cfg).unwrap();
            let err = rep.solution().distance(&want).unwrap();
            assert!(err < 1e-4, "{step:?}: {err}");
        }
    }

    #[test]
    fn best_index_is_gap_argmin() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let omega = DualBoundedSet::new(6, 2, 2.0, 4.0).unwrap();
        let obj = Quadratic(random(6, 2, &mut rng));
        let f0 = TransportPlan::new(omega.uniform_plan(), omega).unwrap();
        let cfg = SolveConfig {
            max_iter: 40,
            ..SolveConfig::default()
        };
        let rep = solve(&obj, &omega, &f0, &cfg).unwrap();
        let (arg, _) = rep
            .gap_trace
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (k, &g)| if g.abs() < acc.1 { (k, g.abs()) } else { acc });
        assert_eq!(rep.best_index, arg);
    }
}
