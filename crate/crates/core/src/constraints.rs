//! The dual-bounded set `Ω = {X : X1 = 1, b_l ≤ Xᵀ1 ≤ b_u, X ≥ 0}` and the
//! Euclidean projection onto it.
//!
//! `Ω` is split into three simple sets, each with a closed-form projection:
//! row-wise simplices (`Ω₁`), column-sum lower bounds (`Ω₂`) and column-sum
//! upper bounds (`Ω₃`). [`dykstra_project`] combines them with Dykstra's
//! correction terms so the limit is the projection onto the intersection,
//! not merely a point inside it.

use serde::Serialize;

use crate::error::{shape_mismatch, Error, Result};
use crate::linalg::DenseMatrix;

pub const DEFAULT_FEASIBILITY_TOL: f64 = 1e-8;
pub const DEFAULT_DYKSTRA_TOL: f64 = 1e-8;
pub const DEFAULT_DYKSTRA_MAX_ITER: usize = 1000;

const NEWTON_MAX_ITER: usize = 100;
const NEWTON_TOL: f64 = 1e-12;

/// Plans with `n` unit-sum rows over `c` columns whose sums lie in `[b_l, b_u]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualBoundedSet {
    n: usize,
    c: usize,
    b_l: f64,
    b_u: f64,
}

impl DualBoundedSet {
    pub fn new(n: usize, c: usize, b_l: f64, b_u: f64) -> Result<Self> {
        if c < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 clusters, got c={c}")));
        }
        if n < c {
            return Err(Error::InvalidInput(format!("need n >= c, got n={n}, c={c}")));
        }
        if !(b_l.is_finite() && b_u.is_finite()) || b_l < 0.0 || b_l > b_u {
            return Err(Error::InvalidInput(format!(
                "bounds must satisfy 0 <= b_l <= b_u, got b_l={b_l}, b_u={b_u}"
            )));
        }
        let slack = 1e-12 * n as f64;
        let nf = n as f64;
        if c as f64 * b_l > nf + slack || c as f64 * b_u < nf - slack {
            return Err(Error::EmptyConstraintSet { n, c, b_l, b_u });
        }
        Ok(Self { n, c, b_l, b_u })
    }

    /// Column sums unconstrained beyond what the row constraints imply.
    pub fn rows_only(n: usize, c: usize) -> Result<Self> {
        Self::new(n, c, 0.0, n as f64)
    }

    /// `b_l = floor((1 − slack)·n/c)`, `b_u = ceil((1 + slack)·n/c)`.
    pub fn with_slack(n: usize, c: usize, slack: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&slack) {
            return Err(Error::InvalidInput(format!("slack must lie in [0, 1], got {slack}")));
        }
        let target = n as f64 / c as f64;
        let b_l = ((1.0 - slack) * target).floor().max(0.0);
        let b_u = ((1.0 + slack) * target).ceil();
        Self::new(n, c, b_l, b_u)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn c(&self) -> usize {
        self.c
    }

    #[inline]
    pub fn lower(&self) -> f64 {
        self.b_l
    }

    #[inline]
    pub fn upper(&self) -> f64 {
        self.b_u
    }

    pub fn check_shape(&self, m: &DenseMatrix, op: &'static str) -> Result<()> {
        if m.shape() != (self.n, self.c) {
            return Err(shape_mismatch(op, (self.n, self.c), m.shape()));
        }
        Ok(())
    }

    /// The plan with every entry `1/c`; always a member of a nonempty `Ω`.
    pub fn uniform_plan(&self) -> DenseMatrix {
        DenseMatrix::filled(self.n, self.c, 1.0 / self.c as f64)
    }
}

/// Deviations of a matrix from membership in `Ω`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub max_row_deviation: f64,
    pub max_negativity: f64,
    pub column_sums: Vec<f64>,
    /// Per column, `max(b_l − sum, sum − b_u, 0)`.
    pub bound_violations: Vec<f64>,
    pub tol: f64,
}

impl FeasibilityReport {
    pub fn max_bound_violation(&self) -> f64 {
        self.bound_violations.iter().fold(0.0_f64, |m, v| m.max(*v))
    }

    pub fn max_deviation(&self) -> f64 {
        self.max_row_deviation
            .max(self.max_negativity)
            .max(self.max_bound_violation())
    }

    pub fn is_feasible(&self) -> bool {
        self.max_deviation() <= self.tol
    }
}

pub fn check_feasible(f: &DenseMatrix, omega: &DualBoundedSet, tol: f64) -> Result<FeasibilityReport> {
    omega.check_shape(f, "check_feasible")?;
    let max_row_deviation = f
        .row_sums()
        .iter()
        .fold(0.0_f64, |m, s| m.max((s - 1.0).abs()));
    let max_negativity = f.as_slice().iter().fold(0.0_f64, |m, v| m.max(-v));
    let column_sums = f.col_sums();
    let bound_violations = column_sums
        .iter()
        .map(|&s| (omega.b_l - s).max(s - omega.b_u).max(0.0))
        .collect();
    Ok(FeasibilityReport {
        max_row_deviation,
        max_negativity,
        column_sums,
        bound_violations,
        tol,
    })
}

/// Euclidean projection of `v` onto the probability simplex.
///
/// Solves `Σ_j (v_j + η)_+ = 1` for `η` with Newton's method on the
/// piecewise-linear residual, starting from the mean shift
/// `η₀ = (1 − Σv)/c`. Newton converges from that side without overshoot; if
/// it has not settled after 100 steps the sort-based projection is used.
pub fn project_row_simplex(v: &[f64]) -> Vec<f64> {
    let c = v.len();
    if c == 0 {
        return Vec::new();
    }
    let shift = (1.0 - v.iter().sum::<f64>()) / c as f64;
    let v0: Vec<f64> = v.iter().map(|x| x + shift).collect();
    if v0.iter().all(|&x| x >= 0.0) {
        return v0;
    }
    // f(λ) = Σ(v0 − λ)_+ − 1 is convex and decreasing with f(0) ≥ 0, so the
    // Newton iterates increase monotonically to the root.
    let mut lambda = 0.0;
    for _ in 0..NEWTON_MAX_ITER {
        let (sum_pos, npos) = v0
            .iter()
            .map(|x| x - lambda)
            .filter(|&x| x > 0.0)
            .fold((0.0, 0usize), |(s, k), x| (s + x, k + 1));
        let f = sum_pos - 1.0;
        if f.abs() <= NEWTON_TOL {
            return v0.iter().map(|x| (x - lambda).max(0.0)).collect();
        }
        if npos == 0 {
            break;
        }
        lambda += f / npos as f64;
    }
    project_row_simplex_sorted(v)
}

/// Exact simplex projection by sorting (Held–Wolfe–Crowder / Duchi et al.).
pub fn project_row_simplex_sorted(v: &[f64]) -> Vec<f64> {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cumsum += uk;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Projection onto `{q : Σq ≥ b_l}`.
pub fn project_col_lower(q: &[f64], b_l: f64) -> Vec<f64> {
    let sum: f64 = q.iter().sum();
    if sum >= b_l {
        return q.to_vec();
    }
    let shift = (b_l - sum) / q.len() as f64;
    q.iter().map(|x| x + shift).collect()
}

/// Projection onto `{q : Σq ≤ b_u}`.
pub fn project_col_upper(q: &[f64], b_u: f64) -> Vec<f64> {
    let sum: f64 = q.iter().sum();
    if sum <= b_u {
        return q.to_vec();
    }
    let shift = (sum - b_u) / q.len() as f64;
    q.iter().map(|x| x - shift).collect()
}

fn project_rows_in_place(m: &mut DenseMatrix) {
    for i in 0..m.rows() {
        let p = project_row_simplex(m.row(i));
        m.row_mut(i).copy_from_slice(&p);
    }
}

fn project_columns_in_place(m: &mut DenseMatrix, bound: f64, lower: bool) {
    let n = m.rows() as f64;
    for (j, s) in m.col_sums().into_iter().enumerate() {
        if (lower && s >= bound) || (!lower && s <= bound) {
            continue;
        }
        let shift = (bound - s) / n;
        for i in 0..m.rows() {
            let v = m.get(i, j);
            m.set(i, j, v + shift);
        }
    }
}

/// Result of [`dykstra_project`].
#[derive(Debug, Clone)]
pub struct Projection {
    pub matrix: DenseMatrix,
    pub iterations: usize,
    /// `false` when `max_iter` ran out first; the matrix is then the last
    /// iterate and only approximately the projection.
    pub converged: bool,
}

/// Euclidean projection of `m` onto `Ω` by Dykstra's algorithm.
///
/// Each sweep projects onto `Ω₁`, `Ω₂`, `Ω₃` in that order, each time adding
/// back that set's correction term first. The sweep stops once neither the
/// iterate nor any correction term moves by `tol` or more (Frobenius) and the
/// iterate is feasible to `tol`. The iterate alone can stall for a sweep
/// while the corrections are still changing, e.g. when `b_l = b_u`.
pub fn dykstra_project(
    m: &DenseMatrix,
    omega: &DualBoundedSet,
    tol: f64,
    max_iter: usize,
) -> Result<Projection> {
    omega.check_shape(m, "dykstra_project")?;
    let (n, c) = m.shape();
    let mut x = m.clone();
    let mut z = [
        DenseMatrix::zeros(n, c),
        DenseMatrix::zeros(n, c),
        DenseMatrix::zeros(n, c),
    ];
    for iter in 1..=max_iter {
        let prev = x.clone();
        let mut z_moved = 0.0_f64;
        for (k, zk) in z.iter_mut().enumerate() {
            let mut y = x;
            y.axpy(1.0, zk)?;
            let mut p = y.clone();
            match k {
                0 => project_rows_in_place(&mut p),
                1 => project_columns_in_place(&mut p, omega.b_l, true),
                _ => project_columns_in_place(&mut p, omega.b_u, false),
            }
            let z_new = y.sub(&p)?;
            z_moved = z_moved.max(z_new.distance(zk)?);
            *zk = z_new;
            x = p;
        }
        let moved = x.distance(&prev)?;
        if moved < tol && z_moved < tol && check_feasible(&x, omega, tol)?.is_feasible() {
            return Ok(Projection {
                matrix: x,
                iterations: iter,
                converged: true,
            });
        }
    }
    Ok(Projection {
        matrix: x,
        iterations: max_iter,
        converged: false,
    })
}
