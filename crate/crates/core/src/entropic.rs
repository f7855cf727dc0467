//! Entropy-regularized linear minimization over `Ω`.
//!
//! Solves `min_{P ∈ Ω} ⟨G, P⟩ + δ Σ P log P` by scaling a Gibbs kernel with
//! three vectors: `u` enforces unit row sums, `v ≥ 1` lifts columns that
//! would fall below `b_l`, and `w ≤ 1` shrinks columns that would exceed
//! `b_u`. The clamps at 1 encode the signs of the inequality multipliers, so
//! each update is an exact block-coordinate step on the dual.

use crate::constraints::DualBoundedSet;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 5000;
const DEFAULT_DELTA_FRACTION: f64 = 0.05;

/// `δ = 0.05 · (max G − min G + 1e-12)`.
pub fn default_delta(grad: &DenseMatrix) -> f64 {
    let (lo, hi) = grad
        .as_slice()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &g| (lo.min(g), hi.max(g)));
    if !lo.is_finite() {
        return DEFAULT_DELTA_FRACTION * 1e-12;
    }
    DEFAULT_DELTA_FRACTION * (hi - lo + 1e-12)
}

/// Scaling vectors and the row-shifted kernel `K_ij = exp(−(G_ij − min_k G_ik)/δ)`.
#[derive(Debug, Clone)]
pub struct ScalingState {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub kernel: DenseMatrix,
}

impl ScalingState {
    fn new(grad: &DenseMatrix, delta: f64) -> Self {
        let (n, c) = grad.shape();
        let mut kernel = DenseMatrix::zeros(n, c);
        for i in 0..n {
            let row = grad.row(i);
            let min = row.iter().copied().fold(f64::INFINITY, f64::min);
            for (k, g) in kernel.row_mut(i).iter_mut().zip(row) {
                *k = (-(g - min) / delta).exp();
            }
        }
        Self {
            u: vec![1.0; n],
            v: vec![1.0; c],
            w: vec![1.0; c],
            kernel,
        }
    }

    fn update_u(&mut self) {
        let c = self.v.len();
        for (i, u) in self.u.iter_mut().enumerate() {
            let row = self.kernel.row(i);
            let denom: f64 = (0..c).map(|j| row[j] * self.v[j] * self.w[j]).sum();
            *u = 1.0 / denom;
        }
    }

    /// `Kᵀu`
    fn column_marginal(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.v.len()];
        for (i, &u) in self.u.iter().enumerate() {
            for (mj, k) in m.iter_mut().zip(self.kernel.row(i)) {
                *mj += u * k;
            }
        }
        m
    }

    /// `diag(u) K diag(v ⊙ w)`
    pub fn plan(&self) -> DenseMatrix {
        let (n, c) = self.kernel.shape();
        let mut p = DenseMatrix::zeros(n, c);
        for i in 0..n {
            let ui = self.u[i];
            let krow = self.kernel.row(i);
            for (j, out) in p.row_mut(i).iter_mut().enumerate() {
                *out = ui * krow[j] * self.v[j] * self.w[j];
            }
        }
        p
    }
}

#[derive(Debug, Clone)]
pub struct EntropicPlan {
    pub plan: DenseMatrix,
    pub state: ScalingState,
    pub iterations: usize,
    pub converged: bool,
}

fn max_rel_change(new: &[f64], old: &[f64]) -> f64 {
    new.iter()
        .zip(old)
        .map(|(a, b)| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

/// Entropic feasible direction for gradient `grad`.
///
/// Iterates the `u`, `v`, `w` updates until the largest relative change in
/// any scaling vector drops below `tol`, then recomputes `u` once more so
/// the returned plan has unit row sums to rounding.
pub fn feasible_gradient_entropic(
    grad: &DenseMatrix,
    omega: &DualBoundedSet,
    delta: f64,
    tol: f64,
    max_iter: usize,
) -> Result<EntropicPlan> {
    omega.check_shape(grad, "feasible_gradient_entropic")?;
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidInput(format!("delta must be positive, got {delta}")));
    }
    let mut st = ScalingState::new(grad, delta);
    let (b_l, b_u) = (omega.lower(), omega.upper());
    let mut iterations = 0;
    let mut converged = false;
    for k in 1..=max_iter {
        iterations = k;
        let (u_old, v_old, w_old) = (st.u.clone(), st.v.clone(), st.w.clone());
        st.update_u();
        let m = st.column_marginal();
        for j in 0..m.len() {
            st.v[j] = (b_l / (m[j] * st.w[j])).max(1.0);
            st.w[j] = (b_u / (m[j] * st.v[j])).min(1.0);
        }
        if st.u.iter().chain(&st.v).chain(&st.w).any(|x| !x.is_finite()) || m.contains(&0.0) {
            return Err(Error::KernelOverflow(format!(
                "scaling vectors left the representable range at δ={delta}; \
                 increase δ (the kernel is already row-shifted)"
            )));
        }
        if k > 1
            && max_rel_change(&st.u, &u_old)
                .max(max_rel_change(&st.v, &v_old))
                .max(max_rel_change(&st.w, &w_old))
                < tol
        {
            converged = true;
            break;
        }
    }
    st.update_u();
    let plan = st.plan();
    Ok(EntropicPlan {
        plan,
        state: st,
        iterations,
        converged,
    })
}
