//! Reference implementations used to check the solver.
//!
//! Everything here is deliberately slow and shares no code path with the
//! routines it checks: projections are solved as generic quadratic programs,
//! linear subproblems and min-cut optima by enumerating hard assignments, and
//! clustering metrics by pair and permutation enumeration.

use nalgebra::{DMatrix, DVector};

use crate::constraints::DualBoundedSet;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Inequality `aᵀx ≥ b` over the flattened row-major plan.
#[derive(Debug, Clone)]
struct Halfspace {
    a: DVector<f64>,
    b: f64,
}

fn omega_constraints(omega: &DualBoundedSet) -> (DMatrix<f64>, DVector<f64>, Vec<Halfspace>) {
    let (n, c) = (omega.n(), omega.c());
    let dim = n * c;
    let mut eq = DMatrix::zeros(n, dim);
    for i in 0..n {
        for j in 0..c {
            eq[(i, i * c + j)] = 1.0;
        }
    }
    let beq = DVector::from_element(n, 1.0);
    let mut ineq = Vec::new();
    for k in 0..dim {
        let mut a = DVector::zeros(dim);
        a[k] = 1.0;
        ineq.push(Halfspace { a, b: 0.0 });
    }
    for j in 0..c {
        let mut a = DVector::zeros(dim);
        for i in 0..n {
            a[i * c + j] = 1.0;
        }
        ineq.push(Halfspace {
            a: a.clone(),
            b: omega.lower(),
        });
        ineq.push(Halfspace {
            a: -a,
            b: -omega.upper(),
        });
    }
    (eq, beq, ineq)
}

fn flatten(m: &DenseMatrix) -> DVector<f64> {
    DVector::from_row_slice(m.as_slice())
}

fn unflatten(v: &DVector<f64>, n: usize, c: usize) -> Result<DenseMatrix> {
    DenseMatrix::new(n, c, v.iter().copied().collect())
}

/// Projects `m` onto the affine set `{x : A x = b}`; `None` if `A` is
/// rank-deficient.
fn affine_projection(m: &DVector<f64>, a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let gram = a * a.transpose();
    let chol = gram.clone().cholesky()?;
    // Cholesky can succeed on a numerically singular Gram matrix; reject tiny pivots.
    let l = chol.l();
    let max_diag = (0..l.nrows()).map(|i| l[(i, i)]).fold(0.0_f64, f64::max);
    if (0..l.nrows()).any(|i| l[(i, i)] <= 1e-7 * max_diag.max(1.0)) {
        return None;
    }
    let resid = a * m - b;
    let lam = chol.solve(&resid);
    Some(m - a.transpose() * lam)
}

fn stack(eq: &DMatrix<f64>, beq: &DVector<f64>, active: &[&Halfspace]) -> (DMatrix<f64>, DVector<f64>) {
    let rows = eq.nrows() + active.len();
    let mut a = DMatrix::zeros(rows, eq.ncols());
    let mut b = DVector::zeros(rows);
    a.rows_mut(0, eq.nrows()).copy_from(eq);
    b.rows_mut(0, eq.nrows()).copy_from(beq);
    for (k, h) in active.iter().enumerate() {
        a.row_mut(eq.nrows() + k).copy_from(&h.a.transpose());
        b[eq.nrows() + k] = h.b;
    }
    (a, b)
}

/// Projection onto `Ω` by enumerating every subset of inequality
/// constraints as the active set and keeping the closest primal-feasible
/// candidate. Limited to at most 16 inequalities (`n·c + 2c ≤ 16`).
pub fn project_exhaustive(m: &DenseMatrix, omega: &DualBoundedSet) -> Result<DenseMatrix> {
    omega.check_shape(m, "project_exhaustive")?;
    let (eq, beq, ineq) = omega_constraints(omega);
    if ineq.len() > 16 {
        return Err(Error::InvalidInput(format!(
            "exhaustive projection limited to 16 inequalities, got {}",
            ineq.len()
        )));
    }
    let target = flatten(m);
    let mut best: Option<(f64, DVector<f64>)> = None;
    for mask in 0u32..(1 << ineq.len()) {
        let active: Vec<&Halfspace> = ineq
            .iter()
            .enumerate()
            .filter(|(k, _)| mask & (1 << k) != 0)
            .map(|(_, h)| h)
            .collect();
        let (a, b) = stack(&eq, &beq, &active);
        let Some(x) = affine_projection(&target, &a, &b) else {
            continue;
        };
        if ineq.iter().any(|h| h.a.dot(&x) < h.b - 1e-10) {
            continue;
        }
        let d = (&x - &target).norm();
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, x));
        }
    }
    let (_, x) = best.ok_or_else(|| Error::Numerical("no feasible active set".into()))?;
    unflatten(&x, omega.n(), omega.c())
}

/// Projection onto `Ω` with a primal active-set method for the quadratic
/// program `min ½‖x − m‖²`, started from the uniform plan.
pub fn project_active_set(m: &DenseMatrix, omega: &DualBoundedSet) -> Result<DenseMatrix> {
    omega.check_shape(m, "project_active_set")?;
    let (eq, beq, ineq) = omega_constraints(omega);
    let target = flatten(m);
    let mut x = flatten(&omega.uniform_plan());
    let mut working: Vec<usize> = Vec::new();
    for _ in 0..100_000 {
        let active: Vec<&Halfspace> = working.iter().map(|&k| &ineq[k]).collect();
        let (a, _) = stack(&eq, &beq, &active);
        let g = &x - &target;
        let gram = &a * a.transpose();
        let chol = gram
            .cholesky()
            .ok_or_else(|| Error::Numerical("dependent working set".into()))?;
        let lam = chol.solve(&(&a * &g));
        let p = -(&g - a.transpose() * &lam);
        if p.norm() <= 1e-12 {
            // Multipliers of the inequality rows sit after the equality rows.
            let worst = working
                .iter()
                .enumerate()
                .map(|(k, _)| (k, lam[eq.nrows() + k]))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match worst {
                Some((k, l)) if l < -1e-12 => {
                    working.remove(k);
                }
                _ => return unflatten(&x, omega.n(), omega.c()),
            }
            continue;
        }
        let mut alpha = 1.0;
        let mut blocking = None;
        for (k, h) in ineq.iter().enumerate() {
            if working.contains(&k) {
                continue;
            }
            let ap = h.a.dot(&p);
            if ap < -1e-12 * p.norm() * h.a.norm() {
                let step = ((h.b - h.a.dot(&x)) / ap).max(0.0);
                if step < alpha {
                    alpha = step;
                    blocking = Some(k);
                }
            }
        }
        x += alpha * &p;
        if let Some(k) = blocking {
            working.push(k);
        }
    }
    Err(Error::Numerical("active-set method did not terminate".into()))
}

/// Calls `visit` on every hard assignment of `n` items to `c` clusters whose
/// cluster sizes lie in `[lo, hi]`.
pub fn for_each_assignment(n: usize, c: usize, lo: usize, hi: usize, mut visit: impl FnMut(&[usize])) {
    fn rec(
        i: usize,
        n: usize,
        c: usize,
        lo: usize,
        hi: usize,
        labels: &mut Vec<usize>,
        counts: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if i == n {
            if counts.iter().all(|&k| k >= lo) {
                visit(labels);
            }
            return;
        }
        let remaining = n - i;
        let deficit: usize = counts.iter().map(|&k| lo.saturating_sub(k)).sum();
        if deficit > remaining {
            return;
        }
        for j in 0..c {
            if counts[j] < hi {
                counts[j] += 1;
                labels.push(j);
                rec(i + 1, n, c, lo, hi, labels, counts, visit);
                labels.pop();
                counts[j] -= 1;
            }
        }
    }
    let mut labels = Vec::with_capacity(n);
    let mut counts = vec![0; c];
    rec(0, n, c, lo, hi, &mut labels, &mut counts, &mut visit);
}

/// Integer cluster-size range implied by the real bounds of `Ω`.
pub fn count_bounds(omega: &DualBoundedSet) -> (usize, usize) {
    let lo = (omega.lower() - 1e-9).ceil().max(0.0) as usize;
    let hi = ((omega.upper() + 1e-9).floor() as usize).min(omega.n());
    (lo, hi)
}

/// `min_{X ∈ Ω} ⟨G, X⟩` by enumerating hard assignments.
///
/// The constraint matrix of `Ω` is that of a bounded bipartite flow and is
/// totally unimodular, so with integer bounds some optimal vertex is a hard
/// assignment and this value is the exact linear-program optimum.
pub fn lp_min_over_omega(grad: &DenseMatrix, omega: &DualBoundedSet) -> Result<(f64, Vec<usize>)> {
    omega.check_shape(grad, "lp_min_over_omega")?;
    let (lo, hi) = count_bounds(omega);
    let mut best = (f64::INFINITY, Vec::new());
    for_each_assignment(omega.n(), omega.c(), lo, hi, |labels| {
        let v: f64 = labels.iter().enumerate().map(|(i, &j)| grad.get(i, j)).sum();
        if v < best.0 {
            best = (v, labels.to_vec());
        }
    });
    if best.1.is_empty() {
        return Err(Error::Numerical("no integral assignment satisfies the bounds".into()));
    }
    Ok(best)
}

/// Minimum of `−Σ_{i,j same cluster} s_ij` over size-feasible hard
/// assignments, from a dense affinity.
pub fn best_hard_mincut(s: &[Vec<f64>], omega: &DualBoundedSet) -> (f64, Vec<usize>) {
    let (lo, hi) = count_bounds(omega);
    let n = omega.n();
    let mut best = (f64::INFINITY, Vec::new());
    for_each_assignment(n, omega.c(), lo, hi, |labels| {
        let mut within = 0.0;
        for i in 0..n {
            for k in 0..n {
                if labels[i] == labels[k] {
                    within += s[i][k];
                }
            }
        }
        if -within < best.0 {
            best = (-within, labels.to_vec());
        }
    });
    best
}

/// Every partition of `n` items into at most `max_blocks` blocks, as
/// restricted-growth label strings (block ids in order of first use).
pub fn set_partitions(n: usize, max_blocks: usize) -> Vec<Vec<usize>> {
    fn rec(labels: &mut Vec<usize>, used: usize, n: usize, max_blocks: usize, out: &mut Vec<Vec<usize>>) {
        if labels.len() == n {
            out.push(labels.clone());
            return;
        }
        for b in 0..(used + 1).min(max_blocks) {
            labels.push(b);
            rec(labels, used.max(b + 1), n, max_blocks, out);
            labels.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), 0, n, max_blocks, &mut out);
    out
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Accuracy under the best one-to-one relabelling, by trying every
/// permutation of cluster ids.
pub fn accuracy_brute(pred: &[usize], truth: &[usize]) -> f64 {
    let k = pred.iter().chain(truth).copied().max().map_or(1, |m| m + 1);
    let best = permutations(k)
        .into_iter()
        .map(|perm| pred.iter().zip(truth).filter(|(p, t)| perm[**p] == **t).count())
        .max()
        .unwrap_or(0);
    best as f64 / pred.len() as f64
}

/// Adjusted Rand index from explicit pair enumeration.
pub fn ari_brute(pred: &[usize], truth: &[usize]) -> f64 {
    let n = pred.len();
    let (mut both, mut only_p, mut only_t, mut pairs) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for i in 0..n {
        for j in (i + 1)..n {
            let sp = pred[i] == pred[j];
            let st = truth[i] == truth[j];
            pairs += 1.0;
            if sp && st {
                both += 1.0;
            }
            if sp {
                only_p += 1.0;
            }
            if st {
                only_t += 1.0;
            }
        }
    }
    let expected = only_p * only_t / pairs;
    let max = 0.5 * (only_p + only_t);
    if (max - expected).abs() < 1e-300 {
        return if pred_equiv(pred, truth) { 1.0 } else { 0.0 };
    }
    (both - expected) / (max - expected)
}

fn pred_equiv(a: &[usize], b: &[usize]) -> bool {
    (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}

/// Normalized mutual information `I / sqrt(H_p H_t)` from per-sample sums.
pub fn nmi_brute(pred: &[usize], truth: &[usize]) -> f64 {
    let n = pred.len() as f64;
    let prob = |pred_label: Option<usize>, truth_label: Option<usize>| -> f64 {
        pred.iter()
            .zip(truth)
            .filter(|(p, t)| pred_label.is_none_or(|l| **p == l) && truth_label.is_none_or(|l| **t == l))
            .count() as f64
            / n
    };
    let mut pl: Vec<usize> = pred.to_vec();
    pl.sort_unstable();
    pl.dedup();
    let mut tl: Vec<usize> = truth.to_vec();
    tl.sort_unstable();
    tl.dedup();
    let h = |labels: &[usize], is_pred: bool| -> f64 {
        -labels
            .iter()
            .map(|&l| {
                let p = if is_pred { prob(Some(l), None) } else { prob(None, Some(l)) };
                p * p.ln()
            })
            .sum::<f64>()
    };
    let hp = h(&pl, true);
    let ht = h(&tl, false);
    let mut mi = 0.0;
    for &a in &pl {
        for &b in &tl {
            let pab = prob(Some(a), Some(b));
            if pab > 0.0 {
                mi += pab * (pab / (prob(Some(a), None) * prob(None, Some(b)))).ln();
            }
        }
    }
    if hp == 0.0 && ht == 0.0 {
        return 1.0;
    }
    if hp == 0.0 || ht == 0.0 {
        return 0.0;
    }
    mi / (hp * ht).sqrt()
}
