//! Size-constrained min-cut objective `−tr(FᵀSF)` and the convex Laplacian
//! objective `tr(FᵀLF)` used as a sanity problem.

use crate::error::{Error, Result};
use crate::graph::Laplacian;
use crate::linalg::{frobenius_norm, spmm, trace_quadratic, DenseMatrix, SparseAffinity};
use crate::solver::Objective;

pub fn mincut_value(s: &SparseAffinity, f: &DenseMatrix) -> Result<f64> {
    Ok(-trace_quadratic(f, s, f)?)
}

pub fn mincut_gradient(s: &SparseAffinity, f: &DenseMatrix) -> Result<DenseMatrix> {
    Ok(spmm(s, f)?.scaled(-2.0))
}

/// Step `μ ∈ [0, 1]` minimizing `−tr(GᵀSG)` along `G = (1−μ)F + μ·fg`.
///
/// With `α = 1 − μ`, `tr(GᵀSG) = α²(x+y−2z) + 2α(z−y) + y` where
/// `x = tr(FᵀSF)`, `y = tr(fgᵀS fg)`, `z = tr(fgᵀSF)`, and this is maximized
/// over `α ∈ [0, 1]`.
pub fn line_search_mincut(s: &SparseAffinity, f: &DenseMatrix, fg: &DenseMatrix) -> Result<f64> {
    let x = trace_quadratic(f, s, f)?;
    let y = trace_quadratic(fg, s, fg)?;
    let z = trace_quadratic(fg, s, f)?;
    Ok(segment_step(x, y, z))
}

fn segment_step(x: f64, y: f64, z: f64) -> f64 {
    let a = x + y - 2.0 * z;
    // Relative threshold so that a = 0 up to rounding counts as linear.
    let scale = x.abs() + y.abs() + 2.0 * z.abs();
    if a < -1e-14 * scale {
        // Concave in α: the vertex α* = (y − z)/a, clamped to [0, 1].
        let r = (y - z) / a;
        if r >= 1.0 {
            0.0
        } else if r <= 0.0 {
            1.0
        } else {
            1.0 - r
        }
    } else if a > 1e-14 * scale {
        // Convex in α: the maximum sits at an endpoint, α = 1 gives x, α = 0 gives y.
        if y >= x {
            1.0
        } else {
            0.0
        }
    } else {
        // Linear in α with slope 2(z − y).
        if z >= y {
            0.0
        } else {
            1.0
        }
    }
}

/// `H(F) = −tr(FᵀSF)` with `L = 2‖S‖_F`.
#[derive(Debug, Clone)]
pub struct MinCutOracle {
    s: SparseAffinity,
    smoothness: f64,
}

impl MinCutOracle {
    pub fn new(s: SparseAffinity) -> Result<Self> {
        let smoothness = 2.0 * frobenius_norm(&s);
        if smoothness == 0.0 {
            return Err(Error::InvalidInput("affinity has no edges".into()));
        }
        Ok(Self { s, smoothness })
    }

    pub fn affinity(&self) -> &SparseAffinity {
        &self.s
    }
}

impl Objective for MinCutOracle {
    fn value(&self, f: &DenseMatrix) -> Result<f64> {
        mincut_value(&self.s, f)
    }

    fn gradient(&self, f: &DenseMatrix) -> Result<DenseMatrix> {
        mincut_gradient(&self.s, f)
    }

    fn smoothness(&self) -> f64 {
        self.smoothness
    }

    fn line_search(&self, f: &DenseMatrix, fg: &DenseMatrix) -> Option<Result<f64>> {
        Some(line_search_mincut(&self.s, f, fg))
    }
}

pub fn convex_value(lap: &Laplacian, f: &DenseMatrix) -> Result<f64> {
    trace_quadratic(f, lap, f)
}

pub fn convex_gradient(lap: &Laplacian, f: &DenseMatrix) -> Result<DenseMatrix> {
    Ok(spmm(lap, f)?.scaled(2.0))
}

/// `H(F) = tr(FᵀLF)` with `L = 2‖Lap‖_F`.
#[derive(Debug, Clone)]
pub struct ConvexLaplacianOracle {
    lap: Laplacian,
    smoothness: f64,
}

impl ConvexLaplacianOracle {
    pub fn new(lap: Laplacian) -> Result<Self> {
        let smoothness = 2.0 * frobenius_norm(&lap);
        if smoothness == 0.0 {
            return Err(Error::InvalidInput("Laplacian is zero".into()));
        }
        Ok(Self { lap, smoothness })
    }

    pub fn laplacian(&self) -> &Laplacian {
        &self.lap
    }
}

impl Objective for ConvexLaplacianOracle {
    fn value(&self, f: &DenseMatrix) -> Result<f64> {
        convex_value(&self.lap, f)
    }

    fn gradient(&self, f: &DenseMatrix) -> Result<DenseMatrix> {
        convex_gradient(&self.lap, f)
    }

    fn smoothness(&self) -> f64 {
        self.smoothness
    }

    /// `tr(GᵀLG)` along the segment is `aμ² + 2bμ + x` with `a = tr(DᵀLD)`,
    /// `b = tr(DᵀLF)`, `D = fg − F`.
    fn line_search(&self, f: &DenseMatrix, fg: &DenseMatrix) -> Option<Result<f64>> {
        Some((|| {
            let d = fg.sub(f)?;
            let a = trace_quadratic(&d, &self.lap, &d)?;
            let b = trace_quadratic(&d, &self.lap, f)?;
            if a <= 0.0 {
                return Ok(if b < 0.0 { 1.0 } else { 0.0 });
            }
            Ok((-b / a).clamp(0.0, 1.0))
        })())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{dykstra_project, DualBoundedSet};
    use crate::graph::laplacian;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cliques() -> SparseAffinity {
        let mut s = vec![vec![0.0; 4]; 4];
        s[0][1] = 1.0;
        s[1][0] = 1.0;
        s[2][3] = 1.0;
        s[3][2] = 1.0;
        SparseAffinity::from_dense(&s).unwrap()
    }

    pub(crate) fn random_graph(n: usize, density: f64, rng: &mut ChaCha8Rng) -> SparseAffinity {
        let mut t = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < density {
                    t.push((i, j, rng.random_range(0.1..1.0)));
                }
            }
        }
        SparseAffinity::from_triplets(n, &t).unwrap()
    }

    fn random_feasible(omega: &DualBoundedSet, rng: &mut ChaCha8Rng) -> DenseMatrix {
        let (n, c) = (omega.n(), omega.c());
        let m = DenseMatrix::new(n, c, (0..n * c).map(|_| rng.random::<f64>() * 2.0).collect()).unwrap();
        dykstra_project(&m, omega, 1e-12, 10_000).unwrap().matrix
    }

    #[test]
    fn value_examples() {
        let s = cliques();
        let total = s.total_weight();
        let mut one_col = DenseMatrix::zeros(4, 2);
        (0..4).for_each(|i| one_col.set(i, 0, 1.0));
        assert_eq!(mincut_value(&s, &one_col).unwrap(), -total);
        let uni = DenseMatrix::filled(4, 2, 0.5);
        assert!((mincut_value(&s, &uni).unwrap() + total / 2.0).abs() < 1e-15);
        let block = DenseMatrix::from_rows(&[[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]]).unwrap();
        assert_eq!(mincut_value(&s, &block).unwrap(), -4.0);
    }

    #[test]
    fn gradient_examples() {
        let s = SparseAffinity::from_dense(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let g = mincut_gradient(&s, &DenseMatrix::identity(2)).unwrap();
        assert_eq!(g, DenseMatrix::from_rows(&[[0.0, -2.0], [-2.0, 0.0]]).unwrap());
        let z = mincut_gradient(&SparseAffinity::zeros(3), &DenseMatrix::filled(3, 2, 0.5)).unwrap();
        assert_eq!(z.max_abs(), 0.0);
    }

    #[test]
    fn line_search_examples() {
        let s = SparseAffinity::from_dense(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let f = DenseMatrix::identity(2);
        let fg = DenseMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert_eq!(line_search_mincut(&s, &f, &fg).unwrap(), 0.5);
        assert_eq!(line_search_mincut(&s, &f, &f).unwrap(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let omega = DualBoundedSet::new(6, 3, 1.0, 3.0).unwrap();
        let s = random_graph(6, 0.6, &mut rng);
        let f = random_feasible(&omega, &mut rng);
        assert_eq!(line_search_mincut(&s, &f, &f).unwrap(), 0.0);
    }

    #[test]
    fn segment_branches() {
        // Linear, increasing toward fg: z < y.
        assert_eq!(segment_step(1.0, 3.0, 2.0), 1.0);
        // Linear, decreasing toward fg.
        assert_eq!(segment_step(3.0, 1.0, 2.0), 0.0);
        // Convex in α with y > x.
        assert_eq!(segment_step(1.0, 2.0, 0.0), 1.0);
        assert_eq!(segment_step(2.0, 1.0, 0.0), 0.0);
        // Convex tie.
        assert_eq!(segment_step(1.0, 1.0, 0.0), 1.0);
        // Concave with r at the boundaries.
        assert_eq!(segment_step(0.0, 1.0, 1.0), 1.0);
        assert_eq!(segment_step(1.0, 0.0, 1.0), 0.0);
    }

    #[test]
    fn convex_examples() {
        let s = cliques();
        let lap = laplacian(&s);
        assert!(convex_value(&lap, &DenseMatrix::filled(4, 2, 0.5)).unwrap().abs() < 1e-15);
        let block = DenseMatrix::from_rows(&[[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]]).unwrap();
        assert_eq!(convex_value(&lap, &block).unwrap(), 0.0);
        let cut = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [0.0, 1.0], [0.0, 1.0]]).unwrap();
        assert_eq!(convex_value(&lap, &cut).unwrap(), 2.0);
    }

    #[test]
    fn laplacian_is_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..10 {
            let s = random_graph(7, 0.5, &mut rng);
            let dense = laplacian(&s).csr().to_dense();
            let m = nalgebra::DMatrix::from_row_slice(7, 7, dense.as_slice());
            let eig = m.symmetric_eigen().eigenvalues;
            assert!(eig.iter().all(|&e| e > -1e-10), "{eig}");
        }
    }

    fn finite_difference<O: Objective>(obj: &O, f: &DenseMatrix) -> DenseMatrix {
        let h = 1e-6;
        let mut out = DenseMatrix::zeros(f.rows(), f.cols());
        for i in 0..f.rows() {
            for j in 0..f.cols() {
                let mut p = f.clone();
                p.set(i, j, f.get(i, j) + h);
                let mut m = f.clone();
                m.set(i, j, f.get(i, j) - h);
                out.set(i, j, (obj.value(&p).unwrap() - obj.value(&m).unwrap()) / (2.0 * h));
            }
        }
        out
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let omega = DualBoundedSet::new(6, 3, 1.0, 3.0).unwrap();
        let s = random_graph(6, 0.7, &mut rng);
        let mc = MinCutOracle::new(s.clone()).unwrap();
        let cv = ConvexLaplacianOracle::new(laplacian(&s)).unwrap();
        for _ in 0..20 {
            let f = random_feasible(&omega, &mut rng);
            for (g, fd) in [
                (mc.gradient(&f).unwrap(), finite_difference(&mc, &f)),
                (cv.gradient(&f).unwrap(), finite_difference(&cv, &f)),
            ] {
                let rel = g.distance(&fd).unwrap() / g.frobenius_norm().max(1e-12);
                assert!(rel < 1e-5, "{rel}");
            }
        }
    }

    #[test]
    fn cut_identity_on_hard_assignments() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let s = random_graph(8, 0.5, &mut rng);
            let lap = laplacian(&s);
            let mut f = DenseMatrix::zeros(8, 3);
            (0..8).for_each(|i| f.set(i, rng.random_range(0..3), 1.0));
            let lhs = s.total_weight() + mincut_value(&s, &f).unwrap();
            let rhs = convex_value(&lap, &f).unwrap();
            assert!((lhs - rhs).abs() < 1e-8);
        }
    }

    #[test]
    fn convex_line_search_matches_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let omega = DualBoundedSet::new(6, 2, 2.0, 4.0).unwrap();
        let cv = ConvexLaplacianOracle::new(laplacian(&random_graph(6, 0.6, &mut rng))).unwrap();
        for _ in 0..50 {
            let f = random_feasible(&omega, &mut rng);
            let fg = random_feasible(&omega, &mut rng);
            let mu = cv.line_search(&f, &fg).unwrap().unwrap();
            let at = |m: f64| cv.value(&crate::solver::dnf_step(&f, &fg, m).unwrap()).unwrap();
            let best = at(mu);
            for k in 0..=1000 {
                assert!(best <= at(k as f64 / 1000.0) + 1e-9);
            }
        }
    }

    mod props {
        use super::*;
        use crate::solver::dnf_step;
        use proptest::prelude::{prop_assert, proptest, ProptestConfig};

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(200))]

            #[test]
            fn line_search_beats_grid(seed in 0u64..1_000_000) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let n = rng.random_range(3..9);
                let c = rng.random_range(2..4).min(n);
                let omega = DualBoundedSet::rows_only(n, c).unwrap();
                let s = random_graph(n, 0.6, &mut rng);
                let f = random_feasible(&omega, &mut rng);
                let fg = random_feasible(&omega, &mut rng);
                let mu = line_search_mincut(&s, &f, &fg).unwrap();
                let at = |m: f64| mincut_value(&s, &dnf_step(&f, &fg, m).unwrap()).unwrap();
                let best = at(mu);
                for k in 0..=1000 {
                    prop_assert!(best <= at(k as f64 / 1000.0) + 1e-9);
                }
            }

            #[test]
            fn gradient_lipschitz(seed in 0u64..1_000_000) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let omega = DualBoundedSet::new(7, 3, 1.0, 4.0).unwrap();
                let s = random_graph(7, 0.5, &mut rng);
                let l = 2.0 * frobenius_norm(&s);
                let a = random_feasible(&omega, &mut rng);
                let b = random_feasible(&omega, &mut rng);
                let lhs = mincut_gradient(&s, &a).unwrap().distance(&mincut_gradient(&s, &b).unwrap()).unwrap();
                prop_assert!(lhs <= l * a.distance(&b).unwrap() + 1e-12);
            }

            #[test]
            fn convex_along_segments(seed in 0u64..1_000_000) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let omega = DualBoundedSet::rows_only(6, 3).unwrap();
                let lap = laplacian(&random_graph(6, 0.6, &mut rng));
                let a = random_feasible(&omega, &mut rng);
                let b = random_feasible(&omega, &mut rng);
                let mid = dnf_step(&a, &b, 0.5).unwrap();
                let va = convex_value(&lap, &a).unwrap();
                let vb = convex_value(&lap, &b).unwrap();
                prop_assert!(convex_value(&lap, &mid).unwrap() <= 0.5 * (va + vb) + 1e-10);
            }
        }
    }
}
