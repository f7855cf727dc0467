//! Dense and row-compressed sparse kernels.
//!
//! Only the products the solver needs live here: sparse-times-dense (`S F`),
//! the Frobenius norm of a sparse matrix, and the trace form `tr(Aᵀ S B)`.
//! Accumulation is always per row and sequential so results are
//! bit-reproducible.

use crate::error::{shape_mismatch, Error, Result};

/// Dense real matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                op: "DenseMatrix::new",
                expected: format!("{} entries", rows * cols),
                got: format!("{} entries", data.len()),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite entry at ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let c = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n * c);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != c {
                return Err(Error::DimensionMismatch {
                    op: "DenseMatrix::from_rows",
                    expected: format!("row length {c}"),
                    got: format!("row {i} has length {}", r.len()),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(n, c, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[f64]) {
        for (i, v) in values.iter().enumerate() {
            self.set(i, j, *v);
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (s, v) in sums.iter_mut().zip(self.row(i)) {
                *s += v;
            }
        }
        sums
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    fn check_same_shape(&self, other: &Self, op: &'static str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(shape_mismatch(op, self.shape(), other.shape()));
        }
        Ok(())
    }

    /// Frobenius inner product `⟨self, other⟩`.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other, "inner")?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .sum())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "sub")?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "add")?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| alpha * v).collect(),
        }
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Self) -> Result<()> {
        self.check_same_shape(other, "axpy")?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    /// `‖self − other‖_F`
    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other, "distance")?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }
}

/// General square matrix in compressed sparse row form.
///
/// Column indices are sorted and unique within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Assembles an `n x n` matrix from `(row, col, value)` triplets.
    /// Duplicate coordinates are summed; exact zeros are dropped.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(Error::InvalidInput(format!(
                    "triplet ({i}, {j}) out of range for n={n}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite value at ({i}, {j})")));
            }
            rows[i].push((j, v));
        }
        Ok(Self::from_row_lists(n, rows))
    }

    fn from_row_lists(n: usize, mut rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in rows.iter_mut() {
            row.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < row.len() {
                let col = row[k].0;
                let mut acc = 0.0;
                while k < row.len() && row[k].0 == col {
                    acc += row[k].1;
                    k += 1;
                }
                if acc != 0.0 {
                    indices.push(col);
                    values.push(acc);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            n,
            indptr,
            indices,
            values,
        }
    }

    pub fn from_dense<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let mut trip = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != n {
                return Err(Error::InvalidInput(format!(
                    "row {i} has length {}, expected square {n}",
                    r.len()
                )));
            }
            for (j, &v) in r.iter().enumerate() {
                if v != 0.0 {
                    trip.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n, &trip)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Stored `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        self.indices[a..b]
            .iter()
            .copied()
            .zip(self.values[a..b].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        match self.indices[a..b].binary_search(&j) {
            Ok(k) => self.values[a + k],
            Err(_) => 0.0,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }
}

impl AsRef<CsrMatrix> for CsrMatrix {
    fn as_ref(&self) -> &CsrMatrix {
        self
    }
}

/// Symmetric, nonnegative, zero-diagonal similarity matrix: the graph.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseAffinity(CsrMatrix);

impl SparseAffinity {
    /// Builds an affinity from triplets. Each unordered pair keeps the
    /// larger of `s_ij` and `s_ji`; diagonal entries are discarded.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sym: std::collections::BTreeMap<(usize, usize), f64> = Default::default();
        for &(i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({i}, {j}) out of range for n={n}"
                )));
            }
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "affinity ({i}, {j}) = {v} must be finite and nonnegative"
                )));
            }
            if i == j || v == 0.0 {
                continue;
            }
            let key = (i.min(j), i.max(j));
            let e = sym.entry(key).or_insert(0.0);
            *e = e.max(v);
        }
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for ((i, j), v) in sym {
            rows[i].push((j, v));
            rows[j].push((i, v));
        }
        Ok(Self(CsrMatrix::from_row_lists(n, rows)))
    }

    pub fn from_dense<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let mut trip = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != n {
                return Err(Error::InvalidInput(format!(
                    "row {i} has length {}, expected square {n}",
                    r.len()
                )));
            }
            for (j, &v) in r.iter().enumerate() {
                trip.push((i, j, v));
            }
        }
        Self::from_triplets(n, &trip)
    }

    pub fn zeros(n: usize) -> Self {
        Self(CsrMatrix::from_row_lists(n, vec![Vec::new(); n]))
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.0.n
    }

    pub fn csr(&self) -> &CsrMatrix {
        &self.0
    }

    /// Sum of all stored weights, `1ᵀ S 1`.
    pub fn total_weight(&self) -> f64 {
        self.0.values.iter().sum()
    }

    pub fn degrees(&self) -> Vec<f64> {
        self.0.row_sums()
    }
}

impl AsRef<CsrMatrix> for SparseAffinity {
    fn as_ref(&self) -> &CsrMatrix {
        &self.0
    }
}

/// `S X` for a sparse `S` and dense `X`.
pub fn spmm<S: AsRef<CsrMatrix>>(s: &S, x: &DenseMatrix) -> Result<DenseMatrix> {
    let s = s.as_ref();
    if s.n != x.rows() {
        return Err(shape_mismatch("spmm", (s.n, s.n), x.shape()));
    }
    let c = x.cols();
    let mut out = DenseMatrix::zeros(s.n, c);
    for i in 0..s.n {
        let acc = out.row_mut(i);
        for (j, w) in s.row(i) {
            for (a, xv) in acc.iter_mut().zip(x.row(j)) {
                *a += w * xv;
            }
        }
    }
    Ok(out)
}

/// `sqrt(Σ s_ij²)` over the stored values.
pub fn frobenius_norm<S: AsRef<CsrMatrix>>(s: &S) -> f64 {
    s.as_ref().values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `tr(Aᵀ S B)` computed as `Σ_ij (S B)_ij A_ij`, row by row.
pub fn trace_quadratic<S: AsRef<CsrMatrix>>(
    a: &DenseMatrix,
    s: &S,
    b: &DenseMatrix,
) -> Result<f64> {
    let sm = s.as_ref();
    if a.shape() != b.shape() {
        return Err(shape_mismatch("trace_quadratic", a.shape(), b.shape()));
    }
    if sm.n != a.rows() {
        return Err(shape_mismatch("trace_quadratic", (sm.n, sm.n), a.shape()));
    }
    let c = a.cols();
    let mut total = 0.0;
    let mut sb = vec![0.0; c];
    for i in 0..sm.n {
        sb.iter_mut().for_each(|v| *v = 0.0);
        for (j, w) in sm.row(i) {
            for (acc, bv) in sb.iter_mut().zip(b.row(j)) {
                *acc += w * bv;
            }
        }
        total += sb.iter().zip(a.row(i)).map(|(x, y)| x * y).sum::<f64>();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_mul(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut s = 0.0;
                for k in 0..a.cols() {
                    s += a.get(i, k) * b.get(k, j);
                }
                out.set(i, j, s);
            }
        }
        out
    }

    fn random_affinity(n: usize, density: f64, rng: &mut ChaCha8Rng) -> SparseAffinity {
        let mut trip = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < density {
                    trip.push((i, j, rng.random::<f64>()));
                }
            }
        }
        SparseAffinity::from_triplets(n, &trip).unwrap()
    }

    fn random_dense(r: usize, c: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        DenseMatrix::new(r, c, (0..r * c).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    fn swap() -> SparseAffinity {
        SparseAffinity::from_dense(&[[0.0, 1.0], [1.0, 0.0]]).unwrap()
    }

    #[test]
    fn spmm_zero_and_swap() {
        let z = SparseAffinity::zeros(2);
        let x = DenseMatrix::from_rows(&[[3.0, 1.0], [2.0, 5.0]]).unwrap();
        assert_eq!(spmm(&z, &x).unwrap(), DenseMatrix::zeros(2, 2));
        let out = spmm(&swap(), &DenseMatrix::identity(2)).unwrap();
        assert_eq!(out.to_rows(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn spmm_matches_dense_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = random_affinity(5, 0.6, &mut rng);
        let x = random_dense(5, 2, &mut rng);
        let got = spmm(&s, &x).unwrap();
        let want = dense_mul(&s.csr().to_dense(), &x);
        assert!(got.distance(&want).unwrap() < 1e-12);
    }

    #[test]
    fn spmm_rejects_mismatch() {
        let x = DenseMatrix::zeros(3, 2);
        assert!(matches!(spmm(&swap(), &x), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn frobenius_examples() {
        assert_eq!(frobenius_norm(&SparseAffinity::zeros(3)), 0.0);
        assert!((frobenius_norm(&swap()) - 2f64.sqrt()).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_affinity(10, 0.4, &mut rng);
        let dense = s.csr().to_dense();
        assert!((frobenius_norm(&s) - dense.frobenius_norm()).abs() < 1e-12);
    }

    #[test]
    fn trace_quadratic_examples() {
        let i2 = DenseMatrix::identity(2);
        assert_eq!(trace_quadratic(&i2, &swap(), &i2).unwrap(), 0.0);
        let p = DenseMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!((trace_quadratic(&i2, &swap(), &p).unwrap() - 2.0).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = random_affinity(6, 0.5, &mut rng);
        let a = random_dense(6, 3, &mut rng);
        let b = random_dense(6, 3, &mut rng);
        let sb = dense_mul(&s.csr().to_dense(), &b);
        let want = dense_mul(&a.transpose(), &sb);
        let tr: f64 = (0..3).map(|k| want.get(k, k)).sum();
        assert!((trace_quadratic(&a, &s, &b).unwrap() - tr).abs() < 1e-10);
    }

    #[test]
    fn affinity_symmetrizes_by_max_and_drops_diagonal() {
        let s = SparseAffinity::from_triplets(3, &[(0, 1, 0.5), (1, 0, 0.9), (2, 2, 4.0)]).unwrap();
        assert_eq!(s.csr().get(0, 1), 0.9);
        assert_eq!(s.csr().get(1, 0), 0.9);
        assert_eq!(s.csr().get(2, 2), 0.0);
        assert!(SparseAffinity::from_triplets(2, &[(0, 1, -1.0)]).is_err());
    }

    #[test]
    fn dense_rejects_nonfinite() {
        assert!(DenseMatrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(DenseMatrix::new(1, 2, vec![1.0]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::{prop_assert, proptest, ProptestConfig};

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn spmm_is_additive(seed in 0u64..10_000) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let s = random_affinity(7, 0.5, &mut rng);
                let x = random_dense(7, 3, &mut rng);
                let y = random_dense(7, 3, &mut rng);
                let lhs = spmm(&s, &x.add(&y).unwrap()).unwrap();
                let rhs = spmm(&s, &x).unwrap().add(&spmm(&s, &y).unwrap()).unwrap();
                prop_assert!(lhs.distance(&rhs).unwrap() < 1e-10);
            }

            #[test]
            fn trace_quadratic_is_symmetric(seed in 0u64..10_000) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let s = random_affinity(6, 0.5, &mut rng);
                let a = random_dense(6, 2, &mut rng);
                let b = random_dense(6, 2, &mut rng);
                let ab = trace_quadratic(&a, &s, &b).unwrap();
                let ba = trace_quadratic(&b, &s, &a).unwrap();
                prop_assert!((ab - ba).abs() < 1e-10);
            }

            #[test]
            fn frobenius_squared_via_identity_embedding(seed in 0u64..10_000) {
                // Σ_k e_kᵀ S S e_k = ‖S‖_F² using tr(Sᵀ S I) with S dense.
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let s = random_affinity(5, 0.6, &mut rng);
                let dense = s.csr().to_dense();
                let tq = trace_quadratic(&dense, &s, &DenseMatrix::identity(5)).unwrap();
                let f = frobenius_norm(&s);
                prop_assert!((tq - f * f).abs() < 1e-10);
            }
        }
    }
}
