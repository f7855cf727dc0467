//! Feature handling, k-NN affinity graphs, Laplacians, synthetic datasets and
//! starting plans.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::constraints::{dykstra_project, DualBoundedSet};
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, DenseMatrix, SparseAffinity};
use crate::solver::TransportPlan;

/// Above this many samples the bandwidth is estimated from random pairs.
pub const SIGMA_EXACT_MAX_N: usize = 2000;
pub const SIGMA_SAMPLED_PAIRS: usize = 1_000_000;
/// Spectral starts use a dense eigendecomposition; refuse beyond this size.
pub const SPECTRAL_MAX_N: usize = 4000;
const KMEANS_RESTARTS: usize = 10;
const KMEANS_MAX_ITER: usize = 300;
const WARM_WEIGHT: f64 = 0.9;

/// `d × n` data matrix stored column by column, so each sample is contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    d: usize,
    n: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(d: usize, n: usize, data: Vec<f64>) -> Result<Self> {
        if d == 0 || n < 2 {
            return Err(Error::InvalidInput(format!("need d >= 1 and n >= 2, got d={d}, n={n}")));
        }
        if data.len() != d * n {
            return Err(Error::DimensionMismatch {
                op: "FeatureMatrix::new",
                expected: format!("{} values", d * n),
                got: format!("{} values", data.len()),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("features must be finite".into()));
        }
        Ok(Self { d, n, data })
    }

    pub fn from_samples<R: AsRef<[f64]>>(samples: &[R]) -> Result<Self> {
        let d = samples.first().map_or(0, |s| s.as_ref().len());
        if samples.iter().any(|s| s.as_ref().len() != d) {
            return Err(Error::InvalidInput("samples have differing dimensions".into()));
        }
        let data = samples.iter().flat_map(|s| s.as_ref().iter().copied()).collect();
        Self::new(d, samples.len(), data)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn samples(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.d)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub features: FeatureMatrix,
    pub labels: Option<Vec<usize>>,
}

impl LabeledDataset {
    pub fn new(features: FeatureMatrix, labels: Option<Vec<usize>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != features.n() {
                return Err(Error::DimensionMismatch {
                    op: "LabeledDataset::new",
                    expected: format!("{} labels", features.n()),
                    got: format!("{} labels", l.len()),
                });
            }
        }
        Ok(Self { features, labels })
    }

    /// Number of distinct classes when labels are present.
    pub fn n_classes(&self) -> Option<usize> {
        self.labels.as_ref().map(|l| l.iter().max().map_or(0, |m| m + 1))
    }
}

/// Centers every feature and scales it to unit population variance;
/// constant features are only centered.
pub fn normalize_features(z: &FeatureMatrix) -> FeatureMatrix {
    let n = z.n as f64;
    let mut out = z.clone();
    for k in 0..z.d {
        let mean = z.samples().map(|s| s[k]).sum::<f64>() / n;
        let var = z.samples().map(|s| (s[k] - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        for i in 0..z.n {
            let x = &mut out.data[i * z.d + k];
            *x -= mean;
            if sd > 0.0 {
                *x /= sd;
            }
        }
    }
    out
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Mean Euclidean distance over all pairs, or over random pairs for large `n`.
pub fn mean_pairwise_distance(z: &FeatureMatrix, seed: u64) -> f64 {
    let n = z.n;
    if n <= SIGMA_EXACT_MAX_N {
        let mut sum = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                sum += sq_dist(z.sample(i), z.sample(j)).sqrt();
            }
        }
        return sum / (n * (n - 1) / 2) as f64;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    for _ in 0..SIGMA_SAMPLED_PAIRS {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        sum += sq_dist(z.sample(i), z.sample(j)).sqrt();
    }
    sum / SIGMA_SAMPLED_PAIRS as f64
}

/// k-NN Gaussian affinity with the mean pairwise distance as bandwidth.
pub fn knn_gaussian_affinity(z: &FeatureMatrix, k: usize) -> Result<SparseAffinity> {
    knn_gaussian_affinity_with(z, k, None)
}

/// `s_ij = exp(−‖z_i − z_j‖² / (2σ²))` for `j` among the `k` nearest
/// neighbours of `i` (ties to the lower index), symmetrized by max.
pub fn knn_gaussian_affinity_with(z: &FeatureMatrix, k: usize, sigma: Option<f64>) -> Result<SparseAffinity> {
    let n = z.n;
    if k < 1 || k >= n {
        return Err(Error::InvalidInput(format!("need 1 <= k < n, got k={k}, n={n}")));
    }
    let sigma = match sigma {
        Some(s) if !(s.is_finite() && s > 0.0) => {
            return Err(Error::InvalidInput(format!("sigma must be positive, got {s}")));
        }
        Some(s) => s,
        None => mean_pairwise_distance(z, 0),
    };
    let mut triplets = Vec::with_capacity(n * k);
    let mut cand: Vec<(f64, usize)> = Vec::with_capacity(n);
    for i in 0..n {
        cand.clear();
        cand.extend((0..n).filter(|&j| j != i).map(|j| (sq_dist(z.sample(i), z.sample(j)), j)));
        let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        cand.select_nth_unstable_by(k - 1, by_dist);
        for &(d2, j) in &cand[..k] {
            // All points coincide when σ = 0; every distance is then 0 too.
            let w = if sigma > 0.0 { (-d2 / (2.0 * sigma * sigma)).exp() } else { 1.0 };
            triplets.push((i, j, w));
        }
    }
    SparseAffinity::from_triplets(n, &triplets)
}

/// Graph Laplacian `D − S`.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian(CsrMatrix);

impl Laplacian {
    pub fn csr(&self) -> &CsrMatrix {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.n()
    }
}

impl AsRef<CsrMatrix> for Laplacian {
    fn as_ref(&self) -> &CsrMatrix {
        &self.0
    }
}

pub fn laplacian(s: &SparseAffinity) -> Laplacian {
    let n = s.n();
    let deg = s.degrees();
    let mut t = Vec::with_capacity(s.csr().nnz() + n);
    for (i, &d) in deg.iter().enumerate() {
        t.push((i, i, d));
        t.extend(s.csr().row(i).map(|(j, v)| (i, j, -v)));
    }
    Laplacian(CsrMatrix::from_triplets(n, &t).expect("indices come from a valid affinity"))
}

/// Two concentric rings of radii 1 and 2.5 in the plane, evenly spaced in
/// angle, with Gaussian radial noise. Label 0 is the inner ring.
pub fn generate_two_rings(n_per_ring: usize, noise: f64, seed: u64) -> Result<LabeledDataset> {
    if n_per_ring < 8 {
        return Err(Error::InvalidInput(format!("need n_per_ring >= 8, got {n_per_ring}")));
    }
    let radial = Normal::new(0.0, noise.max(0.0)).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(2 * n_per_ring);
    let mut labels = Vec::with_capacity(2 * n_per_ring);
    for (label, radius) in [1.0, 2.5].into_iter().enumerate() {
        for k in 0..n_per_ring {
            let theta = 2.0 * PI * k as f64 / n_per_ring as f64;
            let r = radius + if noise > 0.0 { radial.sample(&mut rng) } else { 0.0 };
            samples.push([r * theta.cos(), r * theta.sin()]);
            labels.push(label);
        }
    }
    LabeledDataset::new(FeatureMatrix::from_samples(&samples)?, Some(labels))
}

/// Two interleaving half circles with isotropic Gaussian noise.
pub fn generate_two_moons(n_per_moon: usize, noise: f64, seed: u64) -> Result<LabeledDataset> {
    if n_per_moon < 2 {
        return Err(Error::InvalidInput("need at least 2 points per moon".into()));
    }
    let jitter = Normal::new(0.0, noise.max(0.0)).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::new();
    let mut labels = Vec::new();
    for k in 0..n_per_moon {
        let t = PI * k as f64 / (n_per_moon - 1) as f64;
        samples.push([t.cos(), t.sin()]);
        labels.push(0);
        samples.push([1.0 - t.cos(), 0.5 - t.sin()]);
        labels.push(1);
    }
    if noise > 0.0 {
        for s in &mut samples {
            s[0] += jitter.sample(&mut rng);
            s[1] += jitter.sample(&mut rng);
        }
    }
    LabeledDataset::new(FeatureMatrix::from_samples(&samples)?, Some(labels))
}

/// Isotropic Gaussian blobs around `centers`, `n_per_blob` points each.
pub fn generate_blobs(centers: &[Vec<f64>], n_per_blob: usize, std: f64, seed: u64) -> Result<LabeledDataset> {
    let normal = Normal::new(0.0, std.max(0.0)).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::new();
    let mut labels = Vec::new();
    for (label, c) in centers.iter().enumerate() {
        for _ in 0..n_per_blob {
            samples.push(c.iter().map(|x| x + normal.sample(&mut rng)).collect::<Vec<_>>());
            labels.push(label);
        }
    }
    LabeledDataset::new(FeatureMatrix::from_samples(&samples)?, Some(labels))
}

/// Connected weighted graph: a random spanning tree plus independent extra
/// edges with probability `density`; weights uniform in `[0.1, 1)`.
pub fn random_connected_graph(n: usize, density: f64, seed: u64) -> Result<SparseAffinity> {
    if n < 2 {
        return Err(Error::InvalidInput("need at least 2 nodes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut t = Vec::new();
    for k in 1..n {
        let parent = order[rng.random_range(0..k)];
        t.push((order[k], parent, rng.random_range(0.1..1.0)));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < density {
                t.push((i, j, rng.random_range(0.1..1.0)));
            }
        }
    }
    SparseAffinity::from_triplets(n, &t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// `1/c` plus uniform noise in `±0.01`, projected into `Ω`.
    UniformJitter,
    /// Smoothed one-hot rows from k-means on the features.
    KMeansWarm,
    /// Smoothed one-hot rows from k-means on the normalized spectral
    /// embedding of the affinity.
    SpectralWarm,
}

/// Seeded Lloyd's algorithm with k-means++ starts, best of several restarts
/// by inertia.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<Vec<usize>> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..KMEANS_RESTARTS {
        let (inertia, labels) = lloyd(points, k, &mut rng);
        if best.as_ref().is_none_or(|(b, _)| inertia < *b - 1e-12) {
            best = Some((inertia, labels));
        }
    }
    Ok(best.expect("at least one restart").1)
}

fn nearest(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    centers
        .iter()
        .enumerate()
        .map(|(j, c)| (j, sq_dist(p, c)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .expect("k >= 1")
}

fn lloyd(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> (f64, Vec<usize>) {
    let n = points.len();
    let mut centers = vec![points[rng.random_range(0..n)].clone()];
    while centers.len() < k {
        let d: Vec<f64> = points.iter().map(|p| nearest(p, &centers).1).collect();
        let total: f64 = d.iter().sum();
        let next = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            d.iter()
                .position(|&x| {
                    r -= x;
                    r < 0.0
                })
                .unwrap_or(n - 1)
        } else {
            rng.random_range(0..n)
        };
        centers.push(points[next].clone());
    }
    let mut labels = vec![usize::MAX; n];
    for _ in 0..KMEANS_MAX_ITER {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let j = nearest(p, &centers).0;
            if labels[i] != j {
                labels[i] = j;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let dim = points[0].len();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            sums[l].iter_mut().zip(p).for_each(|(s, x)| *s += x);
        }
        for j in 0..k {
            if counts[j] == 0 {
                // Re-seed an empty cluster at the point worst served by its center.
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = sq_dist(&points[a], &centers[labels[a]]);
                        let db = sq_dist(&points[b], &centers[labels[b]]);
                        da.total_cmp(&db).then(b.cmp(&a))
                    })
                    .expect("n >= 1");
                centers[j] = points[far].clone();
            } else {
                centers[j] = sums[j].iter().map(|s| s / counts[j] as f64).collect();
            }
        }
    }
    let inertia = points.iter().zip(&labels).map(|(p, &l)| sq_dist(p, &centers[l])).sum();
    (inertia, labels)
}

/// Rows of the `c` leading eigenvectors of `D^{-1/2} S D^{-1/2}`, each
/// scaled to unit length.
pub fn spectral_embedding(s: &SparseAffinity, c: usize) -> Result<Vec<Vec<f64>>> {
    let n = s.n();
    if n > SPECTRAL_MAX_N {
        return Err(Error::InvalidInput(format!(
            "spectral start limited to n <= {SPECTRAL_MAX_N}, got {n}"
        )));
    }
    let inv_sqrt: Vec<f64> = s
        .degrees()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for (j, v) in s.csr().row(i) {
            m[(i, j)] = inv_sqrt[i] * v * inv_sqrt[j];
        }
    }
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut rows = vec![vec![0.0; c]; n];
    for (col, &e) in order.iter().take(c).enumerate() {
        // Fix the sign so the embedding does not depend on the eigensolver.
        let v = eig.eigenvectors.column(e);
        let pivot = v.iter().copied().fold(0.0_f64, |a, x| if x.abs() > a.abs() { x } else { a });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            rows[i][col] = sign * v[i];
        }
    }
    for r in &mut rows {
        let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            r.iter_mut().for_each(|x| *x /= norm);
        }
    }
    Ok(rows)
}

fn smoothed_one_hot(labels: &[usize], c: usize) -> DenseMatrix {
    let off = (1.0 - WARM_WEIGHT) / (c - 1) as f64;
    let mut m = DenseMatrix::filled(labels.len(), c, off);
    for (i, &l) in labels.iter().enumerate() {
        m.set(i, l, WARM_WEIGHT);
    }
    m
}

/// Feasible starting plan for the solver; deterministic per `seed`.
pub fn initial_plan(
    omega: &DualBoundedSet,
    mode: InitMode,
    features: Option<&FeatureMatrix>,
    affinity: Option<&SparseAffinity>,
    seed: u64,
) -> Result<TransportPlan> {
    let (n, c) = (omega.n(), omega.c());
    let raw = match mode {
        InitMode::UniformJitter => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data = (0..n * c).map(|_| 1.0 / c as f64 + rng.random_range(-0.01..0.01)).collect();
            DenseMatrix::new(n, c, data)?
        }
        InitMode::KMeansWarm => {
            let z = features.ok_or_else(|| Error::InvalidInput("k-means start needs features".into()))?;
            if z.n() != n {
                return Err(Error::DimensionMismatch {
                    op: "initial_plan",
                    expected: format!("{n} samples"),
                    got: format!("{} samples", z.n()),
                });
            }
            let points: Vec<Vec<f64>> = z.samples().map(<[f64]>::to_vec).collect();
            smoothed_one_hot(&kmeans(&points, c, seed)?, c)
        }
        InitMode::SpectralWarm => {
            let s = affinity.ok_or_else(|| Error::InvalidInput("spectral start needs an affinity".into()))?;
            if s.n() != n {
                return Err(Error::DimensionMismatch {
                    op: "initial_plan",
                    expected: format!("{n} nodes"),
                    got: format!("{} nodes", s.n()),
                });
            }
            smoothed_one_hot(&kmeans(&spectral_embedding(s, c)?, c, seed)?, c)
        }
    };
    let proj = dykstra_project(&raw, omega, 1e-12, 100_000)?;
    TransportPlan::new(proj.matrix, *omega)
}

/// Reads samples from CSV. A first line that does not parse as numbers is a
/// header; a final header field named `label` marks an integer label column.
pub fn load_csv(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path.as_ref())?;
    let mut rows: Vec<csv::StringRecord> = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        rows.push(rec);
    }
    let Some(first) = rows.first() else {
        return Err(Error::InvalidInput("input has no rows".into()));
    };
    let is_header = first.iter().any(|f| f.parse::<f64>().is_err());
    let has_label = is_header && first.iter().next_back().is_some_and(|f| f.eq_ignore_ascii_case("label"));
    let body = if is_header { &rows[1..] } else { &rows[..] };
    let mut samples = Vec::with_capacity(body.len());
    let mut labels = Vec::new();
    for (line, rec) in body.iter().enumerate() {
        let mut fields: Vec<&str> = rec.iter().collect();
        if has_label {
            let raw = fields.pop().unwrap_or_default();
            let l = raw.parse::<usize>().map_err(|_| {
                Error::InvalidInput(format!("row {}: label {raw:?} is not a nonnegative integer", line + 1))
            })?;
            labels.push(l);
        }
        let x = fields
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("row {}: {f:?} is not a number", line + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        samples.push(x);
    }
    let features = FeatureMatrix::from_samples(&samples)?;
    LabeledDataset::new(features, has_label.then_some(labels))
}

/// CSV text for `ds`, with a header and a `label` column when labels exist.
pub fn dataset_to_csv(ds: &LabeledDataset) -> String {
    let d = ds.features.d();
    let mut header: Vec<String> = (0..d).map(|k| format!("x{k}")).collect();
    if ds.labels.is_some() {
        header.push("label".into());
    }
    let mut out = header.join(",");
    out.push('\n');
    for (i, s) in ds.features.samples().enumerate() {
        let mut fields: Vec<String> = s.iter().map(|x| format!("{x:?}")).collect();
        if let Some(l) = &ds.labels {
            fields.push(l[i].to_string());
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::check_feasible;

    fn feats(samples: &[&[f64]]) -> FeatureMatrix {
        FeatureMatrix::from_samples(samples).unwrap()
    }

    #[test]
    fn normalize_examples() {
        let z = normalize_features(&feats(&[&[1.0, 5.0], &[2.0, 5.0], &[3.0, 5.0]]));
        let want = 1.5f64.sqrt();
        assert!((z.sample(0)[0] + want).abs() < 1e-12);
        assert!(z.sample(1)[0].abs() < 1e-12);
        assert!((z.sample(2)[0] - want).abs() < 1e-12);
        assert!(z.samples().all(|s| s[1] == 0.0));
        let again = normalize_features(&z);
        for (a, b) in z.samples().zip(again.samples()) {
            assert!((a[0] - b[0]).abs() < 1e-10);
        }
    }

    #[test]
    fn affinity_examples() {
        let s = knn_gaussian_affinity(&feats(&[&[0.0, 0.0], &[3.0, 4.0]]), 1).unwrap();
        assert_eq!(s.csr().nnz(), 2);
        assert!((s.csr().get(0, 1) - (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(s.csr().get(0, 1), s.csr().get(1, 0));

        let s = knn_gaussian_affinity(&feats(&[&[0.0], &[1.0], &[2.0]]), 2).unwrap();
        for i in 0..3 {
            assert_eq!(s.csr().get(i, i), 0.0);
            for j in 0..3 {
                assert_eq!(s.csr().get(i, j), s.csr().get(j, i));
                if i != j {
                    assert!(s.csr().get(i, j) > 0.0);
                }
            }
        }
        assert!(knn_gaussian_affinity(&feats(&[&[0.0], &[1.0]]), 2).is_err());
    }

    #[test]
    fn separated_blobs_have_no_cross_edges() {
        let ds = generate_blobs(&[vec![0.0, 0.0], vec![50.0, 0.0]], 10, 0.5, 3).unwrap();
        let s = knn_gaussian_affinity(&ds.features, 3).unwrap();
        let labels = ds.labels.unwrap();
        for i in 0..20 {
            for (j, v) in s.csr().row(i) {
                if labels[i] != labels[j] {
                    assert!(v < 1e-6);
                }
            }
        }
    }

    #[test]
    fn duplicate_points_get_unit_weight() {
        let s = knn_gaussian_affinity(&feats(&[&[1.0], &[1.0], &[4.0]]), 1).unwrap();
        assert_eq!(s.csr().get(0, 1), 1.0);
    }

    #[test]
    fn laplacian_examples() {
        let s = SparseAffinity::from_dense(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert_eq!(
            laplacian(&s).csr().to_dense(),
            DenseMatrix::from_rows(&[[1.0, -1.0], [-1.0, 1.0]]).unwrap()
        );
        assert_eq!(laplacian(&SparseAffinity::zeros(3)).csr().nnz(), 0);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10 {
            let s = random_connected_graph(6, 0.4, rng.random()).unwrap();
            let l = laplacian(&s);
            assert!(l.csr().row_sums().iter().all(|r| r.abs() < 1e-12));
            let x: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let xm = DenseMatrix::new(6, 1, x.clone()).unwrap();
            let q = crate::linalg::trace_quadratic(&xm, &l, &xm).unwrap();
            let mut want = 0.0;
            for i in 0..6 {
                for j in 0..6 {
                    want += s.csr().get(i, j) * (x[i] - x[j]).powi(2) / 2.0;
                }
            }
            assert!((q - want).abs() < 1e-10);
            assert!(q > -1e-10);
        }
    }

    #[test]
    fn two_rings_construction() {
        let ds = generate_two_rings(16, 0.0, 1).unwrap();
        for (s, &l) in ds.features.samples().zip(ds.labels.as_ref().unwrap()) {
            let r = (s[0] * s[0] + s[1] * s[1]).sqrt();
            assert!((r - [1.0, 2.5][l]).abs() < 1e-12);
        }
        assert_eq!(generate_two_rings(16, 0.1, 4).unwrap(), generate_two_rings(16, 0.1, 4).unwrap());
        assert!(generate_two_rings(7, 0.1, 4).is_err());
    }

    #[test]
    fn two_rings_affinity_has_no_cross_ring_edges() {
        let ds = generate_two_rings(100, 0.05, 7).unwrap();
        let s = knn_gaussian_affinity(&normalize_features(&ds.features), 10).unwrap();
        let labels = ds.labels.unwrap();
        for i in 0..200 {
            for (j, v) in s.csr().row(i) {
                assert!(labels[i] == labels[j] || v <= 1e-4, "{i}-{j}: {v}");
            }
        }
    }

    #[test]
    fn initial_plans() {
        let omega = DualBoundedSet::new(20, 2, 8.0, 12.0).unwrap();
        let ds = generate_blobs(&[vec![0.0, 0.0], vec![20.0, 0.0]], 10, 0.5, 11).unwrap();
        for mode in [InitMode::UniformJitter, InitMode::KMeansWarm, InitMode::SpectralWarm] {
            let s = knn_gaussian_affinity(&ds.features, 4).unwrap();
            let a = initial_plan(&omega, mode, Some(&ds.features), Some(&s), 5).unwrap();
            let b = initial_plan(&omega, mode, Some(&ds.features), Some(&s), 5).unwrap();
            assert_eq!(a.matrix(), b.matrix());
            assert!(check_feasible(a.matrix(), &omega, 1e-8).unwrap().is_feasible());
            if mode != InitMode::UniformJitter {
                let pred = crate::eval::labels_from_plan(a.matrix());
                assert_eq!(crate::eval::accuracy(&pred, ds.labels.as_ref().unwrap()).unwrap(), 1.0);
            }
        }
        assert!(initial_plan(&omega, InitMode::KMeansWarm, None, None, 0).is_err());
    }

    #[test]
    fn spectral_start_separates_rings() {
        let ds = generate_two_rings(100, 0.05, 7).unwrap();
        let s = knn_gaussian_affinity(&normalize_features(&ds.features), 10).unwrap();
        let omega = DualBoundedSet::with_slack(200, 2, 0.2).unwrap();
        let p = initial_plan(&omega, InitMode::SpectralWarm, None, Some(&s), 42).unwrap();
        let pred = crate::eval::labels_from_plan(p.matrix());
        assert_eq!(crate::eval::accuracy(&pred, ds.labels.as_ref().unwrap()).unwrap(), 1.0);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ds = generate_two_moons(5, 0.1, 2).unwrap();
        let path = dir.path().join("x.csv");
        std::fs::write(&path, dataset_to_csv(&ds)).unwrap();
        assert_eq!(load_csv(&path).unwrap(), ds);

        std::fs::write(&path, "1,2\n3,4\n5,6\n").unwrap();
        let plain = load_csv(&path).unwrap();
        assert_eq!((plain.features.d(), plain.features.n(), plain.labels), (2, 3, None));

        std::fs::write(&path, "a,label\n1,x\n2,0\n").unwrap();
        assert!(load_csv(&path).is_err());
    }
}
