//! Seeded k-means over the columns of a representation matrix.
//!
//! k-means++ seeding, Lloyd iterations, best of `n_init` restarts. Restarts run
//! in parallel; the winner is the lowest inertia, ties going to the lowest
//! restart index, so the result does not depend on scheduling.

use ndarray::{Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::derive_seed;
use crate::par;

/// A hard partition of `n` samples into `k` clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub labels: Vec<usize>,
    pub k: usize,
    pub inertia: f64,
}

impl Clustering {
    /// Wrap externally produced labels (e.g. read from a file). `k` is taken
    /// as `max(label) + 1`.
    pub fn from_labels(labels: Vec<usize>) -> Result<Self> {
        let k = labels.iter().max().map(|m| m + 1).unwrap_or(0);
        if k < 2 {
            return Err(Error::InvalidConfig(
                "a clustering needs at least 2 cluster labels".into(),
            ));
        }
        Ok(Self {
            labels,
            k,
            inertia: 0.0,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansOptions {
    pub max_iter: usize,
    pub n_init: usize,
    /// Scale every column to unit L2 norm before clustering.
    pub normalize_columns: bool,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            max_iter: 300,
            n_init: 10,
            normalize_columns: false,
        }
    }
}

/// Outcome of a single Lloyd run.
#[derive(Debug, Clone)]
pub(crate) struct LloydRun {
    pub labels: Vec<usize>,
    pub inertia: f64,
    /// Inertia after every assignment + update step.
    #[cfg_attr(not(test), allow(dead_code))]
    pub history: Vec<f64>,
}

fn sq_dist_col(points: ArrayView2<'_, f64>, i: usize, centroids: &Array2<f64>, c: usize) -> f64 {
    points
        .column(i)
        .iter()
        .zip(centroids.column(c).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

fn kmeans_pp(points: ArrayView2<'_, f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let (dim, n) = points.dim();
    let mut centroids = Array2::<f64>::zeros((dim, k));
    let first = rng.random_range(0..n);
    centroids.column_mut(0).assign(&points.column(first));
    let mut closest: Vec<f64> = (0..n).map(|i| sq_dist_col(points, i, &centroids, 0)).collect();
    for c in 1..k {
        let total: f64 = closest.iter().sum();
        let pick = if total <= 0.0 {
            rng.random_range(0..n)
        } else {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in closest.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        };
        centroids.column_mut(c).assign(&points.column(pick));
        for (i, best) in closest.iter_mut().enumerate() {
            let d = sq_dist_col(points, i, &centroids, c);
            if d < *best {
                *best = d;
            }
        }
    }
    centroids
}

fn assign(points: ArrayView2<'_, f64>, centroids: &Array2<f64>) -> (Vec<usize>, Vec<f64>) {
    let n = points.ncols();
    let k = centroids.ncols();
    let mut labels = vec![0usize; n];
    let mut dists = vec![0.0; n];
    for i in 0..n {
        let mut best = f64::INFINITY;
        let mut arg = 0;
        for c in 0..k {
            let d = sq_dist_col(points, i, centroids, c);
            if d < best {
                best = d;
                arg = c;
            }
        }
        labels[i] = arg;
        dists[i] = best;
    }
    (labels, dists)
}

/// Move the point farthest from its centroid into each empty cluster.
fn repair_empty(labels: &mut [usize], dists: &mut [f64], k: usize) {
    loop {
        let mut counts = vec![0usize; k];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let mut far = None;
        let mut far_d = -1.0;
        for (i, &d) in dists.iter().enumerate() {
            if counts[labels[i]] > 1 && d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        let Some(i) = far else { return };
        labels[i] = empty;
        dists[i] = 0.0;
    }
}

fn update_centroids(points: ArrayView2<'_, f64>, labels: &[usize], k: usize) -> Array2<f64> {
    let dim = points.nrows();
    let mut sums = Array2::<f64>::zeros((dim, k));
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        let mut col = sums.column_mut(l);
        col += &points.column(i);
    }
    for (c, &cnt) in counts.iter().enumerate() {
        if cnt > 0 {
            sums.column_mut(c).mapv_inplace(|v| v / cnt as f64);
        }
    }
    sums
}

fn inertia_of(points: ArrayView2<'_, f64>, labels: &[usize], centroids: &Array2<f64>) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| sq_dist_col(points, i, centroids, l))
        .sum()
}

/// One seeded Lloyd run. Accepts any `1 <= k <= n`.
pub(crate) fn lloyd(points: ArrayView2<'_, f64>, k: usize, max_iter: usize, seed: u64) -> LloydRun {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeans_pp(points, k, &mut rng);
    let (mut labels, mut dists) = assign(points, &centroids);
    repair_empty(&mut labels, &mut dists, k);
    centroids = update_centroids(points, &labels, k);
    let mut history = vec![inertia_of(points, &labels, &centroids)];
    for _ in 0..max_iter {
        let (mut next, mut d) = assign(points, &centroids);
        repair_empty(&mut next, &mut d, k);
        if next == labels {
            break;
        }
        labels = next;
        centroids = update_centroids(points, &labels, k);
        history.push(inertia_of(points, &labels, &centroids));
    }
    let inertia = *history.last().expect("non-empty history");
    LloydRun {
        labels,
        inertia,
        history,
    }
}

fn validate_points(points: ArrayView2<'_, f64>, k: usize) -> Result<()> {
    let n = points.ncols();
    if k > n {
        return Err(Error::InvalidConfig(format!("k = {k} exceeds n = {n}")));
    }
    if k == 0 {
        return Err(Error::InvalidConfig("k must be positive".into()));
    }
    if !points.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("k-means input".into()));
    }
    Ok(())
}

/// Best-of-restarts Lloyd for any `1 <= k <= n`; restart `i` uses
/// `derive_seed(seed, i)`.
pub(crate) fn best_of(
    points: ArrayView2<'_, f64>,
    k: usize,
    max_iter: usize,
    n_init: usize,
    seed: u64,
) -> Result<LloydRun> {
    validate_points(points, k)?;
    let runs = par::map_range(n_init.max(1), |r| {
        lloyd(points, k, max_iter, derive_seed(seed, r as u64))
    });
    let mut best: Option<LloydRun> = None;
    for run in runs {
        match &best {
            Some(b) if run.inertia >= b.inertia => {}
            _ => best = Some(run),
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Cluster the columns of `points` (`dim × n`) into `k` groups.
pub fn kmeans(points: ArrayView2<'_, f64>, k: usize, opts: &KMeansOptions, seed: u64) -> Result<Clustering> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("k = {k}; need at least 2 clusters")));
    }
    let normalized;
    let points = if opts.normalize_columns {
        normalized = normalize_columns(points);
        normalized.view()
    } else {
        points
    };
    let run = best_of(points, k, opts.max_iter, opts.n_init, seed)?;
    Ok(Clustering {
        labels: run.labels,
        k,
        inertia: run.inertia,
    })
}

fn normalize_columns(points: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = points.to_owned();
    for mut col in out.axis_iter_mut(Axis(1)) {
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            col.mapv_inplace(|v| v / norm);
        }
    }
    out
}

/// One clustering per representation matrix, layer `m` seeded with
/// `derive_seed(seed, m)`.
pub fn extract_clusterings(hs: &[Array2<f64>], k: usize, opts: &KMeansOptions, seed: u64) -> Result<Vec<Clustering>> {
    hs.iter()
        .enumerate()
        .map(|(m, h)| kmeans(h.view(), k, opts, derive_seed(seed, m as u64)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn separates_two_obvious_groups() {
        let pts = array![[0.0, 0.1, 10.0, 10.1]];
        let c = kmeans(pts.view(), 2, &KMeansOptions::default(), 1).unwrap();
        assert_eq!(c.labels[0], c.labels[1]);
        assert_eq!(c.labels[2], c.labels[3]);
        assert_ne!(c.labels[0], c.labels[2]);
        assert!((c.inertia - 0.01).abs() < 1e-12);
    }

    #[test]
    fn n_equals_k_gives_singletons() {
        let pts = array![[0.0, 5.0, 9.0], [1.0, -2.0, 3.0]];
        let c = kmeans(pts.view(), 3, &KMeansOptions::default(), 4).unwrap();
        let mut seen = c.labels.clone();
        seen.sort();
        assert_eq!(seen, vec![0, 1, 2]);
        assert_eq!(c.inertia, 0.0);
    }

    #[test]
    fn rejects_k_above_n_and_non_finite() {
        let pts = array![[0.0, 1.0]];
        assert!(kmeans(pts.view(), 3, &KMeansOptions::default(), 0).is_err());
        let bad = array![[0.0, f64::INFINITY, 2.0]];
        assert!(kmeans(bad.view(), 2, &KMeansOptions::default(), 0).is_err());
    }

    #[test]
    fn duplicate_points_still_fill_every_cluster() {
        let pts = array![[1.0, 1.0, 1.0, 1.0, 2.0]];
        let c = kmeans(pts.view(), 3, &KMeansOptions::default(), 9).unwrap();
        let mut counts = [0; 3];
        for &l in &c.labels {
            counts[l] += 1;
        }
        assert!(counts.iter().all(|&c| c > 0), "{counts:?}");
    }

    #[test]
    fn lloyd_inertia_is_non_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts = Array2::from_shape_simple_fn((3, 300), || rng.random::<f64>());
        for seed in 0..10 {
            let run = lloyd(pts.view(), 6, 100, seed);
            for w in run.history.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "{:?}", run.history);
            }
        }
    }

    #[test]
    fn restarts_are_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pts = Array2::from_shape_simple_fn((2, 120), || rng.random::<f64>());
        let a = kmeans(pts.view(), 4, &KMeansOptions::default(), 77).unwrap();
        let b = kmeans(pts.view(), 4, &KMeansOptions::default(), 77).unwrap();
        assert_eq!(a, b);
    }
}
