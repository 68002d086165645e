//! Multi-view datasets: validation, CSV/JSON persistence and synthetic
//! generators with planted alternative clusterings.
//!
//! In memory every view is stored features × samples (`d_v × n`). On disk a
//! view is a header-less CSV with one row per sample, so the loader and writer
//! transpose.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::derive_seed;

/// `V` feature matrices over the same `n` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewDataset {
    views: Vec<Array2<f64>>,
    names: Vec<String>,
    n: usize,
}

impl MultiViewDataset {
    /// Build a dataset from `d_v × n` view matrices.
    pub fn new(views: Vec<Array2<f64>>, names: Vec<String>) -> Result<Self> {
        let ds = Self::from_parts_unchecked(views, names);
        ds.validate()?;
        Ok(ds)
    }

    /// Views named `view0`, `view1`, ...
    pub fn from_views(views: Vec<Array2<f64>>) -> Result<Self> {
        let names = (0..views.len()).map(|v| format!("view{v}")).collect();
        Self::new(views, names)
    }

    pub(crate) fn from_parts_unchecked(views: Vec<Array2<f64>>, names: Vec<String>) -> Self {
        let n = views.first().map(|v| v.ncols()).unwrap_or(0);
        Self { views, names, n }
    }

    pub fn validate(&self) -> Result<()> {
        if self.views.is_empty() {
            return Err(Error::InvalidDataset("dataset has no views".into()));
        }
        if self.names.len() != self.views.len() {
            return Err(Error::InvalidDataset(format!(
                "{} names for {} views",
                self.names.len(),
                self.views.len()
            )));
        }
        for (v, x) in self.views.iter().enumerate() {
            if x.nrows() == 0 {
                return Err(Error::EmptyView(format!("view {v} has no features")));
            }
            if x.ncols() != self.n {
                return Err(Error::SampleCountMismatch {
                    expected: self.n,
                    got: x.ncols(),
                    context: format!("view {v}"),
                });
            }
            if !x.iter().all(|e| e.is_finite()) {
                return Err(Error::NonFinite(format!("view {v}")));
            }
        }
        if self.n < 2 {
            return Err(Error::InvalidDataset(format!(
                "need at least 2 samples, got {}",
                self.n
            )));
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        self.n
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn views(&self) -> &[Array2<f64>] {
        &self.views
    }

    pub fn view(&self, v: usize) -> &Array2<f64> {
        &self.views[v]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Feature dimension of each view.
    pub fn dims(&self) -> Vec<usize> {
        self.views.iter().map(|x| x.nrows()).collect()
    }

    pub fn min_dim(&self) -> usize {
        self.views.iter().map(|x| x.nrows()).min().unwrap_or(0)
    }

    /// Per-feature z-scoring (feature rows centred, scaled to unit variance).
    /// Constant features are only centred.
    pub fn zscore(&self) -> Self {
        let views = self
            .views
            .iter()
            .map(|x| {
                let mut out = x.clone();
                for mut row in out.axis_iter_mut(Axis(0)) {
                    let mean = row.mean().unwrap_or(0.0);
                    let var = row.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / row.len() as f64;
                    let sd = var.sqrt();
                    row.mapv_inplace(|e| if sd > 0.0 { (e - mean) / sd } else { e - mean });
                }
                out
            })
            .collect();
        Self::from_parts_unchecked(views, self.names.clone())
    }
}

/// Ground-truth labelings planted by the synthetic generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlantedTruth {
    pub labelings: Vec<Vec<usize>>,
    /// For each labeling, the views that carry it.
    pub view_assignment: Vec<Vec<usize>>,
}

impl PlantedTruth {
    pub fn cluster_count(&self, j: usize) -> usize {
        self.labelings[j].iter().max().map(|m| m + 1).unwrap_or(0)
    }

    pub fn validate(&self, n: usize, n_views: usize) -> Result<()> {
        if self.labelings.len() != self.view_assignment.len() {
            return Err(Error::InvalidDataset(
                "truth labelings and view assignments differ in length".into(),
            ));
        }
        for (j, (labels, views)) in self.labelings.iter().zip(&self.view_assignment).enumerate() {
            if labels.len() != n {
                return Err(Error::SampleCountMismatch {
                    expected: n,
                    got: labels.len(),
                    context: format!("truth labeling {j}"),
                });
            }
            if views.is_empty() {
                return Err(Error::InvalidDataset(format!(
                    "truth labeling {j} is not encoded by any view"
                )));
            }
            if let Some(&bad) = views.iter().find(|&&v| v >= n_views) {
                return Err(Error::InvalidDataset(format!(
                    "truth labeling {j} references view {bad} of {n_views}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ManifestView {
    pub name: String,
    pub file: String,
    pub d: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ManifestTruth {
    pub labels_file: String,
    pub views: Vec<usize>,
}

/// On-disk manifest; file paths are relative to the manifest's directory.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub n: usize,
    pub views: Vec<ManifestView>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<Vec<ManifestTruth>>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Manifest {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn base_dir(manifest_path: &Path) -> PathBuf {
    manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Read a samples-as-rows CSV into a `d × n` matrix.
pub fn read_matrix_csv(path: &Path) -> Result<Array2<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Manifest {
                path: path.to_path_buf(),
                message: format!("{other:?}"),
            },
        })?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Manifest {
            path: path.to_path_buf(),
            message: format!("row {r}: {e}"),
        })?;
        let mut row = Vec::with_capacity(record.len());
        for (c, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                row: r,
                col: c,
                cell: cell.to_string(),
            })?;
            row.push(value);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyView(path.display().to_string()));
    }
    let d = rows[0].len();
    if d == 0 {
        return Err(Error::EmptyView(path.display().to_string()));
    }
    if let Some((r, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != d) {
        return Err(Error::DimensionMismatch(format!(
            "{}: row {r} has {} columns, expected {d}",
            path.display(),
            row.len()
        )));
    }
    let n = rows.len();
    Ok(Array2::from_shape_fn((d, n), |(i, j)| rows[j][i]))
}

/// Write a `d × n` matrix as samples-as-rows CSV (LF endings, shortest
/// round-trip float formatting).
pub fn write_matrix_csv(path: &Path, x: &Array2<f64>) -> Result<()> {
    let mut out = String::with_capacity(x.len() * 12);
    for sample in x.axis_iter(Axis(1)) {
        let mut first = true;
        for value in sample.iter() {
            if !first {
                out.push(',');
            }
            first = false;
            out.push_str(&format!("{value:?}"));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(r, l)| {
            l.trim().parse::<usize>().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                row: r,
                col: 0,
                cell: l.to_string(),
            })
        })
        .collect()
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut out = String::with_capacity(labels.len() * 3);
    for l in labels {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Load and validate a dataset from its manifest.
pub fn load_dataset(manifest_path: impl AsRef<Path>) -> Result<MultiViewDataset> {
    load_with_truth(manifest_path).map(|(ds, _)| ds)
}

/// Load a dataset together with any ground truth listed in the manifest.
pub fn load_with_truth(manifest_path: impl AsRef<Path>) -> Result<(MultiViewDataset, Option<PlantedTruth>)> {
    let manifest_path = manifest_path.as_ref();
    let manifest = read_manifest(manifest_path)?;
    let dir = base_dir(manifest_path);
    if manifest.views.is_empty() {
        return Err(Error::Manifest {
            path: manifest_path.to_path_buf(),
            message: "no views listed".into(),
        });
    }

    let mut views = Vec::with_capacity(manifest.views.len());
    let mut names = Vec::with_capacity(manifest.views.len());
    for entry in &manifest.views {
        let path = dir.join(&entry.file);
        let x = read_matrix_csv(&path)?;
        if x.ncols() != manifest.n {
            return Err(Error::SampleCountMismatch {
                expected: manifest.n,
                got: x.ncols(),
                context: format!("view {:?} ({})", entry.name, path.display()),
            });
        }
        if x.nrows() != entry.d {
            return Err(Error::DimensionMismatch(format!(
                "view {:?} declares d={} but file has {} columns",
                entry.name,
                entry.d,
                x.nrows()
            )));
        }
        views.push(x);
        names.push(entry.name.clone());
    }
    let ds = MultiViewDataset::new(views, names)?;

    let truth = match &manifest.truth {
        None => None,
        Some(entries) => {
            let mut labelings = Vec::with_capacity(entries.len());
            let mut assignment = Vec::with_capacity(entries.len());
            for t in entries {
                labelings.push(read_labels(&dir.join(&t.labels_file))?);
                assignment.push(t.views.clone());
            }
            let truth = PlantedTruth {
                labelings,
                view_assignment: assignment,
            };
            truth.validate(ds.n_samples(), ds.n_views())?;
            Some(truth)
        }
    };
    Ok((ds, truth))
}

/// Write manifest + one CSV per view into `dir`; returns the manifest path.
pub fn save_dataset(ds: &MultiViewDataset, dir: impl AsRef<Path>) -> Result<PathBuf> {
    save_with_truth(ds, None, dir)
}

pub fn save_with_truth(ds: &MultiViewDataset, truth: Option<&PlantedTruth>, dir: impl AsRef<Path>) -> Result<PathBuf> {
    ds.validate()?;
    if let Some(t) = truth {
        t.validate(ds.n_samples(), ds.n_views())?;
    }
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut views = Vec::with_capacity(ds.n_views());
    for (v, (x, name)) in ds.views().iter().zip(ds.names()).enumerate() {
        let file = format!("view_{v}.csv");
        write_matrix_csv(&dir.join(&file), x)?;
        views.push(ManifestView {
            name: name.clone(),
            file,
            d: x.nrows(),
        });
    }
    let truth_entries = match truth {
        None => None,
        Some(t) => {
            let mut entries = Vec::with_capacity(t.labelings.len());
            for (j, (labels, vs)) in t.labelings.iter().zip(&t.view_assignment).enumerate() {
                let file = format!("labels_{j}.txt");
                write_labels(&dir.join(&file), labels)?;
                entries.push(ManifestTruth {
                    labels_file: file,
                    views: vs.clone(),
                });
            }
            Some(entries)
        }
    };
    let manifest = Manifest {
        n: ds.n_samples(),
        views,
        truth: truth_entries,
    };
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Serialization(e.to_string()))?;
    text.push('\n');
    let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// One planted labeling for [`generate_synthetic`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureSpec {
    /// Number of clusters in this labeling.
    pub k: usize,
    /// Views that carry this labeling. A view may carry several labelings.
    pub views: Vec<usize>,
    /// Feature dimension of each of those views.
    pub d: usize,
    /// Pairwise distance between cluster means.
    pub separation: f64,
    /// Per-feature Gaussian noise standard deviation.
    pub noise: f64,
}

impl StructureSpec {
    /// `count` structures on disjoint groups of `views_per` views each.
    pub fn disjoint(
        count: usize,
        views_per: usize,
        k: usize,
        d: usize,
        separation: f64,
        noise: f64,
    ) -> Vec<StructureSpec> {
        (0..count)
            .map(|j| StructureSpec {
                k,
                views: (j * views_per..(j + 1) * views_per).collect(),
                d,
                separation,
                noise,
            })
            .collect()
    }
}

/// `k` orthonormal directions in `R^d` (Gram-Schmidt on Gaussian draws).
fn orthonormal_directions(d: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<Array1<f64>> {
    let mut basis: Vec<Array1<f64>> = Vec::with_capacity(k);
    while basis.len() < k {
        let mut v: Array1<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        for b in &basis {
            let proj = v.dot(b);
            v.scaled_add(-proj, b);
        }
        let norm = v.dot(&v).sqrt();
        if norm > 1e-8 {
            basis.push(v / norm);
        }
    }
    basis
}

/// Balanced labels (every cluster within one of n/k), shuffled.
fn balanced_labels(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    labels.shuffle(rng);
    labels
}

/// Generate a multi-view dataset with planted alternative clusterings.
///
/// Structure `j` draws an independent labeling of the `n` samples; each view
/// it lists gets, per sample, the mean of that sample's cluster plus Gaussian
/// noise. Cluster means sit at `separation / sqrt(2)` along orthonormal
/// directions, so every pair of means is exactly `separation` apart.
pub fn generate_synthetic(n: usize, spec: &[StructureSpec], seed: u64) -> Result<(MultiViewDataset, PlantedTruth)> {
    if spec.is_empty() {
        return Err(Error::InvalidSynthetic("no structures requested".into()));
    }
    let total_k: usize = spec.iter().map(|s| s.k).sum();
    if n < total_k {
        return Err(Error::InvalidSynthetic(format!(
            "n = {n} is smaller than the total cluster count {total_k}"
        )));
    }
    let mut view_dim: Vec<Option<usize>> = Vec::new();
    for (j, s) in spec.iter().enumerate() {
        if s.k < 2 {
            return Err(Error::InvalidSynthetic(format!("structure {j}: k = {} < 2", s.k)));
        }
        if s.views.is_empty() {
            return Err(Error::InvalidSynthetic(format!("structure {j}: empty view list")));
        }
        if s.d < s.k {
            return Err(Error::InvalidSynthetic(format!(
                "structure {j}: d = {} < k = {} leaves no room for separated means",
                s.d, s.k
            )));
        }
        if !(s.separation > 0.0 && s.separation.is_finite()) {
            return Err(Error::InvalidSynthetic(format!(
                "structure {j}: separation must be positive"
            )));
        }
        if !(s.noise >= 0.0 && s.noise.is_finite()) {
            return Err(Error::InvalidSynthetic(format!(
                "structure {j}: noise must be non-negative"
            )));
        }
        for &v in &s.views {
            if v >= view_dim.len() {
                view_dim.resize(v + 1, None);
            }
            match view_dim[v] {
                Some(d) if d != s.d => {
                    return Err(Error::InvalidSynthetic(format!(
                        "view {v} requested with dimensions {d} and {}",
                        s.d
                    )))
                }
                _ => view_dim[v] = Some(s.d),
            }
        }
    }
    let dims: Vec<usize> = view_dim
        .iter()
        .enumerate()
        .map(|(v, d)| d.ok_or_else(|| Error::InvalidSynthetic(format!("view {v} carries no structure"))))
        .collect::<Result<_>>()?;

    let mut views: Vec<Array2<f64>> = dims.iter().map(|&d| Array2::zeros((d, n))).collect();
    let mut labelings = Vec::with_capacity(spec.len());
    for (j, s) in spec.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, j as u64));
        let labels = balanced_labels(n, s.k, &mut rng);
        let scale = s.separation / std::f64::consts::SQRT_2;
        for &v in &s.views {
            let means: Vec<Array1<f64>> = orthonormal_directions(s.d, s.k, &mut rng)
                .into_iter()
                .map(|u| u * scale)
                .collect();
            let x = &mut views[v];
            for (i, &label) in labels.iter().enumerate() {
                for f in 0..s.d {
                    let eps: f64 = StandardNormal.sample(&mut rng);
                    x[[f, i]] += means[label][f] + s.noise * eps;
                }
            }
        }
        labelings.push(labels);
    }
    let names = (0..views.len()).map(|v| format!("view{v}")).collect();
    let ds = MultiViewDataset::new(views, names)?;
    let truth = PlantedTruth {
        labelings,
        view_assignment: spec.iter().map(|s| s.views.clone()).collect(),
    };
    Ok((ds, truth))
}

/// Append an i.i.d. standard-normal `d × n` view named `noise`.
pub fn add_noise_view(ds: &MultiViewDataset, d: usize, seed: u64) -> Result<MultiViewDataset> {
    if d == 0 {
        return Err(Error::InvalidDataset("noise view needs d >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = ds.n_samples();
    let noise = Array2::from_shape_simple_fn((d, n), || StandardNormal.sample(&mut rng));
    let mut views = ds.views().to_vec();
    views.push(noise);
    let mut names = ds.names().to_vec();
    names.push("noise".to_string());
    MultiViewDataset::new(views, names)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_mismatched_sample_counts() {
        let err = MultiViewDataset::from_views(vec![Array2::zeros((2, 3)), Array2::zeros((2, 4))]).unwrap_err();
        assert!(err.to_string().contains("sample count mismatch"), "{err}");
    }

    #[test]
    fn rejects_non_finite() {
        let err = MultiViewDataset::from_views(vec![array![[1.0, f64::NAN]]]).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
    }

    #[test]
    fn save_rejects_zero_row_view_before_writing() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("out");
        let ds = MultiViewDataset::from_parts_unchecked(vec![Array2::zeros((0, 3))], vec!["empty".into()]);
        let err = save_dataset(&ds, &target).unwrap_err();
        assert!(matches!(err, Error::EmptyView(_)));
        assert!(!target.exists());
    }

    #[test]
    fn orthonormal_means_are_separated() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let dirs = orthonormal_directions(6, 4, &mut rng);
        for a in 0..4 {
            for b in 0..4 {
                let dot = dirs[a].dot(&dirs[b]);
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn synthetic_rejects_bad_specs() {
        let mut s = StructureSpec::disjoint(1, 2, 3, 5, 10.0, 0.1);
        s[0].k = 1;
        assert!(generate_synthetic(30, &s, 0).is_err());
        let mut s = StructureSpec::disjoint(1, 2, 3, 5, 10.0, 0.1);
        s[0].views.clear();
        assert!(generate_synthetic(30, &s, 0).is_err());
        let s = StructureSpec::disjoint(1, 2, 3, 5, 0.0, 0.1);
        assert!(generate_synthetic(30, &s, 0).is_err());
        let s = StructureSpec::disjoint(2, 2, 3, 5, 1.0, 0.1);
        assert!(generate_synthetic(5, &s, 0).is_err());
    }

    #[test]
    fn zero_noise_views_are_point_masses() {
        let spec = StructureSpec::disjoint(2, 2, 3, 4, 10.0, 0.0);
        let (ds, truth) = generate_synthetic(60, &spec, 1).unwrap();
        assert_eq!(ds.n_views(), 4);
        // samples sharing a label share their column exactly in views 0, 1
        let labels = &truth.labelings[0];
        let x = ds.view(0);
        for i in 0..60 {
            for j in 0..60 {
                if labels[i] == labels[j] {
                    assert_eq!(x.column(i), x.column(j));
                } else {
                    let d2: f64 = (&x.column(i) - &x.column(j)).mapv(|e| e * e).sum();
                    assert!((d2.sqrt() - 10.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn zscore_standardises_features() {
        let ds = MultiViewDataset::from_views(vec![array![[1.0, 2.0, 3.0], [5.0, 5.0, 5.0]]]).unwrap();
        let z = ds.zscore();
        let row = z.view(0).row(0).to_owned();
        assert!(row.mean().unwrap().abs() < 1e-12);
        assert!((row.mapv(|e| e * e).mean().unwrap() - 1.0).abs() < 1e-12);
        assert!(z.view(0).row(1).iter().all(|&e| e == 0.0));
    }
}
