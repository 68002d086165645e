//! Clustering quality (silhouette, Dunn) and agreement (NMI, pair-counting
//! Jaccard) indexes, plus the per-run evaluation report.
//!
//! Quality is measured with Euclidean distances on the columns of a
//! `dim × n` point matrix. Agreement indexes compare two label vectors; for
//! multiple clusterings a *low* agreement means *high* diversity.

use std::collections::BTreeMap;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::clustering::Clustering;
use crate::dataset::{MultiViewDataset, PlantedTruth};
use crate::dmf::concat_views;
use crate::error::{Error, Result};
use crate::par;

fn dist(points: ArrayView2<'_, f64>, i: usize, j: usize) -> f64 {
    points
        .column(i)
        .iter()
        .zip(points.column(j).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Relabel to `0..k` in order of first appearance.
fn compact(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map = BTreeMap::new();
    let out = labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect();
    (out, map.len())
}

fn check_points(points: ArrayView2<'_, f64>, labels: &[usize]) -> Result<(Vec<usize>, usize)> {
    if points.ncols() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} points but {} labels",
            points.ncols(),
            labels.len()
        )));
    }
    let (labels, k) = compact(labels);
    if k < 2 {
        return Err(Error::DegenerateClusters("need at least 2 distinct clusters".into()));
    }
    Ok((labels, k))
}

/// Mean silhouette coefficient. Singletons score 0; `a = b` scores 0.
pub fn silhouette(points: ArrayView2<'_, f64>, labels: &[usize]) -> Result<f64> {
    let (labels, k) = check_points(points, labels)?;
    let n = labels.len();
    let mut sizes = vec![0usize; k];
    for &l in &labels {
        sizes[l] += 1;
    }
    let scores = par::map_range(n, |i| {
        let own = labels[i];
        if sizes[own] <= 1 {
            return 0.0;
        }
        let mut sums = vec![0.0; k];
        for j in 0..n {
            if j != i {
                sums[labels[j]] += dist(points, i, j);
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            (b - a) / denom
        } else {
            0.0
        }
    });
    Ok(scores.iter().sum::<f64>() / n as f64)
}

/// Dunn index: smallest between-cluster point distance over the largest
/// within-cluster diameter.
pub fn dunn_index(points: ArrayView2<'_, f64>, labels: &[usize]) -> Result<f64> {
    let (labels, _) = check_points(points, labels)?;
    let n = labels.len();
    let per_point = par::map_range(n, |i| {
        let mut min_inter = f64::INFINITY;
        let mut max_intra: f64 = 0.0;
        for j in (i + 1)..n {
            let d = dist(points, i, j);
            if labels[i] == labels[j] {
                max_intra = max_intra.max(d);
            } else {
                min_inter = min_inter.min(d);
            }
        }
        (min_inter, max_intra)
    });
    let (min_inter, max_intra) = per_point
        .into_iter()
        .fold((f64::INFINITY, 0.0_f64), |(a, b), (c, d)| (a.min(c), b.max(d)));
    if max_intra <= 0.0 {
        return Err(Error::DegenerateClusters("largest cluster diameter is zero".into()));
    }
    Ok(min_inter / max_intra)
}

struct Contingency {
    n: usize,
    cells: BTreeMap<(usize, usize), usize>,
    rows: BTreeMap<usize, usize>,
    cols: BTreeMap<usize, usize>,
}

fn contingency(a: &[usize], b: &[usize]) -> Result<Contingency> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "labelings of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    let mut cells = BTreeMap::new();
    let mut rows = BTreeMap::new();
    let mut cols = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *cells.entry((x, y)).or_insert(0) += 1;
        *rows.entry(x).or_insert(0) += 1;
        *cols.entry(y).or_insert(0) += 1;
    }
    Ok(Contingency {
        n: a.len(),
        cells,
        rows,
        cols,
    })
}

fn entropy(counts: &BTreeMap<usize, usize>, n: f64) -> f64 {
    counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            if p > 0.0 {
                -p * p.ln()
            } else {
                0.0
            }
        })
        .sum()
}

/// Normalized mutual information, `I(a; b) / sqrt(H(a) H(b))`, natural log.
/// Returns 0 when either labeling has zero entropy.
pub fn nmi(a: &[usize], b: &[usize]) -> Result<f64> {
    let t = contingency(a, b)?;
    if t.n == 0 {
        return Ok(0.0);
    }
    let n = t.n as f64;
    let ha = entropy(&t.rows, n);
    let hb = entropy(&t.cols, n);
    if ha <= 0.0 || hb <= 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for (&(x, y), &c) in &t.cells {
        let pxy = c as f64 / n;
        let px = t.rows[&x] as f64 / n;
        let py = t.cols[&y] as f64 / n;
        mi += pxy * (pxy / (px * py)).ln();
    }
    Ok((mi / (ha * hb).sqrt()).clamp(0.0, 1.0))
}

fn pairs(c: usize) -> f64 {
    (c as f64) * (c as f64 - 1.0) / 2.0
}

/// Pair-counting Jaccard coefficient between two labelings.
pub fn jaccard(a: &[usize], b: &[usize]) -> Result<f64> {
    let t = contingency(a, b)?;
    let both: f64 = t.cells.values().map(|&c| pairs(c)).sum();
    let in_a: f64 = t.rows.values().map(|&c| pairs(c)).sum();
    let in_b: f64 = t.cols.values().map(|&c| pairs(c)).sum();
    let union = in_a + in_b - both;
    if union <= 0.0 {
        return Ok(0.0);
    }
    Ok(both / union)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringQuality {
    pub index: usize,
    pub sc: f64,
    pub di: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityMean {
    pub sc: f64,
    pub di: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualitySection {
    pub per_clustering: Vec<ClusteringQuality>,
    pub mean: QualityMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDiversity {
    pub a: usize,
    pub b: usize,
    pub nmi: f64,
    pub jc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityMean {
    pub nmi: f64,
    pub jc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversitySection {
    pub pairs: Vec<PairDiversity>,
    /// `None` when there are fewer than two clusterings.
    pub mean: Option<DiversityMean>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthMatch {
    pub labeling: usize,
    pub clustering: usize,
    pub nmi: f64,
}

/// Free-form run metadata. Wall time is deliberately kept out of the report
/// so report files stay byte-reproducible; harness writes it separately.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub method: String,
    pub seed: u64,
    pub iterations: usize,
    pub converged: bool,
    pub quality_space: String,
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub quality: QualitySection,
    pub diversity: DiversitySection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth_match: Option<Vec<TruthMatch>>,
    pub meta: ReportMeta,
}

pub const QUALITY_SPACE: &str = "concatenated raw features, Euclidean";

/// Assign clusterings to truth labelings one-to-one maximising the summed NMI
/// (exhaustive; the number of clusterings is small).
pub fn match_truth(clusterings: &[Clustering], truth: &PlantedTruth) -> Result<Vec<TruthMatch>> {
    let t = truth.labelings.len();
    let c = clusterings.len();
    let mut table = vec![vec![0.0; c]; t];
    for (j, labels) in truth.labelings.iter().enumerate() {
        for (i, cl) in clusterings.iter().enumerate() {
            table[j][i] = nmi(&cl.labels, labels)?;
        }
    }
    let mut best: (f64, Vec<Option<usize>>) = (f64::NEG_INFINITY, vec![None; t]);
    let mut current = vec![None; t];
    let mut used = vec![false; c];
    fn search(
        j: usize,
        table: &[Vec<f64>],
        used: &mut [bool],
        current: &mut Vec<Option<usize>>,
        score: f64,
        best: &mut (f64, Vec<Option<usize>>),
    ) {
        if j == table.len() {
            if score > best.0 {
                *best = (score, current.clone());
            }
            return;
        }
        let free = used.iter().filter(|u| !**u).count();
        let remaining = table.len() - j;
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                current[j] = Some(i);
                search(j + 1, table, used, current, score + table[j][i], best);
                used[i] = false;
                current[j] = None;
            }
        }
        // leave labeling j unmatched only when clusterings run short
        if free < remaining {
            search(j + 1, table, used, current, score, best);
        }
    }
    search(0, &table, &mut used, &mut current, 0.0, &mut best);
    Ok(best
        .1
        .iter()
        .enumerate()
        .filter_map(|(j, i)| {
            i.map(|i| TruthMatch {
                labeling: j,
                clustering: i,
                nmi: table[j][i],
            })
        })
        .collect())
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, c) = xs.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    if c == 0 {
        f64::NAN
    } else {
        s / c as f64
    }
}

/// Quality of every clustering on the concatenated raw features, diversity of
/// every pair, and (with truth) the optimal clustering-to-labeling matching.
pub fn evaluate(
    ds: &MultiViewDataset,
    clusterings: &[Clustering],
    truth: Option<&PlantedTruth>,
) -> Result<EvaluationReport> {
    evaluate_on(concat_views(ds).view(), clusterings, truth)
}

pub fn evaluate_on(
    points: ArrayView2<'_, f64>,
    clusterings: &[Clustering],
    truth: Option<&PlantedTruth>,
) -> Result<EvaluationReport> {
    if clusterings.is_empty() {
        return Err(Error::InvalidConfig("no clusterings to evaluate".into()));
    }
    let per_clustering = clusterings
        .iter()
        .enumerate()
        .map(|(index, c)| {
            Ok(ClusteringQuality {
                index,
                sc: silhouette(points, &c.labels)?,
                di: dunn_index(points, &c.labels)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let quality = QualitySection {
        mean: QualityMean {
            sc: mean(per_clustering.iter().map(|q| q.sc)),
            di: mean(per_clustering.iter().map(|q| q.di)),
        },
        per_clustering,
    };

    let mut pairs = Vec::new();
    for a in 0..clusterings.len() {
        for b in (a + 1)..clusterings.len() {
            pairs.push(PairDiversity {
                a,
                b,
                nmi: nmi(&clusterings[a].labels, &clusterings[b].labels)?,
                jc: jaccard(&clusterings[a].labels, &clusterings[b].labels)?,
            });
        }
    }
    let diversity = DiversitySection {
        mean: if pairs.is_empty() {
            None
        } else {
            Some(DiversityMean {
                nmi: mean(pairs.iter().map(|p| p.nmi)),
                jc: mean(pairs.iter().map(|p| p.jc)),
            })
        },
        pairs,
    };

    let truth_match = truth.map(|t| match_truth(clusterings, t)).transpose()?;
    Ok(EvaluationReport {
        quality,
        diversity,
        truth_match,
        meta: ReportMeta {
            quality_space: QUALITY_SPACE.to_string(),
            ..ReportMeta::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn silhouette_hand_value() {
        let pts = array![[0.0, 1.0, 100.0, 101.0]];
        let sc = silhouette(pts.view(), &[0, 0, 1, 1]).unwrap();
        // points 0/3: a=1, b=100.5; points 1/2: a=1, b=99.5
        let want = ((99.5 / 100.5) + (98.5 / 99.5)) / 2.0;
        assert!((sc - want).abs() < 1e-12);
        assert!((sc - 0.99).abs() < 1e-4);
    }

    #[test]
    fn silhouette_coincident_clusters_is_zero() {
        let pts = array![[3.0, 3.0, 3.0, 3.0]];
        assert_eq!(silhouette(pts.view(), &[0, 0, 1, 1]).unwrap(), 0.0);
    }

    #[test]
    fn silhouette_singletons_score_zero() {
        let pts = array![[0.0, 10.0, 11.0]];
        let sc = silhouette(pts.view(), &[0, 1, 1]).unwrap();
        // singleton contributes 0; the pair: a=1, b=10 / 11
        let want = (0.0 + (10.0 - 1.0) / 10.0 + (11.0 - 1.0) / 11.0) / 3.0;
        assert!((sc - want).abs() < 1e-12);
    }

    #[test]
    fn single_cluster_is_an_error() {
        let pts = array![[0.0, 1.0]];
        assert!(silhouette(pts.view(), &[4, 4]).is_err());
        assert!(dunn_index(pts.view(), &[4, 4]).is_err());
        assert!(silhouette(pts.view(), &[0, 1, 1]).is_err());
    }

    #[test]
    fn dunn_hand_value_and_degenerate() {
        let pts = array![[0.0, 1.0, 10.0, 11.0]];
        assert!((dunn_index(pts.view(), &[0, 0, 1, 1]).unwrap() - 9.0).abs() < 1e-12);
        let masses = array![[0.0, 0.0, 5.0, 5.0]];
        assert!(matches!(
            dunn_index(masses.view(), &[0, 0, 1, 1]),
            Err(Error::DegenerateClusters(_))
        ));
    }

    #[test]
    fn nmi_and_jaccard_independence_cases() {
        let a = [1, 1, 2, 2];
        let b = [1, 2, 1, 2];
        assert!(nmi(&a, &b).unwrap().abs() < 1e-12);
        assert_eq!(jaccard(&a, &b).unwrap(), 0.0);
        assert!((nmi(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(jaccard(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn jaccard_one_cluster_vs_singletons() {
        assert_eq!(jaccard(&[0, 0, 0], &[0, 1, 2]).unwrap(), 0.0);
    }

    #[test]
    fn length_mismatch_errors() {
        assert!(nmi(&[0, 1], &[0, 1, 1]).is_err());
        assert!(jaccard(&[0, 1], &[0]).is_err());
    }

    #[test]
    fn truth_matching_picks_the_best_assignment() {
        let truth = PlantedTruth {
            labelings: vec![vec![0, 0, 1, 1], vec![0, 1, 0, 1]],
            view_assignment: vec![vec![0], vec![1]],
        };
        let cs = vec![
            Clustering::from_labels(vec![1, 0, 1, 0]).unwrap(),
            Clustering::from_labels(vec![1, 1, 0, 0]).unwrap(),
        ];
        let m = match_truth(&cs, &truth).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!((m[0].labeling, m[0].clustering), (0, 1));
        assert_eq!((m[1].labeling, m[1].clustering), (1, 0));
        assert!(m.iter().all(|t| (t.nmi - 1.0).abs() < 1e-12));
    }
}
