use std::collections::HashMap;

use dmclusts::metrics::{dunn_index, evaluate_on, jaccard, nmi, silhouette};
use dmclusts::{Clustering, Error};
use ndarray::{array, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Mutual information over sqrt of the entropies, from explicit counts.
fn nmi_oracle(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    let mut joint: HashMap<(usize, usize), f64> = HashMap::new();
    let mut pa: HashMap<usize, f64> = HashMap::new();
    let mut pb: HashMap<usize, f64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1.0;
        *pa.entry(x).or_default() += 1.0;
        *pb.entry(y).or_default() += 1.0;
    }
    let mut mi = 0.0;
    for (&(x, y), &c) in &joint {
        mi += c / n * ((c * n) / (pa[&x] * pb[&y])).ln();
    }
    let ent = |p: &HashMap<usize, f64>| -p.values().map(|c| c / n * (c / n).ln()).sum::<f64>();
    let (ha, hb) = (ent(&pa), ent(&pb));
    if ha == 0.0 || hb == 0.0 {
        return 0.0;
    }
    mi / (ha * hb).sqrt()
}

fn random_labels(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
    labels[0] = 0;
    labels[1] = 1;
    labels
}

#[test]
fn hand_values() {
    let pts = array![[0.0, 1.0, 100.0, 101.0]];
    let sc = silhouette(pts.view(), &[0, 0, 1, 1]).unwrap();
    // a = 1 and b ≈ 100 for every point
    let want = (1.0 - 1.0 / 100.5 + 1.0 - 1.0 / 99.5) / 2.0;
    assert!((sc - want).abs() < 1e-6, "{sc}");
    assert!((sc - 0.9900).abs() < 1e-4);

    let pts = array![[0.0, 1.0, 10.0, 11.0]];
    assert!((dunn_index(pts.view(), &[0, 0, 1, 1]).unwrap() - 9.0).abs() < 1e-6);

    let (a, b) = ([0, 0, 1, 1], [0, 1, 0, 1]);
    assert!(nmi(&a, &b).unwrap().abs() < 1e-6);
    assert!(jaccard(&a, &b).unwrap().abs() < 1e-6);
    assert!((nmi(&a, &a).unwrap() - 1.0).abs() < 1e-6);
    assert!((jaccard(&a, &a).unwrap() - 1.0).abs() < 1e-6);
    assert!(jaccard(&[0, 0, 0], &[0, 1, 2]).unwrap().abs() < 1e-6);
}

#[test]
fn far_apart_point_masses_score_near_one() {
    let pts = array![[0.0, 0.0, 1000.0, 1000.0]];
    assert!(silhouette(pts.view(), &[0, 0, 1, 1]).unwrap() >= 0.999);
}

#[test]
fn nmi_matches_contingency_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let n = rng.random_range(2..80);
        let a = random_labels(n, rng.random_range(2..6), &mut rng);
        let b = random_labels(n, rng.random_range(2..6), &mut rng);
        assert!((nmi(&a, &b).unwrap() - nmi_oracle(&a, &b)).abs() < 1e-12);
    }
}

#[test]
fn symmetric_and_permutation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let n = rng.random_range(4..60);
        let a = random_labels(n, 3, &mut rng);
        let b = random_labels(n, 4, &mut rng);
        let relabeled: Vec<usize> = a.iter().map(|&l| [2, 0, 1][l]).collect();
        assert!((nmi(&a, &b).unwrap() - nmi(&b, &a).unwrap()).abs() < 1e-12);
        assert!((jaccard(&a, &b).unwrap() - jaccard(&b, &a).unwrap()).abs() < 1e-12);
        assert!((nmi(&relabeled, &b).unwrap() - nmi(&a, &b).unwrap()).abs() < 1e-12);
        assert!((jaccard(&relabeled, &b).unwrap() - jaccard(&a, &b).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn geometric_invariances() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pts = Array2::from_shape_simple_fn((2, 30), || rng.random::<f64>());
    let labels = random_labels(30, 3, &mut rng);
    let (c, s) = (0.6f64, 0.8f64);
    let rotated = Array2::from_shape_fn((2, 30), |(i, j)| {
        let (x, y) = (pts[[0, j]], pts[[1, j]]);
        if i == 0 {
            c * x - s * y + 5.0
        } else {
            s * x + c * y - 2.0
        }
    });
    let sc = silhouette(pts.view(), &labels).unwrap();
    let di = dunn_index(pts.view(), &labels).unwrap();
    assert!((silhouette(rotated.view(), &labels).unwrap() - sc).abs() < 1e-10);
    assert!((dunn_index(rotated.view(), &labels).unwrap() - di).abs() < 1e-10);
    let scaled = pts.mapv(|v| v * 7.5);
    assert!((dunn_index(scaled.view(), &labels).unwrap() - di).abs() < 1e-10);
}

#[test]
fn separating_clusters_raises_dunn() {
    let mut last = 0.0;
    for gap in [2.0, 4.0, 8.0, 16.0] {
        let pts = array![[0.0, 1.0, gap + 1.0, gap + 2.0]];
        let di = dunn_index(pts.view(), &[0, 0, 1, 1]).unwrap();
        assert!(di > last);
        last = di;
    }
}

#[test]
fn fuzz_keeps_every_metric_in_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for case in 0..1000 {
        let n = rng.random_range(3..40);
        let d = rng.random_range(1..4);
        let pts = Array2::from_shape_simple_fn((d, n), || rng.random::<f64>() * 10.0 - 5.0);
        let a = random_labels(n, rng.random_range(2..5), &mut rng);
        let b = random_labels(n, rng.random_range(2..5), &mut rng);
        let sc = silhouette(pts.view(), &a).unwrap();
        assert!((-1.0..=1.0).contains(&sc), "case {case}: sc {sc}");
        let all_singletons = (0..n).all(|i| a.iter().filter(|&&l| l == a[i]).count() == 1);
        match dunn_index(pts.view(), &a) {
            Ok(di) => assert!(di >= 0.0 && di.is_finite(), "case {case}: di {di}"),
            Err(Error::DegenerateClusters(_)) => assert!(all_singletons, "case {case}"),
            Err(e) => panic!("case {case}: {e}"),
        }
        let v = nmi(&a, &b).unwrap();
        assert!((0.0..=1.0 + 1e-12).contains(&v), "case {case}: nmi {v}");
        let j = jaccard(&a, &b).unwrap();
        assert!((0.0..=1.0).contains(&j), "case {case}: jc {j}");
    }
}

#[test]
fn report_sections() {
    let pts = array![[0.0, 1.0, 10.0, 11.0], [0.0, 0.5, 0.0, 0.5]];
    let c = Clustering::from_labels(vec![0, 0, 1, 1]).unwrap();
    let single = evaluate_on(pts.view(), std::slice::from_ref(&c), None).unwrap();
    assert!(single.diversity.pairs.is_empty());
    assert!(single.diversity.mean.is_none());
    let twice = evaluate_on(pts.view(), &[c.clone(), c], None).unwrap();
    let mean = twice.diversity.mean.unwrap();
    assert!((mean.nmi - 1.0).abs() < 1e-12);
    assert!((mean.jc - 1.0).abs() < 1e-12);
}
