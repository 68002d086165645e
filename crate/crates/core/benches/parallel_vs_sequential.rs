//! Rayon backend against the sequential path on the same workloads.
//!
//! Built with the default features, every workload runs once inside a
//! single-thread pool and once on the default pool. Built with
//! `--no-default-features` it runs the plain-loop fallback, labelled
//! `sequential-build`, for comparison against the numbers from the other build.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dmclusts::dataset::generate_synthetic;
use dmclusts::dmf::concat_views;
use dmclusts::harness::{run_repeats, ExperimentConfig};
use dmclusts::metrics::silhouette;
use dmclusts::solver::fit;
use dmclusts::{kmeans, KMeansOptions, MultiViewDataset, PlantedTruth, SolverConfig, StructureSpec};

fn data(n: usize) -> (MultiViewDataset, PlantedTruth) {
    let spec = StructureSpec::disjoint(2, 2, 3, 20, 60.0, 3.0);
    generate_synthetic(n, &spec, 7).unwrap()
}

fn solver(seed: u64) -> SolverConfig {
    let mut cfg = SolverConfig::new(vec![20, 10], 3);
    cfg.lambda = 0.1;
    cfg.beta = 0.4;
    cfg.r = 0.1;
    cfg.pretrain = false;
    cfg.max_iter = 30;
    cfg.tol = 0.0;
    cfg.seed = seed;
    cfg
}

#[cfg(feature = "parallel")]
fn modes() -> Vec<(&'static str, Option<rayon::ThreadPool>)> {
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    vec![("rayon-1-thread", Some(one)), ("rayon-default", None)]
}

#[cfg(not(feature = "parallel"))]
fn modes() -> Vec<(&'static str, Option<()>)> {
    vec![("sequential-build", None)]
}

#[cfg(feature = "parallel")]
fn within<R: Send>(pool: &Option<rayon::ThreadPool>, f: impl FnOnce() -> R + Send) -> R {
    match pool {
        Some(p) => p.install(f),
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn within<R: Send>(_: &Option<()>, f: impl FnOnce() -> R + Send) -> R {
    f()
}

fn bench(c: &mut Criterion) {
    let (ds, _) = data(1000);
    let (small, small_truth) = data(300);
    let stacked = concat_views(&ds);
    let labels = kmeans(stacked.view(), 3, &KMeansOptions::default(), 0).unwrap();

    let mut exp = ExperimentConfig::default();
    exp.solver.clusters = 3;
    exp.solver.layers = Some(vec![20, 10]);
    exp.solver.max_iter = 20;
    exp.solver.pretrain = false;
    exp.run.repeats = 4;

    let modes = modes();
    let mut group = c.benchmark_group("workloads");
    group.sample_size(10);
    for (name, pool) in &modes {
        group.bench_function(BenchmarkId::new("kmeans", name), |b| {
            b.iter(|| {
                within(pool, || {
                    kmeans(stacked.view(), 3, &KMeansOptions::default(), 1).unwrap()
                })
            })
        });
        group.bench_function(BenchmarkId::new("silhouette", name), |b| {
            b.iter(|| within(pool, || silhouette(stacked.view(), &labels.labels).unwrap()))
        });
        group.bench_function(BenchmarkId::new("fit", name), |b| {
            b.iter(|| within(pool, || fit(&ds, &solver(0)).unwrap()))
        });
        group.bench_function(BenchmarkId::new("repeats", name), |b| {
            b.iter(|| within(pool, || run_repeats(&small, Some(&small_truth), &exp).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
