use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{ExperimentConfig, SynthSpec};
use super::run::{run_repeats, write_json, write_run, Aggregate, Stat};
use crate::clustering::Clustering;
use crate::dataset::{
    add_noise_view, generate_synthetic, load_with_truth, read_labels, save_with_truth, MultiViewDataset, PlantedTruth,
    StructureSpec,
};
use crate::error::{Error, Result};
use crate::linalg::derive_seed;
use crate::metrics::{evaluate, EvaluationReport};

/// Build the dataset described by `spec`. The noise view, if any, is seeded
/// from a stream of `spec.seed` separate from the structures.
pub fn synthesize(spec: &SynthSpec) -> Result<(MultiViewDataset, PlantedTruth)> {
    if spec.structures == 0 || spec.views_per == 0 {
        return Err(Error::InvalidSynthetic(
            "need at least one structure and one view per structure".into(),
        ));
    }
    let structures = StructureSpec::disjoint(
        spec.structures,
        spec.views_per,
        spec.k,
        spec.dim,
        spec.separation,
        spec.sigma,
    );
    let (mut ds, truth) = generate_synthetic(spec.n, &structures, spec.seed)?;
    if let Some(d) = spec.noise_view {
        ds = add_noise_view(&ds, d, derive_seed(spec.seed, u64::MAX))?;
    }
    Ok((ds, truth))
}

/// Generate a dataset and write it to `out`; returns the manifest path.
pub fn cmd_synth(spec: &SynthSpec, out: &Path) -> Result<PathBuf> {
    let (ds, truth) = synthesize(spec)?;
    save_with_truth(&ds, Some(&truth), out)
}

/// The dataset an experiment runs on, z-scored if requested.
pub fn load_experiment_data(cfg: &ExperimentConfig) -> Result<(MultiViewDataset, Option<PlantedTruth>)> {
    let (ds, truth) = match (&cfg.dataset.path, &cfg.dataset.synthetic) {
        (Some(path), None) => load_with_truth(path)?,
        (None, Some(spec)) => synthesize(spec).map(|(d, t)| (d, Some(t)))?,
        _ => {
            return Err(Error::InvalidConfig(
                "give exactly one of a dataset path or a synthetic spec".into(),
            ))
        }
    };
    let ds = if cfg.dataset.zscore { ds.zscore() } else { ds };
    Ok((ds, truth))
}

#[derive(Debug, Serialize)]
struct Timing {
    run: usize,
    seed: u64,
    seconds: f64,
}

/// Run every repeat, write per-run directories plus `aggregate.json`,
/// `timings.json` and the resolved `config.toml` under `cfg.run.out`.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<Aggregate> {
    cfg.validate()?;
    let (ds, truth) = load_experiment_data(cfg)?;
    let runs = run_repeats(&ds, truth.as_ref(), cfg)?;
    let out = &cfg.run.out;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    fs::write(out.join("config.toml"), cfg.to_toml_string()?).map_err(|e| Error::io(out.join("config.toml"), e))?;

    let mut timings = Vec::new();
    for (i, seed, result) in &runs {
        match result {
            Ok(outcome) => {
                write_run(&out.join(format!("run_{i:03}")), outcome, ds.names())?;
                timings.push(Timing {
                    run: *i,
                    seed: *seed,
                    seconds: outcome.seconds,
                });
            }
            Err(e) => log::warn!("run {i} (seed {seed}) failed: {e}"),
        }
    }
    let aggregate = Aggregate::from_runs(cfg.solver.method, &runs);
    write_json(&out.join("aggregate.json"), &aggregate)?;
    write_json(&out.join("timings.json"), &timings)?;
    Ok(aggregate)
}

/// One line of the sweep CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub di_mean: f64,
    pub di_std: f64,
    pub diversity_mean: f64,
    pub diversity_std: f64,
    pub completed: usize,
    pub note: String,
}

/// For every sweep value, run all repeats and record DI and `1 − NMI`
/// (mean and population std). Writes `sweep_{param}.csv` under
/// `cfg.run.out` and returns the rows.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("sweep needs --sweep <lambda|r|beta>".into()))?;
    let values = cfg.sweep_values().expect("sweep present");
    let (ds, truth) = load_experiment_data(cfg)?;

    let mut rows = Vec::with_capacity(values.len());
    for &value in &values {
        let mut point = cfg.clone();
        sweep.param.apply(&mut point.solver, value);
        let row = match run_repeats(&ds, truth.as_ref(), &point) {
            Err(e) => nan_row(value, 0, e.to_string()),
            Ok(runs) => {
                let agg = Aggregate::from_runs(cfg.solver.method, &runs);
                let diversity: Vec<f64> = runs
                    .iter()
                    .filter_map(|(_, _, r)| r.as_ref().ok())
                    .filter_map(|o| o.report.diversity.mean.as_ref().map(|m| 1.0 - m.nmi))
                    .collect();
                match (agg.di, Stat::of(&diversity)) {
                    (Some(di), Some(div)) => SweepRow {
                        value,
                        di_mean: di.mean,
                        di_std: di.std,
                        diversity_mean: div.mean,
                        diversity_std: div.std,
                        completed: agg.completed,
                        note: if agg.failures.is_empty() {
                            String::new()
                        } else {
                            format!("{} of {} runs failed", agg.failures.len(), agg.repeats)
                        },
                    },
                    _ => nan_row(
                        value,
                        agg.completed,
                        agg.failures
                            .first()
                            .map(|f| f.error.clone())
                            .unwrap_or_else(|| "no clustering pairs to compare".into()),
                    ),
                }
            }
        };
        rows.push(row);
    }

    let out = &cfg.run.out;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let path = out.join(format!("sweep_{}.csv", sweep.param.as_str()));
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&path)
        .map_err(|e| Error::io(&path, e.into()))?;
    for row in &rows {
        w.serialize(row).map_err(|e| Error::io(&path, e.into()))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(rows)
}

fn nan_row(value: f64, completed: usize, note: String) -> SweepRow {
    SweepRow {
        value,
        di_mean: f64::NAN,
        di_std: f64::NAN,
        diversity_mean: f64::NAN,
        diversity_std: f64::NAN,
        completed,
        note,
    }
}

/// Evaluate clusterings stored as label files against a dataset.
pub fn cmd_eval(manifest: &Path, label_files: &[PathBuf]) -> Result<EvaluationReport> {
    if label_files.is_empty() {
        return Err(Error::InvalidConfig("eval needs at least one labels file".into()));
    }
    let (ds, truth) = load_with_truth(manifest)?;
    let clusterings = label_files
        .iter()
        .map(|p| {
            let labels = read_labels(p)?;
            if labels.len() != ds.n_samples() {
                return Err(Error::SampleCountMismatch {
                    expected: ds.n_samples(),
                    got: labels.len(),
                    context: format!("labels file {}", p.display()),
                });
            }
            Clustering::from_labels(labels)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = evaluate(&ds, &clusterings, truth.as_ref())?;
    report.meta.method = "external".into();
    Ok(report)
}
