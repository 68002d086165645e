use std::fs;
use std::path::Path;
use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Method};
use crate::clustering::{extract_clusterings, Clustering, KMeansOptions};
use crate::dataset::{write_labels, MultiViewDataset, PlantedTruth};
use crate::dmf::dmf_fit;
use crate::error::{Error, Result};
use crate::metrics::{evaluate, EvaluationReport};
use crate::par;
use crate::solver::{self, SolverConfig};

/// One row of `objective.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveRow {
    pub iteration: usize,
    pub total: f64,
    pub reconstruction: f64,
    pub redundancy: f64,
}

/// Everything produced by a single seeded run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub seed: u64,
    pub report: EvaluationReport,
    pub clusterings: Vec<Clustering>,
    pub objective: Vec<ObjectiveRow>,
    /// `M × V` view weights; DMClusts only.
    pub alpha: Option<Array2<f64>>,
    pub seconds: f64,
}

fn kmeans_options(cfg: &ExperimentConfig) -> KMeansOptions {
    KMeansOptions {
        normalize_columns: cfg.solver.normalize_columns,
        ..KMeansOptions::default()
    }
}

/// Fit `method` with `solver_cfg`, cluster every layer and evaluate.
pub fn run_once(
    ds: &MultiViewDataset,
    truth: Option<&PlantedTruth>,
    method: Method,
    solver_cfg: &SolverConfig,
    kmeans: &KMeansOptions,
) -> Result<RunOutcome> {
    let start = Instant::now();
    let seed = solver_cfg.seed;
    let (hs, objective, alpha, iterations, converged) = match method {
        Method::Dmclusts => {
            let fit = solver::fit(ds, solver_cfg)?;
            let rows = fit
                .history
                .iter()
                .enumerate()
                .map(|(iteration, b)| ObjectiveRow {
                    iteration,
                    total: b.total,
                    reconstruction: b.reconstruction_total(),
                    redundancy: b.redundancy,
                })
                .collect();
            (fit.state.h, rows, Some(fit.state.alpha), fit.iterations, fit.converged)
        }
        Method::Dmf => {
            let fit = dmf_fit(ds, solver_cfg)?;
            let rows = fit
                .history
                .iter()
                .enumerate()
                .map(|(iteration, &r)| ObjectiveRow {
                    iteration,
                    total: r,
                    reconstruction: r,
                    redundancy: 0.0,
                })
                .collect();
            (fit.h, rows, None, fit.iterations, fit.converged)
        }
    };
    let clusterings = extract_clusterings(&hs, solver_cfg.k, kmeans, seed)?;
    let mut report = evaluate(ds, &clusterings, truth)?;
    report.meta.method = method.as_str().to_string();
    report.meta.seed = seed;
    report.meta.iterations = iterations;
    report.meta.converged = converged;
    report.meta.config = serde_json::to_value(solver_cfg).map_err(|e| Error::Serialization(e.to_string()))?;
    Ok(RunOutcome {
        seed,
        report,
        clusterings,
        objective,
        alpha,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Some(Stat { mean, std: var.sqrt() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub run: usize,
    pub seed: u64,
    pub error: String,
}

/// Summary over the completed runs of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub method: String,
    pub repeats: usize,
    pub completed: usize,
    pub failures: Vec<RunFailure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sc: Option<Stat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub di: Option<Stat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nmi: Option<Stat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jc: Option<Stat>,
    /// Mean matched ground-truth NMI per run, when truth is known.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth_nmi: Option<Stat>,
}

impl Aggregate {
    pub fn from_runs(method: Method, runs: &[(usize, u64, Result<RunOutcome>)]) -> Self {
        let ok: Vec<&RunOutcome> = runs.iter().filter_map(|(_, _, r)| r.as_ref().ok()).collect();
        let failures = runs
            .iter()
            .filter_map(|(i, seed, r)| {
                r.as_ref().err().map(|e| RunFailure {
                    run: *i,
                    seed: *seed,
                    error: e.to_string(),
                })
            })
            .collect();
        let collect = |f: &dyn Fn(&EvaluationReport) -> Option<f64>| -> Option<Stat> {
            let vals: Vec<f64> = ok.iter().filter_map(|o| f(&o.report)).collect();
            Stat::of(&vals)
        };
        Aggregate {
            method: method.as_str().to_string(),
            repeats: runs.len(),
            completed: ok.len(),
            failures,
            sc: collect(&|r| Some(r.quality.mean.sc)),
            di: collect(&|r| Some(r.quality.mean.di)),
            nmi: collect(&|r| r.diversity.mean.as_ref().map(|m| m.nmi)),
            jc: collect(&|r| r.diversity.mean.as_ref().map(|m| m.jc)),
            truth_nmi: collect(&|r| {
                r.truth_match
                    .as_ref()
                    .filter(|t| !t.is_empty())
                    .map(|t| t.iter().map(|m| m.nmi).sum::<f64>() / t.len() as f64)
            }),
        }
    }
}

/// Run `repeats` seeds (`seed + i`) concurrently. Results come back in run
/// order; a failed run does not stop the others.
pub fn run_repeats(
    ds: &MultiViewDataset,
    truth: Option<&PlantedTruth>,
    cfg: &ExperimentConfig,
) -> Result<Vec<(usize, u64, Result<RunOutcome>)>> {
    let base = cfg.solver_config(cfg.run.seed)?;
    base.validate(ds)?;
    let kmeans = kmeans_options(cfg);
    let method = cfg.solver.method;
    Ok(par::map_range(cfg.run.repeats, |i| {
        let seed = cfg.run.seed.wrapping_add(i as u64);
        let mut solver_cfg = base.clone();
        solver_cfg.seed = seed;
        (i, seed, run_once(ds, truth, method, &solver_cfg, &kmeans))
    }))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Serialization(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_objective_csv(path: &Path, rows: &[ObjectiveRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| Error::io(path, e.into()))?;
    for row in rows {
        w.serialize(row).map_err(|e| Error::io(path, e.into()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_alpha_csv(path: &Path, alpha: &Array2<f64>, names: &[String]) -> Result<()> {
    let mut out = String::from("clustering");
    for name in names {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (m, row) in alpha.rows().into_iter().enumerate() {
        out.push_str(&m.to_string());
        for a in row {
            out.push(',');
            out.push_str(&a.to_string());
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// `report.json`, `objective.csv`, `alpha.csv` (DMClusts) and one
/// `labels_{m}.txt` per clustering.
pub fn write_run(dir: &Path, outcome: &RunOutcome, view_names: &[String]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_json(&dir.join("report.json"), &outcome.report)?;
    write_objective_csv(&dir.join("objective.csv"), &outcome.objective)?;
    if let Some(alpha) = &outcome.alpha {
        write_alpha_csv(&dir.join("alpha.csv"), alpha, view_names)?;
    }
    for (m, c) in outcome.clusterings.iter().enumerate() {
        write_labels(&dir.join(format!("labels_{m}.txt")), &c.labels)?;
    }
    Ok(())
}
