use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dmclusts::harness::{
    cmd_eval, cmd_run, cmd_sweep, cmd_synth, ExperimentConfig, Method, SweepParam, SweepSection, SynthSpec,
    EXIT_ALL_FAILED, EXIT_CONFIG, EXIT_OK,
};
use dmclusts::Error;

#[derive(Parser)]
#[command(
    name = "dmclusts",
    version,
    about = "Multi-view multiple clusterings via deep semi-NMF"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a planted multi-structure dataset.
    Synth(SynthArgs),
    /// Fit repeated seeded runs and aggregate their metrics.
    Run(ExperimentArgs),
    /// Repeat `run` for every value of one hyperparameter.
    Sweep(SweepArgs),
    /// Score existing label files against a dataset.
    Eval(EvalArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    structures: usize,
    #[arg(long, default_value_t = 2)]
    views_per: usize,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 20)]
    dim: usize,
    #[arg(long, default_value_t = 20.0)]
    separation: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Append a standard-Gaussian view with this many features.
    #[arg(long)]
    noise_view: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML file; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Path to a dataset manifest.json.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Standardise every feature before fitting.
    #[arg(long)]
    zscore: bool,
    /// dmclusts or dmf.
    #[arg(long)]
    method: Option<String>,
    /// Number of clusterings M (one per layer).
    #[arg(long)]
    clusterings: Option<usize>,
    /// Clusters k in every clustering.
    #[arg(long)]
    clusters: Option<usize>,
    /// Layer sizes, outermost first.
    #[arg(long, value_delimiter = ',')]
    layers: Option<Vec<usize>>,
    /// Weight of the redundancy penalty.
    #[arg(long)]
    lambda: Option<f64>,
    /// Balance between shared and shared-apart pairs, in [0, 1].
    #[arg(long)]
    beta: Option<f64>,
    /// View-weight exponent; must differ from 1.
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Layer-wise semi-NMF initialisation instead of random.
    #[arg(long)]
    pretrain: Option<bool>,
    /// Rescale each H to squared norm n after its update.
    #[arg(long)]
    normalize_h: Option<bool>,
    /// Unit-normalise H columns before k-means.
    #[arg(long)]
    normalize_columns: Option<bool>,
    /// Seeded runs; run i uses seed + i.
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// lambda, r or beta.
    #[arg(long)]
    sweep: Option<String>,
    /// Comma-separated values; defaults to a grid per parameter.
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// One labels file per clustering.
    #[arg(long, value_delimiter = ',', required = true)]
    labels: Vec<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ExperimentArgs {
    fn resolve(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(p) = &self.dataset {
            cfg.dataset.path = Some(p.clone());
            cfg.dataset.synthetic = None;
        }
        if self.zscore {
            cfg.dataset.zscore = true;
        }
        let s = &mut cfg.solver;
        if let Some(m) = &self.method {
            s.method = m.parse::<Method>()?;
        }
        if let Some(m) = self.clusterings {
            s.clusterings = Some(m);
        }
        if let Some(k) = self.clusters {
            s.clusters = k;
        }
        if let Some(layers) = &self.layers {
            s.layers = Some(layers.clone());
        }
        if let Some(v) = self.lambda {
            s.lambda = v;
        }
        if let Some(v) = self.beta {
            s.beta = v;
        }
        if let Some(v) = self.r {
            s.r = v;
        }
        if let Some(v) = self.max_iter {
            s.max_iter = v;
        }
        if let Some(v) = self.tol {
            s.tol = v;
        }
        if let Some(v) = self.pretrain {
            s.pretrain = v;
        }
        if let Some(v) = self.normalize_h {
            s.normalize_h = v;
        }
        if let Some(v) = self.normalize_columns {
            s.normalize_columns = v;
        }
        if let Some(v) = self.repeats {
            cfg.run.repeats = v;
        }
        if let Some(v) = self.seed {
            cfg.run.seed = v;
        }
        if let Some(v) = &self.out {
            cfg.run.out = v.clone();
        }
        Ok(cfg)
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Divergence { .. } => EXIT_ALL_FAILED as u8,
        _ => EXIT_CONFIG as u8,
    }
}

fn fail(err: Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(exit_code_for(&err))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Synth(a) => {
            let spec = SynthSpec {
                n: a.n,
                structures: a.structures,
                views_per: a.views_per,
                k: a.k,
                dim: a.dim,
                separation: a.separation,
                sigma: a.sigma,
                noise_view: a.noise_view,
                seed: a.seed,
            };
            match cmd_synth(&spec, &a.out) {
                Ok(path) => {
                    println!("{}", path.display());
                    ExitCode::from(EXIT_OK as u8)
                }
                Err(e) => fail(e),
            }
        }
        Command::Run(a) => {
            let cfg = match a.resolve() {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            match cmd_run(&cfg) {
                Ok(agg) => {
                    println!(
                        "{}: {}/{} runs completed, results in {}",
                        agg.method,
                        agg.completed,
                        agg.repeats,
                        cfg.run.out.display()
                    );
                    if agg.completed == 0 {
                        eprintln!("error: every run failed");
                        ExitCode::from(EXIT_ALL_FAILED as u8)
                    } else {
                        ExitCode::from(EXIT_OK as u8)
                    }
                }
                Err(e) => fail(e),
            }
        }
        Command::Sweep(a) => {
            let mut cfg = match a.experiment.resolve() {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            if let Some(name) = &a.sweep {
                let param = match name.parse::<SweepParam>() {
                    Ok(p) => p,
                    Err(e) => return fail(e),
                };
                cfg.sweep = Some(SweepSection {
                    param,
                    values: a.values.clone(),
                });
            } else if let (Some(values), Some(sweep)) = (&a.values, cfg.sweep.as_mut()) {
                sweep.values = Some(values.clone());
            }
            match cmd_sweep(&cfg) {
                Ok(rows) => {
                    let completed: usize = rows.iter().map(|r| r.completed).sum();
                    println!("{} sweep values written to {}", rows.len(), cfg.run.out.display());
                    if completed == 0 {
                        eprintln!("error: every run failed");
                        ExitCode::from(EXIT_ALL_FAILED as u8)
                    } else {
                        ExitCode::from(EXIT_OK as u8)
                    }
                }
                Err(e) => fail(e),
            }
        }
        Command::Eval(a) => match cmd_eval(&a.dataset, &a.labels) {
            Ok(report) => {
                let mut text = match serde_json::to_string_pretty(&report) {
                    Ok(t) => t,
                    Err(e) => return fail(Error::Serialization(e.to_string())),
                };
                text.push('\n');
                match &a.out {
                    Some(path) => {
                        if let Err(e) = std::fs::write(path, text) {
                            return fail(Error::io(path, e));
                        }
                    }
                    None => print!("{text}"),
                }
                ExitCode::from(EXIT_OK as u8)
            }
            Err(e) => fail(e),
        },
    }
}
