use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dmclusts,
    Dmf,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Dmclusts => "dmclusts",
            Method::Dmf => "dmf",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dmclusts" => Ok(Method::Dmclusts),
            "dmf" => Ok(Method::Dmf),
            other => Err(Error::InvalidConfig(format!(
                "unknown method {other:?} (expected dmclusts or dmf)"
            ))),
        }
    }
}

/// Hyperparameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Lambda,
    R,
    Beta,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::Lambda => "lambda",
            SweepParam::R => "r",
            SweepParam::Beta => "beta",
        }
    }

    /// The grid searched when no values are given: `λ ∈ {1e-4, …, 1e4}`,
    /// `r ∈ {5e-4, …, 5}`, `β ∈ {0, 0.1, …, 1}`.
    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepParam::Lambda => (-4..=4).map(|e| 10f64.powi(e)).collect(),
            SweepParam::R => (-4..=0).map(|e| 5.0 * 10f64.powi(e)).collect(),
            SweepParam::Beta => (0..=10).map(|i| i as f64 / 10.0).collect(),
        }
    }

    pub fn apply(self, solver: &mut SolverSection, value: f64) {
        match self {
            SweepParam::Lambda => solver.lambda = value,
            SweepParam::R => solver.r = value,
            SweepParam::Beta => solver.beta = value,
        }
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lambda" => Ok(SweepParam::Lambda),
            "r" => Ok(SweepParam::R),
            "beta" => Ok(SweepParam::Beta),
            other => Err(Error::InvalidConfig(format!(
                "cannot sweep {other:?}; choose lambda, r or beta"
            ))),
        }
    }
}

/// Parameters for a generated dataset, shared by `synth` and the
/// `[dataset.synthetic]` config table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub n: usize,
    /// Number of planted labelings.
    pub structures: usize,
    /// Views per labeling; labeling `j` owns views `j*views_per .. (j+1)*views_per`.
    pub views_per: usize,
    pub k: usize,
    pub dim: usize,
    pub separation: f64,
    pub sigma: f64,
    /// Dimension of an extra standard-Gaussian view, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_view: Option<usize>,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n: 500,
            structures: 2,
            views_per: 2,
            k: 3,
            dim: 20,
            separation: 20.0,
            sigma: 1.0,
            noise_view: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    /// Path to a `manifest.json`, relative to the working directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SynthSpec>,
    /// Z-score every feature before fitting.
    #[serde(default)]
    pub zscore: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub method: Method,
    /// Number of clusterings `M`; defaults to the number of layers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clusterings: Option<usize>,
    pub clusters: usize,
    /// `K_1, …, K_M`; defaults to `clusters` for every layer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<Vec<usize>>,
    pub lambda: f64,
    pub beta: f64,
    pub r: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub pretrain: bool,
    pub normalize_h: bool,
    /// L2-normalise representation columns before k-means.
    pub normalize_columns: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        let base = SolverConfig::new(vec![3, 3], 3);
        Self {
            method: Method::Dmclusts,
            clusterings: None,
            clusters: 3,
            layers: None,
            lambda: base.lambda,
            beta: base.beta,
            r: base.r,
            max_iter: base.max_iter,
            tol: base.tol,
            pretrain: base.pretrain,
            normalize_h: base.normalize_h,
            normalize_columns: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub repeats: usize,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            repeats: 10,
            seed: 0,
            out: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub param: SweepParam,
    /// Defaults to [`SweepParam::default_values`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

/// Everything `run` and `sweep` need. Mirrors the CLI flags section by
/// section; flags override values read from a file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSection,
    pub solver: SolverSection,
    pub run: RunSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::InvalidConfig(m) => Error::InvalidConfig(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    /// Layer sizes after applying the defaults and checking them against
    /// `clusterings`.
    pub fn layer_sizes(&self) -> Result<Vec<usize>> {
        let s = &self.solver;
        match (&s.layers, s.clusterings) {
            (Some(layers), Some(m)) if layers.len() != m => Err(Error::InvalidConfig(format!(
                "{} layer sizes given for {m} clusterings",
                layers.len()
            ))),
            (Some(layers), _) => Ok(layers.clone()),
            (None, Some(m)) => Ok(vec![s.clusters; m]),
            (None, None) => Ok(vec![s.clusters; 2]),
        }
    }

    /// Solver settings for the run with the given seed.
    pub fn solver_config(&self, seed: u64) -> Result<SolverConfig> {
        let s = &self.solver;
        let mut cfg = SolverConfig::new(self.layer_sizes()?, s.clusters);
        cfg.lambda = s.lambda;
        cfg.beta = s.beta;
        cfg.r = s.r;
        cfg.max_iter = s.max_iter;
        cfg.tol = s.tol;
        cfg.seed = seed;
        cfg.pretrain = s.pretrain;
        cfg.normalize_h = s.normalize_h;
        cfg.validate_params()?;
        Ok(cfg)
    }

    /// Checks that do not need the data.
    pub fn validate(&self) -> Result<()> {
        if self.run.repeats == 0 {
            return Err(Error::InvalidConfig("repeats must be at least 1".into()));
        }
        match (&self.dataset.path, &self.dataset.synthetic) {
            (None, None) => {
                return Err(Error::InvalidConfig(
                    "no dataset: give --dataset or a [dataset.synthetic] table".into(),
                ))
            }
            (Some(_), Some(_)) => {
                return Err(Error::InvalidConfig(
                    "dataset path and synthetic spec are mutually exclusive".into(),
                ))
            }
            _ => {}
        }
        self.solver_config(self.run.seed)?;
        if let Some(sweep) = &self.sweep {
            let values = self.sweep_values().expect("sweep present");
            if values.is_empty() {
                return Err(Error::InvalidConfig("sweep has no values".into()));
            }
            for v in values {
                let mut point = self.clone();
                sweep.param.apply(&mut point.solver, v);
                point
                    .solver_config(point.run.seed)
                    .map_err(|e| Error::InvalidConfig(format!("sweep value {v} for {}: {e}", sweep.param.as_str())))?;
            }
        }
        Ok(())
    }

    pub fn sweep_values(&self) -> Option<Vec<f64>> {
        self.sweep
            .as_ref()
            .map(|s| s.values.clone().unwrap_or_else(|| s.param.default_values()))
    }
}
