use serde::{Deserialize, Serialize};

use crate::dataset::MultiViewDataset;
use crate::error::{Error, Result};

/// Hyperparameters and loop controls for the multi-view deep factorisation.
///
/// One layer per requested clustering: `layer_sizes[m]` is `K_{m+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub layer_sizes: Vec<usize>,
    /// Clusters per clustering.
    pub k: usize,
    /// Weight of the redundancy penalty.
    pub lambda: f64,
    /// Balance between same-cluster and different-cluster redundancy, in `[0, 1]`.
    pub beta: f64,
    /// View-weight exponent; `r > 0`, `r != 1`.
    pub r: f64,
    pub max_iter: usize,
    /// Relative objective change that stops the outer loop.
    pub tol: f64,
    pub seed: u64,
    /// Layer-wise semi-NMF initialisation; random initialisation otherwise.
    pub pretrain: bool,
    pub pretrain_iter: usize,
    pub pretrain_tol: f64,
    /// Hold every `‖H_m‖_F²` at `n` by rescaling against the bases. Without
    /// it the penalty is unbounded below for `β < 1`.
    pub normalize_h: bool,
}

impl SolverConfig {
    pub fn new(layer_sizes: Vec<usize>, k: usize) -> Self {
        Self {
            layer_sizes,
            k,
            lambda: 0.01,
            beta: 0.4,
            r: 0.5,
            max_iter: 100,
            tol: 1e-5,
            seed: 0,
            pretrain: true,
            pretrain_iter: 200,
            pretrain_tol: 1e-6,
            normalize_h: true,
        }
    }

    /// Number of layers, which is also the number of clusterings.
    pub fn n_layers(&self) -> usize {
        self.layer_sizes.len()
    }

    /// Hyperparameter checks that do not need the data.
    pub fn validate_params(&self) -> Result<()> {
        if self.layer_sizes.is_empty() {
            return Err(Error::InvalidConfig("need at least one layer".into()));
        }
        if self.k < 2 {
            return Err(Error::InvalidConfig(format!("k = {} < 2", self.k)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!("lambda = {} must be >= 0", self.lambda)));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::InvalidConfig(format!("beta = {} outside [0, 1]", self.beta)));
        }
        if !(self.r > 0.0 && self.r.is_finite()) || self.r == 1.0 {
            return Err(Error::InvalidConfig(format!(
                "r = {} must be positive and different from 1",
                self.r
            )));
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return Err(Error::InvalidConfig(format!("tol = {} must be >= 0", self.tol)));
        }
        let mut prev = usize::MAX;
        for (m, &size) in self.layer_sizes.iter().enumerate() {
            if size > prev {
                return Err(Error::InvalidConfig(format!(
                    "layer sizes must be non-increasing, got {:?}",
                    self.layer_sizes
                )));
            }
            if size < self.k {
                return Err(Error::InvalidConfig(format!(
                    "layer {} has size {size} < k = {}",
                    m + 1,
                    self.k
                )));
            }
            prev = size;
        }
        Ok(())
    }

    /// Full check against a dataset: `k ≤ K_M ≤ … ≤ K_1 ≤ min_v d_v`.
    pub fn validate(&self, ds: &MultiViewDataset) -> Result<()> {
        self.validate_params()?;
        let min_d = ds.min_dim();
        if self.layer_sizes[0] > min_d {
            return Err(Error::InvalidConfig(format!(
                "K_1 = {} exceeds the smallest view dimension {min_d}",
                self.layer_sizes[0]
            )));
        }
        if self.k > ds.n_samples() {
            return Err(Error::InvalidConfig(format!(
                "k = {} exceeds n = {}",
                self.k,
                ds.n_samples()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SolverConfig::new(vec![20, 10], 3).validate_params().unwrap();
    }

    #[test]
    fn rejects_out_of_domain_parameters() {
        let base = SolverConfig::new(vec![6, 4], 3);
        let cases: Vec<Box<dyn Fn(&mut SolverConfig)>> = vec![
            Box::new(|c| c.r = 1.0),
            Box::new(|c| c.r = 0.0),
            Box::new(|c| c.beta = 1.5),
            Box::new(|c| c.lambda = -1.0),
            Box::new(|c| c.layer_sizes = vec![4, 6]),
            Box::new(|c| c.layer_sizes = vec![6, 2]),
            Box::new(|c| c.layer_sizes.clear()),
            Box::new(|c| c.k = 1),
        ];
        for mutate in cases {
            let mut cfg = base.clone();
            mutate(&mut cfg);
            assert!(cfg.validate_params().is_err(), "{cfg:?}");
        }
    }
}
