use serde::{Deserialize, Serialize};

use super::redundancy::redundancy_balanced;
use super::state::FactorState;
use super::SolverConfig;
use crate::dataset::MultiViewDataset;
use crate::error::{Error, Result};
use crate::linalg;
use crate::par;

/// Objective value split into its parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    pub total: f64,
    /// `(α_m^(v))^r ‖X^(v) − Z_0^(v) ⋯ Z_m^(v) H_m‖²`, indexed `[m][v]`.
    pub reconstruction: Vec<Vec<f64>>,
    /// `λ Σ_{m < m'} R̃(H_m, H_{m'})`.
    pub redundancy: f64,
}

impl ObjectiveBreakdown {
    pub fn reconstruction_total(&self) -> f64 {
        self.reconstruction.iter().flatten().sum()
    }
}

pub fn objective(state: &FactorState, ds: &MultiViewDataset, cfg: &SolverConfig) -> Result<ObjectiveBreakdown> {
    let m_layers = state.n_layers();
    let n_views = ds.n_views();
    let prefixes: Vec<Vec<_>> = par::map_range(n_views, |v| state.basis_prefixes(v));
    let flat = par::map_range(m_layers * n_views, |idx| {
        let (m, v) = (idx / n_views, idx % n_views);
        let theta = linalg::residual_sq(ds.view(v).view(), prefixes[v][m].view(), state.h[m].view());
        state.alpha[[m, v]].powf(cfg.r) * theta
    });
    let reconstruction: Vec<Vec<f64>> = flat.chunks(n_views).map(|c| c.to_vec()).collect();

    let mut redundancy = 0.0;
    if cfg.lambda != 0.0 {
        for a in 0..m_layers {
            for b in (a + 1)..m_layers {
                redundancy += redundancy_balanced(state.h[a].view(), state.h[b].view(), cfg.beta)?;
            }
        }
        redundancy *= cfg.lambda;
    }
    let total = flat.iter().sum::<f64>() + redundancy;
    if !total.is_finite() {
        return Err(Error::NonFinite("objective".into()));
    }
    Ok(ObjectiveBreakdown {
        total,
        reconstruction,
        redundancy,
    })
}
