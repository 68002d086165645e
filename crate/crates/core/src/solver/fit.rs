use ndarray::{s, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::objective::{objective, ObjectiveBreakdown};
use super::state::FactorState;
use super::updates::{update_alpha, update_h, update_z_weighted};
use super::SolverConfig;
use crate::dataset::MultiViewDataset;
use crate::dmf::concat_views;
use crate::error::{Error, Result};
use crate::linalg::derive_seed;
use crate::par;
use crate::seminmf::seminmf_fit;

/// Which block was just updated; passed to fit observers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Z { layer: usize, view: usize },
    H { layer: usize },
    Alpha { layer: usize },
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub state: FactorState,
    /// Objective after initialisation, then after every sweep.
    pub history: Vec<ObjectiveBreakdown>,
    pub iterations: usize,
    pub converged: bool,
    /// Number of Z solves that hit a numerically singular Gram matrix.
    pub rank_deficient_solves: usize,
}

/// Layer-wise semi-NMF initialisation.
///
/// Layer 0 factorises the vertically stacked views, giving the shared `H_0`
/// and per-view row blocks of `Z_0`. Layer `l ≥ 1` factorises `H_{l-1}` and
/// copies the basis to every view. View weights start uniform.
pub fn pretrain(ds: &MultiViewDataset, cfg: &SolverConfig) -> Result<FactorState> {
    cfg.validate(ds)?;
    let n_views = ds.n_views();
    let stacked = concat_views(ds);
    let first = seminmf_fit(
        stacked.view(),
        cfg.layer_sizes[0],
        cfg.pretrain_iter,
        cfg.pretrain_tol,
        derive_seed(cfg.seed, 0),
    )?;
    let mut z: Vec<Vec<Array2<f64>>> = Vec::with_capacity(n_views);
    let mut offset = 0;
    for d in ds.dims() {
        z.push(vec![first.z.slice(s![offset..offset + d, ..]).to_owned()]);
        offset += d;
    }
    let mut h = vec![first.h];
    for l in 1..cfg.n_layers() {
        let fit = seminmf_fit(
            h[l - 1].view(),
            cfg.layer_sizes[l],
            cfg.pretrain_iter,
            cfg.pretrain_tol,
            derive_seed(cfg.seed, l as u64),
        )?;
        for zs in z.iter_mut() {
            zs.push(fit.z.clone());
        }
        h.push(fit.h);
    }
    Ok(FactorState {
        z,
        h,
        alpha: uniform_alpha(cfg.n_layers(), n_views),
    })
}

fn uniform_alpha(m_layers: usize, n_views: usize) -> Array2<f64> {
    Array2::from_elem((m_layers, n_views), 1.0 / n_views as f64)
}

/// Random start: Gaussian bases scaled by `1/sqrt(rows)`, uniform `[0, 1)`
/// representations.
pub fn random_init(ds: &MultiViewDataset, cfg: &SolverConfig) -> Result<FactorState> {
    cfg.validate(ds)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = ds.n_samples();
    let z = ds
        .dims()
        .into_iter()
        .map(|d| {
            let mut rows = d;
            cfg.layer_sizes
                .iter()
                .map(|&k| {
                    let scale = 1.0 / (rows as f64).sqrt();
                    let zl = Array2::from_shape_simple_fn((rows, k), || scale * rng.sample::<f64, _>(StandardNormal));
                    rows = k;
                    zl
                })
                .collect()
        })
        .collect();
    let h = cfg
        .layer_sizes
        .iter()
        .map(|&k| Array2::from_shape_simple_fn((k, n), || rng.random::<f64>()))
        .collect();
    Ok(FactorState {
        z,
        h,
        alpha: uniform_alpha(cfg.n_layers(), ds.n_views()),
    })
}

/// Alternating optimisation; see [`fit_observed`].
pub fn fit(ds: &MultiViewDataset, cfg: &SolverConfig) -> Result<FitResult> {
    fit_observed(ds, cfg, |_, _| {})
}

/// Initialise (pretrain or random), then sweep layers in ascending order:
/// every view's `Z_m` (in parallel), then `H_m`, then the weights of layer
/// `m`. Stops when the relative objective change drops below `tol` or after
/// `max_iter` sweeps. `observer` sees the state after every block update.
pub fn fit_observed<F>(ds: &MultiViewDataset, cfg: &SolverConfig, mut observer: F) -> Result<FitResult>
where
    F: FnMut(Step, &FactorState),
{
    let mut state = if cfg.pretrain {
        pretrain(ds, cfg)?
    } else {
        random_init(ds, cfg)?
    };
    if cfg.normalize_h {
        for m in 0..state.n_layers() {
            state.normalize_layer(m);
        }
    }
    let initial = objective(&state, ds, cfg).map_err(|e| Error::Divergence {
        iteration: 0,
        message: e.to_string(),
    })?;
    let mut history = vec![initial];
    let mut rank_deficient_solves = 0;
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=cfg.max_iter {
        for m in 0..state.n_layers() {
            let updates = par::map_range(ds.n_views(), |v| {
                let weights: Vec<f64> = state.alpha.column(v).iter().map(|a| a.powf(cfg.r)).collect();
                update_z_weighted(ds.view(v), &state.z[v], &state.h, m, &weights)
            });
            for (v, up) in updates.into_iter().enumerate() {
                if !crate::linalg::all_finite(up.z.view()) {
                    return Err(Error::Divergence {
                        iteration: it,
                        message: format!("non-finite Z[{v}][{m}]"),
                    });
                }
                rank_deficient_solves += usize::from(up.rank_deficient);
                state.z[v][m] = up.z;
                observer(Step::Z { layer: m, view: v }, &state);
            }

            state.h[m] = update_h(&state, ds, cfg, m).map_err(|e| Error::Divergence {
                iteration: it,
                message: e.to_string(),
            })?;
            if cfg.normalize_h {
                state.normalize_layer(m);
            }
            observer(Step::H { layer: m }, &state);

            let alpha = update_alpha(&state, ds, cfg, m);
            state.alpha.row_mut(m).assign(&alpha);
            observer(Step::Alpha { layer: m }, &state);
        }

        let current = objective(&state, ds, cfg).map_err(|e| Error::Divergence {
            iteration: it,
            message: e.to_string(),
        })?;
        let prev = history.last().expect("initial objective").total;
        let change = (current.total - prev).abs() / prev.abs().max(1e-12);
        history.push(current);
        iterations = it;
        if change < cfg.tol {
            converged = true;
            break;
        }
    }
    if rank_deficient_solves > 0 {
        log::debug!("{rank_deficient_solves} Z solves used a truncated pseudo-inverse");
    }
    Ok(FitResult {
        state,
        history,
        iterations,
        converged,
        rank_deficient_solves,
    })
}
