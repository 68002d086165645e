//! Plain deep semi-NMF on the concatenated views, the single-view baseline.
//!
//! Fine-tuning reuses the solver's block updates with one view, no
//! redundancy penalty, and layer weights that keep only the deepest
//! reconstruction for the `Z` solves. Each intermediate `H_l` is refreshed by
//! the multiplicative rule against its own layer's reconstruction so it can be
//! clustered.

use ndarray::{concatenate, Array2, ArrayView2, Axis};

use crate::dataset::MultiViewDataset;
use crate::error::{Error, Result};
use crate::linalg::{self, residual_sq};
use crate::seminmf::seminmf_fit;
use crate::solver::{self, update_h_weighted, update_z_weighted, SolverConfig};

/// Stack all views vertically; column `j` is still sample `j`.
pub fn concat_views(ds: &MultiViewDataset) -> Array2<f64> {
    let views: Vec<ArrayView2<'_, f64>> = ds.views().iter().map(|x| x.view()).collect();
    concatenate(Axis(0), &views).expect("views share the sample axis")
}

#[derive(Debug, Clone)]
pub struct DmfState {
    /// `Z_1 … Z_M` on the concatenated `(Σ d_v) × n` matrix.
    pub z: Vec<Array2<f64>>,
    /// `H_1 … H_M`, non-negative.
    pub h: Vec<Array2<f64>>,
    /// Deepest-layer reconstruction error after initialisation and every sweep.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn deepest_residual(x: &Array2<f64>, z: &[Array2<f64>], h: &[Array2<f64>]) -> f64 {
    let mut basis = z[0].clone();
    for zl in &z[1..] {
        basis = basis.dot(zl);
    }
    residual_sq(x.view(), basis.view(), h[h.len() - 1].view())
}

pub fn dmf_fit(ds: &MultiViewDataset, cfg: &SolverConfig) -> Result<DmfState> {
    cfg.validate_params()?;
    let x = concat_views(ds);
    let single = MultiViewDataset::from_views(vec![x.clone()])?;
    cfg.validate(&single)?;

    if cfg.n_layers() == 1 {
        let fit = seminmf_fit(x.view(), cfg.layer_sizes[0], cfg.max_iter, cfg.tol, cfg.seed)?;
        return Ok(DmfState {
            z: vec![fit.z],
            h: vec![fit.h],
            history: fit.history,
            iterations: fit.iterations,
            converged: fit.iterations < cfg.max_iter,
        });
    }

    let init = if cfg.pretrain {
        solver::pretrain(&single, cfg)?
    } else {
        solver::random_init(&single, cfg)?
    };
    let mut z: Vec<Vec<Array2<f64>>> = init.z;
    let mut h = init.h;
    let m_layers = h.len();
    let mut deepest_only = vec![0.0; m_layers];
    deepest_only[m_layers - 1] = 1.0;
    let views = [x];

    let mut history = vec![deepest_residual(&views[0], &z[0], &h)];
    let mut iterations = 0;
    let mut converged = false;
    for it in 1..=cfg.max_iter {
        for m in 0..m_layers {
            z[0][m] = update_z_weighted(&views[0], &z[0], &h, m, &deepest_only).z;
            h[m] = update_h_weighted(&views, &z, &h, m, &[1.0], 0.0, cfg.beta);
            if !linalg::all_finite(h[m].view()) || !linalg::all_finite(z[0][m].view()) {
                return Err(Error::Divergence {
                    iteration: it,
                    message: format!("non-finite factor at layer {m}"),
                });
            }
        }
        let current = deepest_residual(&views[0], &z[0], &h);
        let prev = *history.last().expect("initial residual");
        history.push(current);
        iterations = it;
        if (prev - current).abs() / prev.max(1e-12) < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(DmfState {
        z: z.swap_remove(0),
        h,
        history,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn concat_stacks_in_view_order() {
        let a = array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]];
        let b = Array2::from_shape_fn((4, 3), |(i, j)| (10 * i + j) as f64);
        let ds = MultiViewDataset::from_views(vec![a.clone(), b.clone()]).unwrap();
        let x = concat_views(&ds);
        assert_eq!(x.dim(), (6, 3));
        let col0: Vec<f64> = x.column(0).to_vec();
        let mut want = a.column(0).to_vec();
        want.extend(b.column(0).iter());
        assert_eq!(col0, want);
    }

    #[test]
    fn single_view_is_unchanged() {
        let a = array![[1.0, -2.0], [0.5, 3.0]];
        let ds = MultiViewDataset::from_views(vec![a.clone()]).unwrap();
        assert_eq!(concat_views(&ds), a);
    }
}
