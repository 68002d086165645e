//! Block updates for `Z`, `H` and the view weights.
//!
//! The `*_weighted` kernels take explicit per-layer or per-view weights so the
//! plain deep semi-NMF baseline can drive the same code with its own weighting.

use ndarray::{Array1, Array2};

use super::redundancy::gamma;
use super::state::{chain, FactorState};
use super::SolverConfig;
use crate::dataset::MultiViewDataset;
use crate::error::{Error, Result};
use crate::linalg::{self, neg_part, pinv, pos_part};

/// Residuals of exactly zero are replaced by this before exponentiation.
pub const THETA_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct ZUpdate {
    pub z: Array2<f64>,
    /// A Gram matrix was numerically singular and the pseudo-inverse
    /// truncated part of its spectrum.
    pub rank_deficient: bool,
}

/// Closed-form minimiser of
/// `Σ_{i ≥ m} w_i ‖X − Φ Z_m H_{mi}‖²` over `Z_m`, where `Φ = Z_0 ⋯ Z_{m-1}`
/// and `H_{mi} = Z_{m+1} ⋯ Z_i H_i`.
pub(crate) fn update_z_weighted(
    x: &Array2<f64>,
    zs: &[Array2<f64>],
    hs: &[Array2<f64>],
    m: usize,
    layer_weights: &[f64],
) -> ZUpdate {
    let k_m = zs[m].ncols();
    let n = x.ncols();
    let mut s = Array2::<f64>::zeros((k_m, n));
    let mut a = Array2::<f64>::zeros((k_m, k_m));
    let mut any = false;
    for i in m..hs.len() {
        let w = layer_weights[i];
        if w == 0.0 {
            continue;
        }
        any = true;
        let h_mi = match chain(&zs[m + 1..=i]) {
            Some(c) => c.dot(&hs[i]),
            None => hs[i].clone(),
        };
        a.scaled_add(w, &h_mi.dot(&h_mi.t()));
        s.scaled_add(w, &h_mi);
    }
    if !any {
        return ZUpdate {
            z: zs[m].clone(),
            rank_deficient: false,
        };
    }
    let (a_inv, mut rank_deficient) = pinv(a.view());
    let z = match chain(&zs[..m]) {
        None => x.dot(&s.t()).dot(&a_inv),
        Some(phi) => {
            let (g_inv, trunc) = pinv(phi.t().dot(&phi).view());
            rank_deficient |= trunc;
            g_inv.dot(&phi.t().dot(x)).dot(&s.t()).dot(&a_inv)
        }
    };
    ZUpdate { z, rank_deficient }
}

/// One multiplicative step on `H_m` with per-view weights `view_weights`.
pub(crate) fn update_h_weighted(
    views: &[Array2<f64>],
    z: &[Vec<Array2<f64>>],
    hs: &[Array2<f64>],
    m: usize,
    view_weights: &[f64],
    lambda: f64,
    beta: f64,
) -> Array2<f64> {
    let hm = &hs[m];
    let (k_m, n) = hm.dim();
    let mut q = Array2::<f64>::zeros((k_m, n));
    let mut p = Array2::<f64>::zeros((k_m, k_m));
    for (v, x) in views.iter().enumerate() {
        let w = view_weights[v];
        if w == 0.0 {
            continue;
        }
        let zall = chain(&z[v][..=m]).expect("layer exists");
        q.scaled_add(w, &zall.t().dot(x));
        p.scaled_add(w, &zall.t().dot(&zall));
    }
    let mut num = pos_part(&q) + neg_part(&p).dot(hm);
    let mut den = neg_part(&q) + pos_part(&p).dot(hm);
    if lambda != 0.0 && hs.len() > 1 {
        let g = gamma(hs, m, beta);
        num.scaled_add(lambda, &neg_part(&g));
        den.scaled_add(lambda, &pos_part(&g));
    }
    let mut next = hm.clone();
    linalg::multiplicative_update(&mut next, &num, &den);
    next
}

/// New `Z_m^(v)` from the current state (weights `(α_i^(v))^r`, `i ≥ m`).
pub fn update_z(state: &FactorState, ds: &MultiViewDataset, cfg: &SolverConfig, m: usize, v: usize) -> ZUpdate {
    let weights: Vec<f64> = state.alpha.column(v).iter().map(|a| a.powf(cfg.r)).collect();
    update_z_weighted(ds.view(v), &state.z[v], &state.h, m, &weights)
}

/// New `H_m` after one multiplicative step.
pub fn update_h(state: &FactorState, ds: &MultiViewDataset, cfg: &SolverConfig, m: usize) -> Result<Array2<f64>> {
    let weights: Vec<f64> = state.alpha.row(m).iter().map(|a| a.powf(cfg.r)).collect();
    let next = update_h_weighted(ds.views(), &state.z, &state.h, m, &weights, cfg.lambda, cfg.beta);
    if !linalg::all_finite(next.view()) {
        return Err(Error::NonFinite(format!("H[{m}] update")));
    }
    Ok(next)
}

/// Closed-form view weights for residuals `theta`:
/// `α_v ∝ (r Θ_v)^{1/(1−r)}`, computed in log space.
pub fn alpha_from_residuals(theta: &[f64], r: f64) -> Vec<f64> {
    let v = theta.len();
    if v == 0 {
        return Vec::new();
    }
    if theta.iter().all(|&t| t == 0.0) {
        return vec![1.0 / v as f64; v];
    }
    let expo = 1.0 / (1.0 - r);
    let logs: Vec<f64> = theta
        .iter()
        .map(|&t| (r.ln() + t.max(THETA_FLOOR).ln()) * expo)
        .collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Unweighted residual `‖X^(v) − Z_0^(v) ⋯ Z_m^(v) H_m‖²` for every view.
pub fn layer_residuals(state: &FactorState, ds: &MultiViewDataset, m: usize) -> Vec<f64> {
    crate::par::map_range(ds.n_views(), |v| {
        let zall = state.basis_chain(v, m);
        linalg::residual_sq(ds.view(v).view(), zall.view(), state.h[m].view())
    })
}

/// New weights for clustering `m`.
pub fn update_alpha(state: &FactorState, ds: &MultiViewDataset, cfg: &SolverConfig, m: usize) -> Array1<f64> {
    Array1::from(alpha_from_residuals(&layer_residuals(state, ds, m), cfg.r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_residuals_give_uniform_weights() {
        for r in [0.1, 0.5, 2.0, 3.0] {
            let a = alpha_from_residuals(&[4.0, 4.0, 4.0], r);
            for x in a {
                assert!((x - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn hand_value_r2() {
        let a = alpha_from_residuals(&[1.0, 2.0], 2.0);
        assert!((a[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((a[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn single_view_and_zero_residuals() {
        assert_eq!(alpha_from_residuals(&[7.0], 0.3), vec![1.0]);
        assert_eq!(alpha_from_residuals(&[0.0, 0.0], 2.0), vec![0.5, 0.5]);
        // an exact fit takes (nearly) all the weight when r > 1
        let a = alpha_from_residuals(&[0.0, 1.0], 2.0);
        assert!(a[0] > 1.0 - 1e-9);
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn extreme_exponents_stay_finite() {
        let a = alpha_from_residuals(&[1e-5, 1e8, 3.0], 1.0001);
        assert!(a.iter().all(|x| x.is_finite() && *x >= 0.0));
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
