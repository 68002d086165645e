//! Shallow semi-NMF, `X ≈ Z H` with `H ≥ 0` and `Z` of either sign.
//!
//! Alternates an exact least-squares solve for `Z` with the multiplicative
//! rule for `H` built from the positive/negative parts of `ZᵀX` and `ZᵀZ`.
//! Both steps are non-increasing in the reconstruction error. `H` is seeded
//! from k-means on the columns of `X` (one-hot memberships plus 0.2).

use ndarray::{Array2, ArrayView2};

use crate::clustering;
use crate::error::{Error, Result};
use crate::linalg::{self, all_finite, neg_part, pinv, pos_part, residual_sq};

/// Constant added to the one-hot k-means memberships at initialisation.
pub const INIT_OFFSET: f64 = 0.2;

#[derive(Debug, Clone)]
pub struct SemiNmfResult {
    /// `d × K` basis, mixed sign.
    pub z: Array2<f64>,
    /// `K × n` representation, non-negative.
    pub h: Array2<f64>,
    /// Final `‖X − Z H‖_F²`.
    pub residual: f64,
    /// Residual after initialisation and after every iteration.
    pub history: Vec<f64>,
    pub iterations: usize,
    /// Set when the input was all zeros and zero factors were returned.
    pub degenerate: bool,
}

/// `Z = X Hᵀ (H Hᵀ)⁺`.
pub(crate) fn solve_basis(x: ArrayView2<'_, f64>, h: &Array2<f64>) -> (Array2<f64>, bool) {
    let (gram_inv, truncated) = pinv(h.dot(&h.t()).view());
    (x.dot(&h.t()).dot(&gram_inv), truncated)
}

/// One multiplicative step on `H` for `min ‖X − Z H‖²`, `H ≥ 0`.
pub(crate) fn update_representation(x: ArrayView2<'_, f64>, z: &Array2<f64>, h: &mut Array2<f64>) {
    let ztx = z.t().dot(&x);
    let ztz = z.t().dot(z);
    let num = pos_part(&ztx) + neg_part(&ztz).dot(&*h);
    let den = neg_part(&ztx) + pos_part(&ztz).dot(&*h);
    linalg::multiplicative_update(h, &num, &den);
}

/// k-means membership matrix plus a constant offset, `K × n`.
pub(crate) fn kmeans_init(x: ArrayView2<'_, f64>, k: usize, seed: u64) -> Result<Array2<f64>> {
    let run = clustering::best_of(x, k, 100, 3, seed)?;
    let mut h = Array2::from_elem((k, x.ncols()), INIT_OFFSET);
    for (i, &l) in run.labels.iter().enumerate() {
        h[[l, i]] += 1.0;
    }
    Ok(h)
}

/// Factorise `x` (`d × n`) with inner dimension `k`.
pub fn seminmf_fit(x: ArrayView2<'_, f64>, k: usize, max_iter: usize, tol: f64, seed: u64) -> Result<SemiNmfResult> {
    let (d, n) = x.dim();
    if k == 0 || k > d.min(n) {
        return Err(Error::InvalidConfig(format!(
            "inner dimension {k} outside [1, min(d={d}, n={n})]"
        )));
    }
    if !all_finite(x) {
        return Err(Error::NonFinite("semi-NMF input".into()));
    }
    if x.iter().all(|&v| v == 0.0) {
        log::warn!("semi-NMF input is all zeros; returning zero factors");
        return Ok(SemiNmfResult {
            z: Array2::zeros((d, k)),
            h: Array2::zeros((k, n)),
            residual: 0.0,
            history: vec![0.0],
            iterations: 0,
            degenerate: true,
        });
    }

    let mut h = kmeans_init(x, k, seed)?;
    let (mut z, _) = solve_basis(x, &h);
    let mut residual = residual_sq(x, z.view(), h.view());
    let mut history = vec![residual];
    let mut iterations = 0;
    for it in 1..=max_iter {
        z = solve_basis(x, &h).0;
        update_representation(x, &z, &mut h);
        let next = residual_sq(x, z.view(), h.view());
        if !next.is_finite() {
            return Err(Error::Divergence {
                iteration: it,
                message: "semi-NMF residual is not finite".into(),
            });
        }
        history.push(next);
        iterations = it;
        let change = (residual - next).abs() / residual.max(1e-300);
        residual = next;
        if change < tol {
            break;
        }
    }
    Ok(SemiNmfResult {
        z,
        h,
        residual,
        history,
        iterations,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn assert_monotone(history: &[f64]) {
        for w in history.windows(2) {
            assert!(w[1] <= w[0] + 1e-10, "residual rose: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn exact_rank_one_is_recovered() {
        let z = array![[1.0], [-2.0], [0.5]];
        let h = array![[0.3, 1.0, 2.0, 0.1, 4.0]];
        let x = z.dot(&h);
        let fit = seminmf_fit(x.view(), 1, 2000, 1e-15, 3).unwrap();
        let norm = linalg::frob_sq(x.view());
        assert!(fit.residual <= 1e-8 * norm, "{} vs {}", fit.residual, norm);
        assert!(fit.h.iter().all(|&v| v >= 0.0));
        assert_monotone(&fit.history);
    }

    #[test]
    fn zero_input_returns_zero_factors() {
        let x = Array2::<f64>::zeros((2, 2));
        let fit = seminmf_fit(x.view(), 1, 10, 1e-6, 0).unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.residual, 0.0);
        assert!(fit.h.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn full_rank_factorisation_reaches_zero_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = Array2::from_shape_simple_fn((5, 8), || rng.random::<f64>() * 2.0 - 1.0);
        let fit = seminmf_fit(x.view(), 5, 20_000, 0.0, 2).unwrap();
        let norm = linalg::frob_sq(x.view());
        assert!(fit.residual <= 1e-6 * norm, "{} vs {}", fit.residual, norm);
        assert_monotone(&fit.history);
    }

    #[test]
    fn rejects_bad_rank_and_non_finite() {
        let x = array![[1.0, 2.0], [3.0, 4.0]];
        assert!(seminmf_fit(x.view(), 0, 10, 1e-6, 0).is_err());
        assert!(seminmf_fit(x.view(), 3, 10, 1e-6, 0).is_err());
        let bad = array![[1.0, f64::NAN]];
        assert!(seminmf_fit(bad.view(), 1, 10, 1e-6, 0).is_err());
    }

    #[test]
    fn monotone_nonnegative_and_deterministic_on_random_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = Array2::from_shape_simple_fn((12, 60), || rng.random::<f64>() * 4.0 - 1.0);
        let a = seminmf_fit(x.view(), 4, 200, 0.0, 9).unwrap();
        let b = seminmf_fit(x.view(), 4, 200, 0.0, 9).unwrap();
        assert_monotone(&a.history);
        assert!(a.h.iter().all(|&v| v >= 0.0));
        assert_eq!(a.history, b.history);
        assert_eq!(a.z, b.z);
    }
}
