//! Co-association overlap between layer representations.
//!
//! `HᵀH` softly encodes which samples share a cluster. Every trace below is
//! evaluated through `K × K` or `K`-vector intermediates, never an `n × n`
//! matrix: `tr(AᵀA BᵀB) = ‖A Bᵀ‖²` and `1ᵀ AᵀA 1 = ‖A 1‖²`.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg::{frob_sq, row_sums};

fn check_pair(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Result<()> {
    if a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "representations cover {} and {} samples",
            a.ncols(),
            b.ncols()
        )));
    }
    Ok(())
}

/// `tr(AᵀA BᵀB)`: soft count of sample pairs grouped together in both.
pub fn redundancy_overlap(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Result<f64> {
    check_pair(a, b)?;
    Ok(frob_sq(a.dot(&b.t()).view()))
}

/// `β tr(AᵀA BᵀB) + (1 − β) tr((1 − AᵀA)(1 − BᵀB))`, with `1` the all-ones
/// `n × n` matrix. The second trace expands to
/// `n² − ‖A1‖² − ‖B1‖² + tr(AᵀA BᵀB)`.
pub fn redundancy_balanced(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>, beta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidConfig(format!("beta = {beta} outside [0, 1]")));
    }
    let overlap = redundancy_overlap(a, b)?;
    if beta == 1.0 {
        return Ok(overlap);
    }
    let n = a.ncols() as f64;
    let sa = row_sums(a);
    let sb = row_sums(b);
    let apart = n * n - sa.dot(&sa) - sb.dot(&sb) + overlap;
    Ok(beta * overlap + (1.0 - beta) * apart)
}

/// Total penalty over unordered layer pairs `m < m'` (unweighted by λ).
pub fn redundancy_total(hs: &[Array2<f64>], beta: f64) -> Result<f64> {
    let mut total = 0.0;
    for a in 0..hs.len() {
        for b in (a + 1)..hs.len() {
            total += redundancy_balanced(hs[a].view(), hs[b].view(), beta)?;
        }
    }
    Ok(total)
}

/// `Γ_m = Σ_{m'≠m} [H_m H_{m'}ᵀ H_{m'} − (1 − β) H_m 1]`.
pub(crate) fn gamma(hs: &[Array2<f64>], m: usize, beta: f64) -> Array2<f64> {
    let hm = &hs[m];
    let mut out = Array2::<f64>::zeros(hm.dim());
    let others = hs.len().saturating_sub(1);
    if others == 0 {
        return out;
    }
    for (mp, other) in hs.iter().enumerate() {
        if mp == m {
            continue;
        }
        out += &hm.dot(&other.t()).dot(other);
    }
    let shift = (1.0 - beta) * others as f64;
    if shift != 0.0 {
        let sums = row_sums(hm.view());
        for (mut row, s) in out.rows_mut().into_iter().zip(sums.iter()) {
            row -= shift * s;
        }
    }
    out
}

/// Gradient of `Σ_{m'≠m} R̃(H_m, H_{m'})` with respect to `H_m`, which is
/// also the gradient of [`redundancy_total`] with respect to `H_m`: `2 Γ_m`.
pub fn redundancy_gradient(hs: &[Array2<f64>], m: usize, beta: f64) -> Result<Array2<f64>> {
    if m >= hs.len() {
        return Err(Error::InvalidConfig(format!("layer {m} of {}", hs.len())));
    }
    for h in hs {
        check_pair(hs[m].view(), h.view())?;
    }
    Ok(gamma(hs, m, beta) * 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn identity_cases() {
        let i2 = Array2::<f64>::eye(2);
        assert_eq!(redundancy_overlap(i2.view(), i2.view()).unwrap(), 2.0);
        let one = array![[1.0, 1.0]];
        assert_eq!(redundancy_overlap(i2.view(), one.view()).unwrap(), 2.0);
        let zero = Array2::<f64>::zeros((3, 2));
        assert_eq!(redundancy_overlap(i2.view(), zero.view()).unwrap(), 0.0);
    }

    #[test]
    fn balanced_hand_values() {
        let i2 = Array2::<f64>::eye(2);
        assert_eq!(redundancy_balanced(i2.view(), i2.view(), 0.0).unwrap(), 2.0);
        assert_eq!(redundancy_balanced(i2.view(), i2.view(), 0.5).unwrap(), 2.0);
        assert_eq!(redundancy_balanced(i2.view(), i2.view(), 1.0).unwrap(), 2.0);
    }

    #[test]
    fn mismatched_samples_and_bad_beta() {
        let a = Array2::<f64>::eye(2);
        let b = Array2::<f64>::zeros((2, 3));
        assert!(redundancy_overlap(a.view(), b.view()).is_err());
        assert!(redundancy_balanced(a.view(), a.view(), 1.1).is_err());
    }

    #[test]
    fn single_layer_gradient_is_zero() {
        let hs = vec![array![[1.0, 2.0], [0.5, 0.0]]];
        let g = redundancy_gradient(&hs, 0, 0.3).unwrap();
        assert!(g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn beta_one_against_zero_partner_is_zero() {
        let hs = vec![array![[1.0, 2.0], [0.5, 0.0]], Array2::zeros((1, 2))];
        let g = redundancy_gradient(&hs, 0, 1.0).unwrap();
        assert!(g.iter().all(|&x| x == 0.0));
    }
}
