//! Small dense linear-algebra helpers on top of `ndarray`.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView2, Axis};

/// Singular values below `PINV_RCOND * sigma_max` are treated as zero.
pub const PINV_RCOND: f64 = 1e-10;

/// Moore-Penrose pseudo-inverse via SVD.
///
/// Returns the inverse together with a flag that is set when at least one
/// singular value was truncated (the input was numerically rank deficient).
pub fn pinv(a: ArrayView2<'_, f64>) -> (Array2<f64>, bool) {
    let (rows, cols) = a.dim();
    if rows == 0 || cols == 0 {
        return (Array2::zeros((cols, rows)), false);
    }
    let m = DMatrix::from_fn(rows, cols, |i, j| a[[i, j]]);
    let svd = m.svd(true, true);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = PINV_RCOND * sigma_max;
    let u = svd.u.as_ref().expect("svd computed with u");
    let vt = svd.v_t.as_ref().expect("svd computed with v_t");

    let mut truncated = false;
    let mut out = Array2::<f64>::zeros((cols, rows));
    for (s_idx, &s) in svd.singular_values.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            truncated = true;
            continue;
        }
        let inv = 1.0 / s;
        // out += v_s * inv * u_s^T
        for i in 0..cols {
            let vi = vt[(s_idx, i)] * inv;
            if vi == 0.0 {
                continue;
            }
            for j in 0..rows {
                out[[i, j]] += vi * u[(j, s_idx)];
            }
        }
    }
    (out, truncated)
}

/// Elementwise positive part `(|A| + A) / 2`.
pub fn pos_part(a: &Array2<f64>) -> Array2<f64> {
    a.mapv(|x| if x > 0.0 { x } else { 0.0 })
}

/// Elementwise negative part `(|A| - A) / 2`.
pub fn neg_part(a: &Array2<f64>) -> Array2<f64> {
    a.mapv(|x| if x < 0.0 { -x } else { 0.0 })
}

/// Squared Frobenius norm.
pub fn frob_sq(a: ArrayView2<'_, f64>) -> f64 {
    a.iter().map(|x| x * x).sum()
}

/// `‖X - A B‖_F²` without keeping the product around longer than needed.
pub fn residual_sq(x: ArrayView2<'_, f64>, a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> f64 {
    let approx = a.dot(&b);
    x.iter()
        .zip(approx.iter())
        .map(|(p, q)| {
            let d = p - q;
            d * d
        })
        .sum()
}

/// Row sums of `a` as a vector.
pub fn row_sums(a: ArrayView2<'_, f64>) -> Array1<f64> {
    a.sum_axis(Axis(1))
}

pub fn all_finite(a: ArrayView2<'_, f64>) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// Additive stabiliser for multiplicative-update denominators.
pub const MU_EPS: f64 = 1e-9;

/// `H ← H ⊙ sqrt(num / (den + ε))`, elementwise.
///
/// Entries whose numerator and denominator are both exactly zero have a zero
/// gradient and are left unchanged.
pub fn multiplicative_update(h: &mut Array2<f64>, num: &Array2<f64>, den: &Array2<f64>) {
    ndarray::Zip::from(h).and(num).and(den).for_each(|h, &n, &d| {
        if n == 0.0 && d == 0.0 {
            return;
        }
        *h *= (n / (d + MU_EPS)).sqrt();
    });
}

/// SplitMix64 step, used to derive independent child seeds from a parent seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(stream.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
