use ndarray::Array2;

use crate::error::{Error, Result};

/// Factors of the weighted multi-view deep semi-NMF.
///
/// Layers are 0-indexed here. `z[v][l]` is the layer-`l` basis of view `v`
/// (`K_{l-1} × K_l`, with `K_{-1} = d_v`), `h[m]` the shared layer-`m`
/// representation (`K_m × n`, non-negative), and `alpha[[m, v]]` the weight of
/// view `v` in clustering `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorState {
    pub z: Vec<Vec<Array2<f64>>>,
    pub h: Vec<Array2<f64>>,
    pub alpha: Array2<f64>,
}

impl FactorState {
    pub fn n_layers(&self) -> usize {
        self.h.len()
    }

    pub fn n_views(&self) -> usize {
        self.z.len()
    }

    /// `Z_0 ⋯ Z_m` for view `v` (`d_v × K_m`).
    pub fn basis_chain(&self, v: usize, m: usize) -> Array2<f64> {
        chain(&self.z[v][..=m]).expect("non-empty chain")
    }

    /// All prefix products `Z_0 ⋯ Z_m`, `m = 0..M`, for view `v`.
    pub fn basis_prefixes(&self, v: usize) -> Vec<Array2<f64>> {
        let mut out: Vec<Array2<f64>> = Vec::with_capacity(self.n_layers());
        for z in &self.z[v] {
            let next = match out.last() {
                Some(prev) => prev.dot(z),
                None => z.clone(),
            };
            out.push(next);
        }
        out
    }

    /// Rescale `H_m` to `‖H_m‖_F² = n`, dividing the columns of every
    /// `Z_m^(v)` and multiplying the rows of every `Z_{m+1}^(v)` by the same
    /// factor so all reconstructions are unchanged. Returns the factor; a zero
    /// `H_m` is left alone and gives 1.
    pub fn normalize_layer(&mut self, m: usize) -> f64 {
        let h = &mut self.h[m];
        let norm_sq: f64 = h.iter().map(|x| x * x).sum();
        if norm_sq.is_nan() || norm_sq <= 0.0 {
            return 1.0;
        }
        let c = (h.ncols() as f64 / norm_sq).sqrt();
        h.mapv_inplace(|x| x * c);
        for zs in self.z.iter_mut() {
            zs[m].mapv_inplace(|x| x / c);
            if let Some(next) = zs.get_mut(m + 1) {
                next.mapv_inplace(|x| x * c);
            }
        }
        c
    }

    /// Check the shape chain, `H ≥ 0` and that every alpha row lies on the
    /// simplex within `tol`.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        let m_layers = self.n_layers();
        if self.alpha.dim() != (m_layers, self.n_views()) {
            return Err(Error::DimensionMismatch(format!(
                "alpha is {:?}, expected ({m_layers}, {})",
                self.alpha.dim(),
                self.n_views()
            )));
        }
        for (v, zs) in self.z.iter().enumerate() {
            if zs.len() != m_layers {
                return Err(Error::DimensionMismatch(format!(
                    "view {v} has {} bases for {m_layers} layers",
                    zs.len()
                )));
            }
            for l in 0..m_layers {
                if zs[l].ncols() != self.h[l].nrows() {
                    return Err(Error::DimensionMismatch(format!(
                        "Z[{v}][{l}] has {} columns but H[{l}] has {} rows",
                        zs[l].ncols(),
                        self.h[l].nrows()
                    )));
                }
                if l > 0 && zs[l].nrows() != zs[l - 1].ncols() {
                    return Err(Error::DimensionMismatch(format!(
                        "Z[{v}][{l}] rows do not match Z[{v}][{}] columns",
                        l - 1
                    )));
                }
            }
        }
        for (m, h) in self.h.iter().enumerate() {
            if let Some(bad) = h.iter().find(|&&x| x.is_nan() || x < 0.0) {
                return Err(Error::NonFinite(format!("H[{m}] has entry {bad}")));
            }
        }
        for (m, row) in self.alpha.rows().into_iter().enumerate() {
            let sum: f64 = row.sum();
            if (sum - 1.0).abs() > tol || row.iter().any(|&a| a < 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "alpha row {m} = {row} is off the simplex"
                )));
            }
        }
        Ok(())
    }
}

/// Product of a non-empty sequence of matrices.
pub(crate) fn chain(mats: &[Array2<f64>]) -> Option<Array2<f64>> {
    let (first, rest) = mats.split_first()?;
    Some(rest.iter().fold(first.clone(), |acc, z| acc.dot(z)))
}
