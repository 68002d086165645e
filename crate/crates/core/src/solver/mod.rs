//! Multi-view deep semi-NMF with per-clustering view weights and a balanced
//! redundancy penalty between layers.
//!
//! The objective is
//!
//! ```text
//! J = Σ_m Σ_v (α_m^(v))^r ‖X^(v) − Z_1^(v) ⋯ Z_m^(v) H_m‖²  +  λ Σ_{m<m'} R̃(H_m, H_m')
//! ```
//!
//! with `H_m ≥ 0` shared across views and every `α_m` on the simplex. Each
//! layer's representation yields one clustering.

mod config;
mod fit;
mod objective;
mod redundancy;
mod state;
mod updates;

pub use config::SolverConfig;
pub use fit::{fit, fit_observed, pretrain, random_init, FitResult, Step};
pub use objective::{objective, ObjectiveBreakdown};
pub use redundancy::{redundancy_balanced, redundancy_gradient, redundancy_overlap, redundancy_total};
pub use state::FactorState;
pub use updates::{alpha_from_residuals, layer_residuals, update_alpha, update_h, update_z, ZUpdate, THETA_FLOOR};

pub(crate) use updates::{update_h_weighted, update_z_weighted};
