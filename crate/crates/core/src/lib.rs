//! Multiple diverse clusterings of multi-view data.
//!
//! Each view is factorised through a chain of per-view bases onto shared,
//! non-negative layer representations; layer `m` yields clustering `m`.
//! Per-clustering view weights let different clusterings draw on different
//! views, and a balanced co-association penalty keeps the layers from
//! repeating each other.
//!
//! Modules:
//! - [`dataset`]: multi-view containers, CSV/JSON I/O, synthetic generators
//! - [`seminmf`]: shallow semi-NMF used for layer-wise pretraining
//! - [`solver`]: the weighted multi-view deep factorisation
//! - [`dmf`]: plain deep semi-NMF on concatenated views
//! - [`clustering`]: seeded k-means
//! - [`metrics`]: silhouette, Dunn, NMI, Jaccard and evaluation reports
//! - [`harness`]: repeated runs, sweeps and the CLI plumbing

pub mod clustering;
pub mod dataset;
pub mod dmf;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod par;
pub mod seminmf;
pub mod solver;

pub use clustering::{extract_clusterings, kmeans, Clustering, KMeansOptions};
pub use dataset::{MultiViewDataset, PlantedTruth, StructureSpec};
pub use error::{Error, Result};
pub use solver::{FactorState, FitResult, ObjectiveBreakdown, SolverConfig};
