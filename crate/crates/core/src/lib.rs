//! Anomaly detection by mass-repulsive optimal transport.
//!
//! A sample set is transported onto itself under a ground cost that makes
//! each sample's nearest neighbors as expensive as its farthest point. Points
//! in dense regions can still find cheap destinations just outside their
//! neighborhood; isolated points cannot, and their transport effort is high.
//! Efforts are calibrated to `[0, 1]` through a KDE and a regressor extends
//! the score to unseen points.

pub mod cli;
pub mod cost;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod io;
pub mod model;
pub mod regress;
pub mod scoring;
pub mod solver;

pub use cost::{CapRule, CostKind, CostMatrix, NeighborhoodGraph, NeighborhoodMode};
pub use dataset::{Dataset, Standardizer};
pub use error::{Error, Result};
pub use eval::{AblationGrid, AblationRow, LabeledDataset};
pub use model::{CostChoice, FitConfig, MrotModel, Neighborhood};
pub use regress::{Regressor, RegressorKind};
pub use scoring::{EffortVector, KdeModel};
pub use solver::{SolverConfig, TransportPlan};
