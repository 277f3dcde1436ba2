//! Score regressors that extend training scores to unseen points.

mod gbt;
mod kernel_ridge;
mod knn;

use std::fmt;
use std::str::FromStr;

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

pub use gbt::{GbtModel, Node, Tree};
pub use kernel_ridge::{median_heuristic_gamma, KernelRidgeModel};
pub use knn::KnnModel;

use crate::dataset::Standardizer;
use crate::error::{Error, Result};

/// Regressor family and hyperparameters. Variant order is the tie-break order
/// used by model selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RegressorKind {
    KnnRegressor {
        k: usize,
    },
    KernelRidge {
        /// `None` applies the median heuristic at fit time.
        gamma: Option<f64>,
        lambda: f64,
    },
    GradientBoostedTrees {
        n_trees: usize,
        depth: usize,
        learning_rate: f64,
    },
}

impl RegressorKind {
    pub const fn knn() -> Self {
        RegressorKind::KnnRegressor { k: 5 }
    }

    pub const fn kernel_ridge() -> Self {
        RegressorKind::KernelRidge {
            gamma: None,
            lambda: 1e-3,
        }
    }

    pub const fn gbt() -> Self {
        RegressorKind::GradientBoostedTrees {
            n_trees: 100,
            depth: 3,
            learning_rate: 0.1,
        }
    }

    pub fn order(&self) -> usize {
        match self {
            RegressorKind::KnnRegressor { .. } => 0,
            RegressorKind::KernelRidge { .. } => 1,
            RegressorKind::GradientBoostedTrees { .. } => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RegressorKind::KnnRegressor { .. } => "knn",
            RegressorKind::KernelRidge { .. } => "kernel-ridge",
            RegressorKind::GradientBoostedTrees { .. } => "gbt",
        }
    }
}

impl Default for RegressorKind {
    fn default() -> Self {
        Self::kernel_ridge()
    }
}

impl fmt::Display for RegressorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RegressorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "knn" | "knn-regressor" => Ok(Self::knn()),
            "kernel-ridge" | "kernel_ridge" | "krr" => Ok(Self::kernel_ridge()),
            "gbt" | "gradient-boosted-trees" => Ok(Self::gbt()),
            other => Err(Error::param(format!(
                "unknown regressor `{other}` (expected kernel-ridge, knn or gbt)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FittedRegressor {
    Knn(KnnModel),
    KernelRidge(KernelRidgeModel),
    Gbt(GbtModel),
}

/// A trained score regressor with the feature standardizer captured at fit
/// time. Predictions are clamped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regressor {
    pub kind: RegressorKind,
    pub standardizer: Standardizer,
    pub fitted: FittedRegressor,
}

impl Regressor {
    /// Fits on raw features `x`; `standardizer` maps them to the space the
    /// model is trained in.
    pub fn fit(
        kind: RegressorKind,
        standardizer: Standardizer,
        x: ArrayView2<'_, f64>,
        y: &[f64],
    ) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                got: y.len(),
            });
        }
        if x.nrows() == 0 {
            return Err(Error::param("regressor needs at least one training point"));
        }
        let z = standardizer.transform(x)?;
        let fitted = match kind {
            RegressorKind::KnnRegressor { k } => FittedRegressor::Knn(KnnModel::fit(z.view(), y, k)?),
            RegressorKind::KernelRidge { gamma, lambda } => {
                FittedRegressor::KernelRidge(KernelRidgeModel::fit(z.view(), y, gamma, lambda)?)
            }
            RegressorKind::GradientBoostedTrees {
                n_trees,
                depth,
                learning_rate,
            } => FittedRegressor::Gbt(GbtModel::fit(z.view(), y, n_trees, depth, learning_rate)?),
        };
        Ok(Self {
            kind,
            standardizer,
            fitted,
        })
    }

    pub fn n_features(&self) -> usize {
        self.standardizer.dim()
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        let z = self.standardizer.transform(x)?;
        Ok(z.rows().into_iter().map(|row| self.predict_standardized(row)).collect())
    }

    fn predict_standardized(&self, z: ArrayView1<'_, f64>) -> f64 {
        let raw = match &self.fitted {
            FittedRegressor::Knn(m) => m.predict_one(z),
            FittedRegressor::KernelRidge(m) => m.predict_one(z),
            FittedRegressor::Gbt(m) => m.predict_one(z),
        };
        if raw.is_nan() {
            return raw;
        }
        raw.clamp(0.0, 1.0)
    }
}
