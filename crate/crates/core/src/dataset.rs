//! Empirical measures over feature vectors.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// An `n x d` feature matrix paired with strictly positive sample weights
/// summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    weights: Array1<f64>,
}

impl Dataset {
    /// Builds a dataset with uniform weights `1/n`.
    pub fn new(features: Array2<f64>) -> Result<Self> {
        let n = features.nrows();
        let weights = Array1::from_elem(n, 1.0 / n.max(1) as f64);
        Self::with_weights(features, weights)
    }

    pub fn with_weights(features: Array2<f64>, weights: Array1<f64>) -> Result<Self> {
        let (n, d) = features.dim();
        if n < 2 {
            return Err(Error::param(format!("dataset needs at least 2 samples, got {n}")));
        }
        if d < 1 {
            return Err(Error::param("dataset needs at least one feature column"));
        }
        check_finite(features.view())?;
        if weights.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: weights.len(),
            });
        }
        check_probability_vector(&weights.to_vec())?;
        Ok(Self { features, weights })
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn weights(&self) -> &Array1<f64> {
        &self.weights
    }

    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// Keeps the rows listed in `indices` and renormalizes their weights.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let features = self.features.select(Axis(0), indices);
        let mut weights = self.weights.select(Axis(0), indices);
        let total = weights.sum();
        weights.mapv_inplace(|w| w / total);
        Self::with_weights(features, weights)
    }

    pub fn into_features(self) -> Array2<f64> {
        self.features
    }
}

/// Rejects NaN and infinite entries, naming the first offending cell.
pub fn check_finite(m: ArrayView2<'_, f64>) -> Result<()> {
    for ((row, col), v) in m.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite { row, col });
        }
    }
    Ok(())
}

pub(crate) fn check_probability_vector(w: &[f64]) -> Result<()> {
    if w.is_empty() {
        return Err(Error::InvalidWeights("empty weight vector".into()));
    }
    if let Some((i, v)) = w.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::InvalidWeights(format!(
            "weight {i} must be finite and strictly positive, got {v}"
        )));
    }
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOL * w.len().max(1) as f64 {
        return Err(Error::InvalidWeights(format!("weights sum to {sum}, expected 1")));
    }
    Ok(())
}

/// Per-column affine map to zero mean and unit (population) variance.
///
/// Columns with zero spread keep a unit scale so constant features map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: ArrayView2<'_, f64>) -> Self {
        let n = x.nrows() as f64;
        let mut mean = Vec::with_capacity(x.ncols());
        let mut scale = Vec::with_capacity(x.ncols());
        for col in x.axis_iter(Axis(1)) {
            let m = col.sum() / n;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            let s = var.sqrt();
            mean.push(m);
            scale.push(if s > 0.0 && s.is_finite() { s } else { 1.0 });
        }
        Self { mean, scale }
    }

    /// The identity map for `d` columns.
    pub fn identity(d: usize) -> Self {
        Self {
            mean: vec![0.0; d],
            scale: vec![1.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.ncols(),
            });
        }
        let mut out = x.to_owned();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (m, s) = (self.mean[j], self.scale[j]);
            col.mapv_inplace(|v| (v - m) / s);
        }
        Ok(out)
    }
}
