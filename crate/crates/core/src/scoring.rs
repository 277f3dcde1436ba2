//! Transport efforts and their calibration into `[0, 1]` anomaly scores.

use std::f64::consts::{PI, SQRT_2};

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::cost::CostMatrix;
use crate::error::{Error, Result};
use crate::solver::TransportPlan;

/// Per-sample expected cost under the conditional plan `gamma(. | x_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffortVector {
    pub efforts: Vec<f64>,
    pub source_epsilon: f64,
    pub source_k: Option<usize>,
}

impl EffortVector {
    pub fn len(&self) -> usize {
        self.efforts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.efforts.is_empty()
    }
}

/// `t_i = sum_j (gamma_ij / p_i) * C_ij`.
pub fn transport_effort(
    plan: &TransportPlan,
    engineered: &CostMatrix,
    p: ArrayView1<'_, f64>,
) -> Result<EffortVector> {
    let (n, m) = engineered.shape();
    if plan.coupling.dim() != (n, m) {
        return Err(Error::DimensionMismatch {
            expected: n * m,
            got: plan.coupling.len(),
        });
    }
    if p.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p.len(),
        });
    }
    if let Some((i, w)) = p.iter().enumerate().find(|(_, w)| w.is_nan() || **w <= 0.0) {
        return Err(Error::InvalidWeights(format!(
            "weight {i} must be strictly positive, got {w}"
        )));
    }
    let efforts = plan
        .coupling
        .rows()
        .into_iter()
        .zip(engineered.values().rows())
        .zip(p.iter())
        .map(|((g, c), pi)| g.iter().zip(c.iter()).map(|(g, c)| g * c).sum::<f64>() / pi)
        .collect();
    Ok(EffortVector {
        efforts,
        source_epsilon: 0.0,
        source_k: None,
    })
}

/// Gaussian kernel density estimate over scalar efforts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeModel {
    pub centers: Vec<f64>,
    pub bandwidth: f64,
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

impl KdeModel {
    pub fn new(centers: Vec<f64>, bandwidth: f64) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::param("kde needs at least one center"));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::param(format!("bandwidth must be positive, got {bandwidth}")));
        }
        if centers.iter().any(|c| !c.is_finite()) {
            return Err(Error::param("kde centers must be finite"));
        }
        Ok(Self { centers, bandwidth })
    }

    pub fn density(&self, t: f64) -> f64 {
        let norm = 1.0 / (self.centers.len() as f64 * self.bandwidth * (2.0 * PI).sqrt());
        norm * self
            .centers
            .iter()
            .map(|c| {
                let z = (t - c) / self.bandwidth;
                (-0.5 * z * z).exp()
            })
            .sum::<f64>()
    }

    /// Exact mixture CDF `(1/n) sum_i Phi((t - t_i) / sigma)`.
    pub fn cdf(&self, t: f64) -> f64 {
        if t.is_nan() {
            return f64::NAN;
        }
        let s: f64 = self
            .centers
            .iter()
            .map(|c| normal_cdf((t - c) / self.bandwidth))
            .sum();
        (s / self.centers.len() as f64).clamp(0.0, 1.0)
    }
}

/// Scott's rule for scalar data, `sigma = std(t) * n^(-1/5)`, with the
/// population standard deviation and a floor of `1e-9 * (1 + |mean|)`.
pub fn scott_bandwidth(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let floor = 1e-9 * (1.0 + mean.abs());
    (var.sqrt() * n.powf(-0.2)).max(floor)
}

pub fn fit_kde(efforts: &EffortVector) -> Result<KdeModel> {
    if efforts.len() < 2 {
        return Err(Error::param(format!(
            "kde needs at least 2 efforts, got {}",
            efforts.len()
        )));
    }
    KdeModel::new(efforts.efforts.clone(), scott_bandwidth(&efforts.efforts))
}

pub fn cdf(model: &KdeModel, t: f64) -> f64 {
    model.cdf(t)
}

/// Calibrated training scores `s_i = F(t_i)` and the fitted KDE.
pub fn score_training_samples(
    plan: &TransportPlan,
    engineered: &CostMatrix,
    p: ArrayView1<'_, f64>,
) -> Result<(Vec<f64>, EffortVector, KdeModel)> {
    let efforts = transport_effort(plan, engineered, p)?;
    let kde = fit_kde(&efforts)?;
    let scores = efforts.efforts.iter().map(|t| kde.cdf(*t)).collect();
    Ok((scores, efforts, kde))
}
