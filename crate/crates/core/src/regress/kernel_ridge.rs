use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// RBF kernel ridge regression around the target mean:
/// `f(x) = mean(y) + sum_i alpha_i exp(-gamma |x - x_i|^2)` with
/// `(K + lambda I) alpha = y - mean(y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelRidgeModel {
    pub gamma: f64,
    pub lambda: f64,
    pub intercept: f64,
    pub train_x: Array2<f64>,
    pub alpha: Vec<f64>,
}

/// Median heuristic `1 / (2 * median_{i<j} |x_i - x_j|^2)`; falls back to 1
/// when the median distance is zero.
pub fn median_heuristic_gamma(x: ArrayView2<'_, f64>) -> f64 {
    let n = x.nrows();
    let mut d2 = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            d2.push(sq_dist(x.row(i), x.row(j)));
        }
    }
    if d2.is_empty() {
        return 1.0;
    }
    let mid = d2.len() / 2;
    let (_, med, _) = d2.select_nth_unstable_by(mid, f64::total_cmp);
    if *med > 0.0 {
        1.0 / (2.0 * *med)
    } else {
        1.0
    }
}

fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(p, q)| (p - q) * (p - q)).sum()
}

impl KernelRidgeModel {
    pub fn fit(x: ArrayView2<'_, f64>, y: &[f64], gamma: Option<f64>, lambda: f64) -> Result<Self> {
        let n = x.nrows();
        let gamma = gamma.unwrap_or_else(|| median_heuristic_gamma(x));
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::param(format!("rbf gamma must be positive, got {gamma}")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::param(format!("ridge lambda must be positive, got {lambda}")));
        }
        let intercept = y.iter().sum::<f64>() / n as f64;
        let mut k = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            k[(i, i)] = 1.0 + lambda;
            for j in 0..i {
                let v = (-gamma * sq_dist(x.row(i), x.row(j))).exp();
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        let rhs = DVector::from_iterator(n, y.iter().map(|v| v - intercept));
        let chol = k.cholesky().ok_or_else(|| Error::Regression {
            stage: "kernel_ridge",
            reason: "regularized kernel matrix is not positive definite".into(),
        })?;
        let alpha = chol.solve(&rhs);
        Ok(Self {
            gamma,
            lambda,
            intercept,
            train_x: x.to_owned(),
            alpha: alpha.iter().copied().collect(),
        })
    }

    pub fn predict_one(&self, x: ArrayView1<'_, f64>) -> f64 {
        self.intercept
            + self
                .train_x
                .rows()
                .into_iter()
                .zip(&self.alpha)
                .map(|(t, a)| a * (-self.gamma * sq_dist(t, x)).exp())
                .sum::<f64>()
    }
}
