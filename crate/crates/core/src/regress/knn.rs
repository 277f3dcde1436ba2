use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean target of the `k` closest training points (ties by index).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub train_x: Array2<f64>,
    pub train_y: Vec<f64>,
}

impl KnnModel {
    pub fn fit(x: ArrayView2<'_, f64>, y: &[f64], k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("knn regressor needs k >= 1"));
        }
        if k > x.nrows() {
            return Err(Error::param(format!(
                "knn regressor k = {k} exceeds the {} training points",
                x.nrows()
            )));
        }
        Ok(Self {
            k,
            train_x: x.to_owned(),
            train_y: y.to_vec(),
        })
    }

    pub fn predict_one(&self, x: ArrayView1<'_, f64>) -> f64 {
        let mut d: Vec<(f64, usize)> = self
            .train_x
            .rows()
            .into_iter()
            .enumerate()
            .map(|(i, t)| {
                let d2 = t.iter().zip(x.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
                (d2, i)
            })
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < d.len() {
            d.select_nth_unstable_by(self.k - 1, cmp);
            d.truncate(self.k);
        }
        // fixed summation order for bit-stable output
        d.sort_by(cmp);
        d.iter().map(|(_, i)| self.train_y[*i]).sum::<f64>() / self.k as f64
    }
}
