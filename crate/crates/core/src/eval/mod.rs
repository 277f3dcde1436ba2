//! Synthetic data, detection metrics and the ablation protocol.

pub mod metrics;
pub mod rng;

use std::time::Instant;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Standardizer};
use crate::error::{Error, Result};
use crate::model::{score_dataset, FitConfig};
use crate::regress::{Regressor, RegressorKind};
use crate::solver::SolverConfig;

pub use metrics::{auc_pr, auc_roc};
pub use rng::SeededRng;

/// Fits on more samples than this are run on a seeded subsample.
pub const MAX_FIT_SAMPLES: usize = 20_000;

/// A dataset with ground-truth labels (`true` = anomaly).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub dataset: Dataset,
    pub labels: Vec<bool>,
}

impl LabeledDataset {
    pub fn new(dataset: Dataset, labels: Vec<bool>) -> Result<Self> {
        if labels.len() != dataset.n_samples() {
            return Err(Error::DimensionMismatch {
                expected: dataset.n_samples(),
                got: labels.len(),
            });
        }
        Ok(Self { dataset, labels })
    }

    pub fn n_anomalies(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        Ok(Self {
            dataset: self.dataset.select(indices)?,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        })
    }
}

/// Two Gaussian clusters in the plane: `n_normal` draws from `N(0, 0.25 I)`
/// followed by `n_anom` draws from `N((-3, -3), 0.01 I)`.
///
/// Coordinates are drawn in row order, x before y, from one
/// [`SeededRng`] stream.
pub fn synth_toy(n_normal: usize, n_anom: usize, seed: u64) -> Result<LabeledDataset> {
    if n_normal == 0 || n_anom == 0 {
        return Err(Error::param("synth_toy needs at least one sample of each class"));
    }
    let mut rng = SeededRng::new(seed);
    let n = n_normal + n_anom;
    let mut x = Array2::zeros((n, 2));
    for i in 0..n {
        let (center, std) = if i < n_normal { (0.0, 0.5) } else { (-3.0, 0.1) };
        for j in 0..2 {
            x[[i, j]] = rng.normal(center, std);
        }
    }
    let labels = (0..n).map(|i| i >= n_normal).collect();
    LabeledDataset::new(Dataset::new(x)?, labels)
}

/// How many anomalies [`downsample_anomalies`] keeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnomalyTarget {
    Count(usize),
    /// Share of anomalies in the *output* dataset, in `(0, 1)`.
    Fraction(f64),
}

/// Keeps every normal sample and a seeded subset of the anomalies, preserving
/// the original row order.
pub fn downsample_anomalies(
    data: &LabeledDataset,
    target: AnomalyTarget,
    seed: u64,
) -> Result<LabeledDataset> {
    let anomalies: Vec<usize> = (0..data.labels.len()).filter(|&i| data.labels[i]).collect();
    let n_normal = data.labels.len() - anomalies.len();
    let count = match target {
        AnomalyTarget::Count(c) => c,
        AnomalyTarget::Fraction(f) => {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::param(format!("anomaly fraction must lie in (0, 1), got {f}")));
            }
            (f * n_normal as f64 / (1.0 - f)).round() as usize
        }
    };
    if count == 0 {
        return Err(Error::param(
            "downsampling to zero anomalies leaves a single class",
        ));
    }
    if count > anomalies.len() {
        return Err(Error::param(format!(
            "requested {count} anomalies but only {} are available",
            anomalies.len()
        )));
    }
    let picked = SeededRng::new(seed).sample_indices(anomalies.len(), count);
    let mut keep: Vec<usize> = (0..data.labels.len()).filter(|&i| !data.labels[i]).collect();
    keep.extend(picked.iter().map(|&p| anomalies[p]));
    keep.sort_unstable();
    data.select(&keep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationGrid {
    pub epsilons: Vec<f64>,
    pub ks: Vec<usize>,
    pub regressors: Vec<RegressorKind>,
    pub seed: u64,
}

impl Default for AblationGrid {
    fn default() -> Self {
        Self {
            epsilons: vec![0.0, 1e-2, 1e-1, 1.0],
            ks: vec![5, 10, 20, 30, 40, 50],
            regressors: vec![RegressorKind::kernel_ridge()],
            seed: 0,
        }
    }
}

impl AblationGrid {
    pub fn validate(&self) -> Result<()> {
        if self.epsilons.is_empty() || self.ks.is_empty() || self.regressors.is_empty() {
            return Err(Error::param("ablation grid lists must be nonempty"));
        }
        for &eps in &self.epsilons {
            SolverConfig::entropic(eps).validate()?;
        }
        if self.ks.contains(&0) {
            return Err(Error::param("ablation grid k values must be positive"));
        }
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        self.epsilons.len() * self.ks.len() * self.regressors.len()
    }
}

/// One grid cell. Metrics are `None` when the cell failed; `error` says why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub epsilon: f64,
    pub k: usize,
    pub regressor: String,
    pub auc_roc: Option<f64>,
    pub auc_pr: Option<f64>,
    pub converged: Option<bool>,
    pub runtime_secs: f64,
    pub error: Option<String>,
}

/// Fits one model per grid cell and scores the training data with its
/// regressor. The transport stage is shared by all regressors of an
/// `(epsilon, k)` pair; each row's runtime includes that shared stage.
pub fn ablation_run(data: &LabeledDataset, grid: &AblationGrid) -> Result<Vec<AblationRow>> {
    grid.validate()?;
    let data = if data.labels.len() > MAX_FIT_SAMPLES {
        let keep = SeededRng::new(grid.seed).sample_indices(data.labels.len(), MAX_FIT_SAMPLES);
        data.select(&keep)?
    } else {
        data.clone()
    };
    // metrics need both classes
    let positives = data.n_anomalies();
    if positives == 0 || positives == data.labels.len() {
        return Err(Error::SingleClass);
    }

    let raw = data.dataset.features();
    let standardizer = Standardizer::fit(raw);
    let prepared = Dataset::with_weights(standardizer.transform(raw)?, data.dataset.weights().clone())?;

    let mut rows = Vec::with_capacity(grid.n_cells());
    for &epsilon in &grid.epsilons {
        for &k in &grid.ks {
            let start = Instant::now();
            let config = FitConfig::new(k, epsilon);
            let trace = score_dataset(&prepared, &config);
            let transport_secs = start.elapsed().as_secs_f64();
            for kind in &grid.regressors {
                let cell_start = Instant::now();
                let outcome = trace.as_ref().map_err(Error::to_string).and_then(|t| {
                    let r = Regressor::fit(*kind, standardizer.clone(), raw, &t.scores)
                        .and_then(|r| r.predict(raw))
                        .and_then(|pred| Ok((auc_roc(&pred, &data.labels)?, auc_pr(&pred, &data.labels)?)));
                    r.map(|m| (m, t.plan.converged)).map_err(|e| e.to_string())
                });
                let runtime_secs = transport_secs + cell_start.elapsed().as_secs_f64();
                let row = match outcome {
                    Ok(((roc, pr), converged)) => AblationRow {
                        epsilon,
                        k,
                        regressor: kind.name().to_string(),
                        auc_roc: Some(roc),
                        auc_pr: Some(pr),
                        converged: Some(converged),
                        runtime_secs,
                        error: None,
                    },
                    Err(msg) => {
                        log::warn!("ablation cell eps={epsilon} k={k} {kind} failed: {msg}");
                        AblationRow {
                            epsilon,
                            k,
                            regressor: kind.name().to_string(),
                            auc_roc: None,
                            auc_pr: None,
                            converged: None,
                            runtime_secs,
                            error: Some(msg),
                        }
                    }
                };
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

/// Feature matrix split by label, handy for per-class summaries.
pub fn class_rows(data: &LabeledDataset, anomalous: bool) -> Array2<f64> {
    let idx: Vec<usize> = (0..data.labels.len()).filter(|&i| data.labels[i] == anomalous).collect();
    data.dataset.features().select(Axis(0), &idx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_shapes_and_determinism() {
        let a = synth_toy(500, 25, 0).unwrap();
        assert_eq!(a.dataset.n_samples(), 525);
        assert_eq!(a.n_anomalies(), 25);
        assert!(a.labels[500..].iter().all(|&l| l));
        assert_eq!(a, synth_toy(500, 25, 0).unwrap());
        assert_ne!(a, synth_toy(500, 25, 1).unwrap());
    }

    #[test]
    fn toy_cluster_moments() {
        let d = synth_toy(500, 25, 0).unwrap();
        let anom = class_rows(&d, true);
        let m = anom.mean_axis(Axis(0)).unwrap();
        assert!(((m[0] + 3.0).powi(2) + (m[1] + 3.0).powi(2)).sqrt() < 0.1, "{m}");
        // sampling noise of a variance estimate is ~0.25 * sqrt(2 / n)
        let d = synth_toy(2000, 25, 0).unwrap();
        let normal = class_rows(&d, false);
        let mean = normal.mean_axis(Axis(0)).unwrap();
        let centered = &normal - &mean;
        let cov = centered.t().dot(&centered) / (normal.nrows() - 1) as f64;
        for j in 0..2 {
            assert!((cov[[j, j]] - 0.25).abs() < 0.025, "{cov}");
        }
        assert!(cov[[0, 1]].abs() < 0.025);
    }

    #[test]
    fn downsample_counts() {
        let d = synth_toy(500, 25, 0).unwrap();
        let s = downsample_anomalies(&d, AnomalyTarget::Count(5), 3).unwrap();
        assert_eq!(s.labels.len(), 505);
        assert_eq!(s.n_anomalies(), 5);
        assert_eq!(class_rows(&s, false), class_rows(&d, false));
        let all = downsample_anomalies(&d, AnomalyTarget::Count(25), 3).unwrap();
        assert_eq!(all.dataset.features(), d.dataset.features());
        assert!(downsample_anomalies(&d, AnomalyTarget::Count(0), 3).is_err());
        assert!(downsample_anomalies(&d, AnomalyTarget::Count(26), 3).is_err());
        let f = downsample_anomalies(&d, AnomalyTarget::Fraction(0.01), 3).unwrap();
        assert_eq!(f.n_anomalies(), 5);
    }

    #[test]
    fn single_cell_grid() {
        let d = synth_toy(60, 6, 2).unwrap();
        let grid = AblationGrid {
            epsilons: vec![0.1],
            ks: vec![5],
            regressors: vec![RegressorKind::knn()],
            seed: 0,
        };
        let rows = ablation_run(&d, &grid).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].auc_roc.is_some());
    }

    #[test]
    fn failing_cells_are_recorded() {
        let d = synth_toy(20, 3, 2).unwrap();
        let grid = AblationGrid {
            epsilons: vec![0.5],
            ks: vec![3, 40],
            regressors: vec![RegressorKind::knn()],
            seed: 0,
        };
        let rows = ablation_run(&d, &grid).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].error.is_none());
        assert!(rows[1].auc_roc.is_none());
        assert!(rows[1].error.as_deref().unwrap().contains("k < n"));
    }

    #[test]
    fn empty_grid_rejected() {
        let grid = AblationGrid {
            ks: vec![],
            ..AblationGrid::default()
        };
        assert!(grid.validate().is_err());
    }
}
