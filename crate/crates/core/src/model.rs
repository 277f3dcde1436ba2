//! The fitted detector: transport efforts, their KDE calibration and a score
//! regressor that generalizes the calibrated score to unseen points.
//!
//! Fitting runs the whole pipeline once on the training set:
//!
//! 1. standardize features (optional);
//! 2. build the ground cost (engineered k-NN or rho-ball exclusion, or the
//!    Coulomb baseline) and solve the self-transport problem;
//! 3. turn the plan into per-sample efforts and calibrate them through the
//!    CDF of their Gaussian KDE;
//! 4. regress the calibrated scores on the features.
//!
//! Prediction only evaluates the regressor; no transport problem is solved.

use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::cost::{self, CapRule, CostMatrix};
use crate::dataset::{Dataset, Standardizer};
use crate::error::{Error, Result};
use crate::eval::rng::SeededRng;
use crate::regress::{Regressor, RegressorKind};
use crate::scoring::{self, EffortVector, KdeModel};
use crate::solver::{self, SolverConfig, TransportPlan};

pub const MIN_FIT_SAMPLES: usize = 10;

/// Ground cost used for the self-transport problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostChoice {
    #[default]
    Engineered,
    Coulomb,
}

impl fmt::Display for CostChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CostChoice::Engineered => "engineered",
            CostChoice::Coulomb => "coulomb",
        })
    }
}

impl FromStr for CostChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "engineered" => Ok(CostChoice::Engineered),
            "coulomb" => Ok(CostChoice::Coulomb),
            other => Err(Error::param(format!(
                "unknown cost `{other}` (expected engineered or coulomb)"
            ))),
        }
    }
}

/// Exclusion zone used by the engineered cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Neighborhood {
    Knn { k: usize },
    RhoBall { rho: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub neighborhood: Neighborhood,
    pub solver: SolverConfig,
    pub cap: CapRule,
    pub cost: CostChoice,
    pub regressor: RegressorKind,
    pub standardize: bool,
}

impl FitConfig {
    pub fn new(k: usize, epsilon: f64) -> Self {
        Self {
            neighborhood: Neighborhood::Knn { k },
            solver: SolverConfig::entropic(epsilon),
            cap: CapRule::RowMax,
            cost: CostChoice::Engineered,
            regressor: RegressorKind::default(),
            standardize: true,
        }
    }

    pub fn with_regressor(mut self, regressor: RegressorKind) -> Self {
        self.regressor = regressor;
        self
    }

    pub fn with_cost(mut self, cost: CostChoice) -> Self {
        self.cost = cost;
        self
    }

    pub fn with_cap(mut self, cap: CapRule) -> Self {
        self.cap = cap;
        self
    }

    pub fn k(&self) -> Option<usize> {
        match self.neighborhood {
            Neighborhood::Knn { k } => Some(k),
            Neighborhood::RhoBall { .. } => None,
        }
    }
}

/// Everything the transport stage produced on the training set.
#[derive(Debug, Clone)]
pub struct TrainingTrace {
    pub plan: TransportPlan,
    pub cost: CostMatrix,
    pub efforts: EffortVector,
    pub kde: KdeModel,
    pub scores: Vec<f64>,
}

/// Runs the transport and calibration stages on already-prepared features.
pub fn score_dataset(data: &Dataset, config: &FitConfig) -> Result<TrainingTrace> {
    let w = data.weights().view();
    let (plan, cost) = match config.cost {
        CostChoice::Engineered => {
            let base = cost::pairwise_cost(data, None)?;
            let graph = match config.neighborhood {
                Neighborhood::Knn { k } => cost::knn_neighborhood(&base, k)?,
                Neighborhood::RhoBall { rho } => cost::rho_ball_neighborhood(&base, rho)?,
            };
            let engineered = cost::engineer_cost(&base, &graph, config.cap)?;
            (solver::solve(&engineered, w, w, &config.solver)?, engineered)
        }
        CostChoice::Coulomb => {
            let c = cost::coulomb_cost(data)?;
            (solver::solve(&c, w, w, &config.solver)?, c)
        }
    };
    let (scores, mut efforts, kde) = scoring::score_training_samples(&plan, &cost, w)?;
    efforts.source_epsilon = config.solver.epsilon;
    efforts.source_k = config.k();
    Ok(TrainingTrace {
        plan,
        cost,
        efforts,
        kde,
        scores,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MrotModel {
    pub config: FitConfig,
    pub kde: KdeModel,
    pub training_efforts: EffortVector,
    pub training_scores: Vec<f64>,
    pub regressor: Regressor,
    /// Whether the transport solver met its tolerance.
    pub converged: bool,
    pub n_features: usize,
    pub column_names: Option<Vec<String>>,
}

impl MrotModel {
    pub fn fit(data: &Dataset, config: &FitConfig) -> Result<Self> {
        Ok(Self::fit_with_trace(data, config)?.0)
    }

    /// Like [`MrotModel::fit`], also returning the plan, cost and efforts.
    pub fn fit_with_trace(data: &Dataset, config: &FitConfig) -> Result<(Self, TrainingTrace)> {
        let n = data.n_samples();
        if n < MIN_FIT_SAMPLES {
            return Err(Error::param(format!(
                "fitting needs at least {MIN_FIT_SAMPLES} samples, got {n}"
            )));
        }
        if let Neighborhood::Knn { k } = config.neighborhood {
            if config.cost == CostChoice::Engineered && (k == 0 || k >= n) {
                return Err(Error::param(format!(
                    "neighbor count k must satisfy 1 <= k < n (k = {k}, n = {n})"
                )));
            }
        }
        config.solver.validate()?;

        let standardizer = if config.standardize {
            Standardizer::fit(data.features())
        } else {
            Standardizer::identity(data.n_features())
        };
        let prepared = Dataset::with_weights(
            standardizer.transform(data.features())?,
            data.weights().clone(),
        )?;
        let trace = score_dataset(&prepared, config)?;
        if !trace.plan.converged {
            log::warn!("transport solver did not converge; model is flagged");
        }
        let regressor = Regressor::fit(config.regressor, standardizer, data.features(), &trace.scores)?;
        let model = Self {
            config: config.clone(),
            kde: trace.kde.clone(),
            training_efforts: trace.efforts.clone(),
            training_scores: trace.scores.clone(),
            regressor,
            converged: trace.plan.converged,
            n_features: data.n_features(),
            column_names: None,
        };
        Ok((model, trace))
    }

    pub fn with_column_names(mut self, names: Vec<String>) -> Self {
        self.column_names = Some(names);
        self
    }

    /// Scores in `[0, 1]` for each row of `x`.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: x.ncols(),
            });
        }
        self.regressor.predict(x)
    }

    /// Calibrated score of a raw transport effort under the training KDE.
    pub fn effort_score(&self, effort: f64) -> f64 {
        self.kde.cdf(effort)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub best: RegressorKind,
    /// Mean validation MSE per candidate, `None` when the candidate failed.
    pub mse: Vec<(RegressorKind, Option<f64>)>,
}

/// Picks the regressor with the lowest mean k-fold validation MSE.
///
/// Folds come from a seeded shuffle. Ties (within `1e-15`) go to the earlier
/// variant of [`RegressorKind`]; failing candidates are skipped with a
/// warning.
pub fn cross_validate_regressor(
    x: ArrayView2<'_, f64>,
    scores: &[f64],
    candidates: &[RegressorKind],
    folds: usize,
    seed: u64,
) -> Result<CvReport> {
    let n = x.nrows();
    if scores.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: scores.len(),
        });
    }
    if folds < 2 || n < folds {
        return Err(Error::param(format!(
            "cross-validation needs 2 <= folds <= n (folds = {folds}, n = {n})"
        )));
    }
    if candidates.is_empty() {
        return Err(Error::param("no candidate regressors"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    SeededRng::new(seed).shuffle(&mut order);
    let fold_of: Vec<usize> = {
        let mut f = vec![0; n];
        for (pos, &i) in order.iter().enumerate() {
            f[i] = pos % folds;
        }
        f
    };

    let mut mse = Vec::with_capacity(candidates.len());
    for kind in candidates {
        let mut total = 0.0;
        let mut failed = None;
        for fold in 0..folds {
            let train: Vec<usize> = (0..n).filter(|&i| fold_of[i] != fold).collect();
            let valid: Vec<usize> = (0..n).filter(|&i| fold_of[i] == fold).collect();
            let xt = x.select(ndarray::Axis(0), &train);
            let yt: Vec<f64> = train.iter().map(|&i| scores[i]).collect();
            let st = Standardizer::fit(xt.view());
            match Regressor::fit(*kind, st, xt.view(), &yt) {
                Ok(r) => {
                    let xv = x.select(ndarray::Axis(0), &valid);
                    let pred = r.predict(xv.view())?;
                    total += pred
                        .iter()
                        .zip(&valid)
                        .map(|(p, &i)| (p - scores[i]) * (p - scores[i]))
                        .sum::<f64>();
                }
                Err(e) => {
                    failed = Some(e);
                    break;
                }
            }
        }
        match failed {
            Some(e) => {
                log::warn!("regressor {kind} excluded from selection: {e}");
                mse.push((*kind, None));
            }
            None => mse.push((*kind, Some(total / n as f64))),
        }
    }

    let best = mse
        .iter()
        .filter_map(|(k, m)| m.map(|m| (*k, m)))
        .fold(None::<(RegressorKind, f64)>, |acc, (k, m)| match acc {
            None => Some((k, m)),
            Some((bk, bm)) => {
                if m < bm - 1e-15 || ((m - bm).abs() <= 1e-15 && k.order() < bk.order()) {
                    Some((k, m))
                } else {
                    Some((bk, bm))
                }
            }
        })
        .map(|(k, _)| k)
        .ok_or_else(|| Error::Regression {
            stage: "cross_validation",
            reason: "every candidate regressor failed to train".into(),
        })?;
    Ok(CvReport { best, mse })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn blob(n: usize) -> Dataset {
        let mut r = SeededRng::new(11);
        let v: Vec<f64> = (0..2 * n).map(|_| r.standard_normal()).collect();
        Dataset::new(Array2::from_shape_vec((n, 2), v).unwrap()).unwrap()
    }

    #[test]
    fn rejects_small_or_saturated_inputs() {
        let ds = blob(9);
        assert!(MrotModel::fit(&ds, &FitConfig::new(2, 0.1)).is_err());
        let ds = blob(12);
        let err = MrotModel::fit(&ds, &FitConfig::new(12, 0.1)).unwrap_err();
        assert!(err.to_string().contains("k < n"));
    }

    #[test]
    fn identical_points_give_constant_scores() {
        let ds = Dataset::new(Array2::from_elem((10, 2), 1.5)).unwrap();
        let model = MrotModel::fit(&ds, &FitConfig::new(3, 0.1)).unwrap();
        let s0 = model.training_scores[0];
        assert!(model.training_scores.iter().all(|s| (s - s0).abs() < 1e-12));
        let pred = model.predict(array![[1.5, 1.5], [10.0, -4.0]].view()).unwrap();
        assert!(pred.iter().all(|p| (p - s0).abs() < 1e-9), "{pred:?} vs {s0}");
    }

    #[test]
    fn predict_checks_schema() {
        let model = MrotModel::fit(&blob(30), &FitConfig::new(3, 0.5)).unwrap();
        assert!(matches!(
            model.predict(array![[1.0, 2.0, 3.0]].view()),
            Err(Error::DimensionMismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn single_candidate_wins() {
        let ds = blob(20);
        let y: Vec<f64> = (0..20).map(|i| i as f64 / 20.0).collect();
        let r = cross_validate_regressor(ds.features(), &y, &[RegressorKind::gbt()], 4, 0).unwrap();
        assert_eq!(r.best, RegressorKind::gbt());
        assert_eq!(r.mse.len(), 1);
    }

    #[test]
    fn constant_target_tie_goes_to_first_variant() {
        let ds = blob(20);
        let y = vec![0.25; 20];
        let cands = [RegressorKind::gbt(), RegressorKind::kernel_ridge(), RegressorKind::knn()];
        let r = cross_validate_regressor(ds.features(), &y, &cands, 5, 3).unwrap();
        assert!(r.mse.iter().all(|(_, m)| m.unwrap() < 1e-20));
        assert_eq!(r.best, RegressorKind::knn());
    }

    #[test]
    fn failing_candidates_are_skipped() {
        let ds = blob(20);
        let y: Vec<f64> = (0..20).map(|i| (i % 3) as f64 / 3.0).collect();
        let bad = RegressorKind::KnnRegressor { k: 100 };
        let r = cross_validate_regressor(ds.features(), &y, &[bad, RegressorKind::gbt()], 4, 0).unwrap();
        assert_eq!(r.best, RegressorKind::gbt());
        assert_eq!(r.mse[0].1, None);
        assert!(cross_validate_regressor(ds.features(), &y, &[bad], 4, 0).is_err());
    }

    #[test]
    fn cv_argument_checks() {
        let ds = blob(10);
        let y = vec![0.0; 10];
        assert!(cross_validate_regressor(ds.features(), &y, &[RegressorKind::knn()], 1, 0).is_err());
        assert!(cross_validate_regressor(ds.features(), &y, &[RegressorKind::knn()], 11, 0).is_err());
        assert!(cross_validate_regressor(ds.features(), &y[..5], &[RegressorKind::knn()], 2, 0).is_err());
    }
}
