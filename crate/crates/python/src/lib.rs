//! Python bindings for the `mrot` anomaly detector.
//!
//! Matrices cross the boundary as lists of rows of floats.

use std::path::PathBuf;

use ::mrot::cost::{CapRule, CostKind, CostMatrix};
use ::mrot::eval;
use ::mrot::io::{self, WindowConfig};
use ::mrot::model::{CostChoice, FitConfig, MrotModel, Neighborhood};
use ::mrot::regress::RegressorKind;
use ::mrot::solver::{self, SolverConfig, TransportPlan};
use ::mrot::Dataset;
use ndarray::{Array1, Array2};
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(err: ::mrot::Error) -> PyErr {
    use ::mrot::Error as E;
    match err {
        E::Io { .. } => PyIOError::new_err(err.to_string()),
        E::NumericalOverflow { .. } | E::Infeasible { .. } | E::Regression { .. } => {
            PyRuntimeError::new_err(err.to_string())
        }
        _ => PyValueError::new_err(err.to_string()),
    }
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Array2<f64>> {
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    if let Some(i) = rows.iter().position(|r| r.len() != d) {
        return Err(PyValueError::new_err(format!(
            "row {i} has {} entries, expected {d}",
            rows[i].len()
        )));
    }
    Ok(Array2::from_shape_vec((n, d), rows.into_iter().flatten().collect()).expect("rectangular"))
}

fn rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

/// A fitted detector. Build one with `Model.fit(x, k, epsilon, ...)`.
#[pyclass(module = "mrot", frozen)]
struct Model {
    inner: MrotModel,
}

#[pymethods]
impl Model {
    #[staticmethod]
    #[pyo3(signature = (x, k=None, epsilon=0.1, *, rho=None, cost="engineered", cap="row-max",
                        regressor="kernel-ridge", standardize=true, max_iters=10_000, tol=1e-9))]
    #[allow(clippy::too_many_arguments)]
    fn fit(
        x: Vec<Vec<f64>>,
        k: Option<usize>,
        epsilon: f64,
        rho: Option<f64>,
        cost: &str,
        cap: &str,
        regressor: &str,
        standardize: bool,
        max_iters: usize,
        tol: f64,
    ) -> PyResult<Self> {
        let neighborhood = match (k, rho) {
            (Some(k), None) => Neighborhood::Knn { k },
            (None, Some(rho)) => Neighborhood::RhoBall { rho },
            _ => return Err(PyValueError::new_err("pass exactly one of k or rho")),
        };
        let config = FitConfig {
            neighborhood,
            solver: SolverConfig {
                epsilon,
                max_iters,
                tol,
                log_domain: None,
            },
            cap: cap.parse::<CapRule>().map_err(to_py)?,
            cost: cost.parse::<CostChoice>().map_err(to_py)?,
            regressor: regressor.parse::<RegressorKind>().map_err(to_py)?,
            standardize,
        };
        let data = Dataset::new(matrix(x)?).map_err(to_py)?;
        let inner = MrotModel::fit(&data, &config).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Scores in [0, 1], one per row.
    fn predict(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        self.inner.predict(matrix(x)?.view()).map_err(to_py)
    }

    /// Calibrated scores of the training samples.
    #[getter]
    fn training_scores(&self) -> Vec<f64> {
        self.inner.training_scores.clone()
    }

    /// Raw transport efforts of the training samples.
    #[getter]
    fn training_efforts(&self) -> Vec<f64> {
        self.inner.training_efforts.efforts.clone()
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn n_features(&self) -> usize {
        self.inner.n_features
    }

    #[getter]
    fn regressor(&self) -> String {
        self.inner.config.regressor.to_string()
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        io::save_model(&self.inner, &path).map_err(to_py)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: io::load_model(&path).map_err(to_py)?,
        })
    }

    fn __repr__(&self) -> String {
        let c = &self.inner.config;
        format!(
            "Model(n_features={}, epsilon={}, cost={}, regressor={}, converged={})",
            self.inner.n_features, c.solver.epsilon, c.cost, c.regressor, self.inner.converged
        )
    }
}

/// Result of a transport solve.
#[pyclass(module = "mrot", frozen, get_all)]
struct Plan {
    coupling: Vec<Vec<f64>>,
    objective: f64,
    converged: bool,
    iterations: usize,
    marginal_error: f64,
}

impl From<TransportPlan> for Plan {
    fn from(p: TransportPlan) -> Self {
        Self {
            coupling: rows(&p.coupling),
            objective: p.objective,
            converged: p.converged,
            iterations: p.iterations,
            marginal_error: p.marginal_error,
        }
    }
}

fn problem(cost: Vec<Vec<f64>>, p: Vec<f64>, q: Vec<f64>) -> PyResult<(CostMatrix, Array1<f64>, Array1<f64>)> {
    let c = CostMatrix::from_values(matrix(cost)?, CostKind::Base).map_err(to_py)?;
    Ok((c, Array1::from(p), Array1::from(q)))
}

/// Entropic OT by Sinkhorn scaling.
#[pyfunction]
#[pyo3(signature = (cost, p, q, epsilon, max_iters=10_000, tol=1e-9))]
fn sinkhorn(cost: Vec<Vec<f64>>, p: Vec<f64>, q: Vec<f64>, epsilon: f64, max_iters: usize, tol: f64) -> PyResult<Plan> {
    let (c, p, q) = problem(cost, p, q)?;
    let cfg = SolverConfig {
        epsilon,
        max_iters,
        tol,
        log_domain: None,
    };
    solver::sinkhorn(&c, p.view(), q.view(), &cfg).map(Plan::from).map_err(to_py)
}

/// Exact OT by network simplex.
#[pyfunction]
fn exact_ot(cost: Vec<Vec<f64>>, p: Vec<f64>, q: Vec<f64>) -> PyResult<Plan> {
    let (c, p, q) = problem(cost, p, q)?;
    solver::exact_ot(&c, p.view(), q.view()).map(Plan::from).map_err(to_py)
}

#[pyfunction]
fn auc_roc(scores: Vec<f64>, labels: Vec<bool>) -> PyResult<f64> {
    eval::auc_roc(&scores, &labels).map_err(to_py)
}

#[pyfunction]
fn auc_pr(scores: Vec<f64>, labels: Vec<bool>) -> PyResult<f64> {
    eval::auc_pr(&scores, &labels).map_err(to_py)
}

/// Two Gaussian clusters; returns `(rows, labels)`.
#[pyfunction]
#[pyo3(signature = (n_normal=500, n_anom=25, seed=0))]
fn synth_toy(n_normal: usize, n_anom: usize, seed: u64) -> PyResult<(Vec<Vec<f64>>, Vec<bool>)> {
    let d = eval::synth_toy(n_normal, n_anom, seed).map_err(to_py)?;
    Ok((rows(&d.dataset.features().to_owned()), d.labels))
}

/// Per-window mean and sample std of every column.
#[pyfunction]
#[pyo3(signature = (series, window_len, stride=None))]
fn window_features(series: Vec<Vec<f64>>, window_len: usize, stride: Option<usize>) -> PyResult<Vec<Vec<f64>>> {
    let cfg = WindowConfig {
        window_len,
        stride: stride.unwrap_or(WindowConfig::new(window_len).stride),
    };
    let f = io::window_features(matrix(series)?.view(), cfg).map_err(to_py)?;
    Ok(rows(&f))
}

#[pymodule]
#[pyo3(name = "mrot")]
fn mrot_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Model>()?;
    m.add_class::<Plan>()?;
    m.add_function(wrap_pyfunction!(sinkhorn, m)?)?;
    m.add_function(wrap_pyfunction!(exact_ot, m)?)?;
    m.add_function(wrap_pyfunction!(auc_roc, m)?)?;
    m.add_function(wrap_pyfunction!(auc_pr, m)?)?;
    m.add_function(wrap_pyfunction!(synth_toy, m)?)?;
    m.add_function(wrap_pyfunction!(window_features, m)?)?;
    Ok(())
}
