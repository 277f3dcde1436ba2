//! Discrete optimal transport solvers and the mass-repulsive composite solve.

mod network_simplex;
mod sinkhorn;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::cost::{self, CapRule, CostMatrix};
use crate::dataset::{check_probability_vector, Dataset};
use crate::error::{Error, Result};

/// Largest `n * m` the exact solver accepts.
pub const EXACT_CELL_LIMIT: usize = 4_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Entropic penalty; `0` selects the exact solver.
    pub epsilon: f64,
    pub max_iters: usize,
    /// Stopping threshold on the L-infinity marginal violation.
    pub tol: f64,
    /// `None` enables log-domain stabilization automatically when
    /// `epsilon < 1e-2 * median(C)`, or when plain scaling overflows.
    pub log_domain: Option<bool>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            max_iters: 10_000,
            tol: 1e-9,
            log_domain: None,
        }
    }
}

impl SolverConfig {
    pub fn exact() -> Self {
        Self {
            epsilon: 0.0,
            ..Self::default()
        }
    }

    pub fn entropic(epsilon: f64) -> Self {
        Self {
            epsilon,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::param(format!(
                "epsilon must be finite and nonnegative, got {}",
                self.epsilon
            )));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::param(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::param("max_iters must be at least 1"));
        }
        Ok(())
    }
}

/// A coupling between two weight vectors and its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub coupling: Array2<f64>,
    /// `<coupling, C>_F`.
    pub objective: f64,
    /// `epsilon * sum gamma (log gamma - 1)`; zero for exact plans.
    pub entropy_term: f64,
    pub converged: bool,
    /// Sinkhorn iterations or simplex pivots.
    pub iterations: usize,
    /// Largest absolute row or column marginal violation.
    pub marginal_error: f64,
}

impl TransportPlan {
    fn from_coupling(
        coupling: Array2<f64>,
        cost: &CostMatrix,
        p: ArrayView1<'_, f64>,
        q: ArrayView1<'_, f64>,
        epsilon: f64,
        converged: bool,
        iterations: usize,
    ) -> Self {
        let objective = frobenius(&coupling, cost);
        let entropy_term = if epsilon > 0.0 {
            epsilon
                * coupling
                    .iter()
                    .filter(|g| **g > 0.0)
                    .map(|g| g * (g.ln() - 1.0))
                    .sum::<f64>()
        } else {
            0.0
        };
        let marginal_error = marginal_error(&coupling, p, q);
        Self {
            coupling,
            objective,
            entropy_term,
            converged,
            iterations,
            marginal_error,
        }
    }

    pub fn row_sums(&self) -> Array1<f64> {
        self.coupling.sum_axis(Axis(1))
    }

    pub fn col_sums(&self) -> Array1<f64> {
        self.coupling.sum_axis(Axis(0))
    }
}

pub(crate) fn frobenius(coupling: &Array2<f64>, cost: &CostMatrix) -> f64 {
    coupling
        .iter()
        .zip(cost.values().iter())
        .map(|(g, c)| g * c)
        .sum()
}

fn marginal_error(coupling: &Array2<f64>, p: ArrayView1<'_, f64>, q: ArrayView1<'_, f64>) -> f64 {
    let rows = coupling.sum_axis(Axis(1));
    let cols = coupling.sum_axis(Axis(0));
    let r = rows.iter().zip(p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let c = cols.iter().zip(q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    r.max(c)
}

fn check_marginals(cost: &CostMatrix, p: ArrayView1<'_, f64>, q: ArrayView1<'_, f64>) -> Result<()> {
    let (n, m) = cost.shape();
    if p.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p.len(),
        });
    }
    if q.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: q.len(),
        });
    }
    check_probability_vector(&p.to_vec())?;
    check_probability_vector(&q.to_vec())?;
    Ok(())
}

/// Entropic OT by Sinkhorn scaling.
///
/// Non-convergence is not an error: the last iterate is returned with
/// `converged = false`.
pub fn sinkhorn(
    cost: &CostMatrix,
    p: ArrayView1<'_, f64>,
    q: ArrayView1<'_, f64>,
    config: &SolverConfig,
) -> Result<TransportPlan> {
    config.validate()?;
    if config.epsilon <= 0.0 {
        return Err(Error::param("sinkhorn needs epsilon > 0"));
    }
    check_marginals(cost, p, q)?;
    let eps = config.epsilon;
    let run_log = || {
        sinkhorn::log_stabilized(cost.values(), p, q, eps, config.max_iters, config.tol)
    };
    let out = match config.log_domain {
        Some(true) => run_log()?,
        Some(false) => sinkhorn::plain(cost.values(), p, q, eps, config.max_iters, config.tol)?,
        None if eps < 1e-2 * cost.median() => run_log()?,
        None => match sinkhorn::plain(cost.values(), p, q, eps, config.max_iters, config.tol) {
            Err(Error::NumericalOverflow { iteration }) => {
                log::debug!("plain sinkhorn overflowed at iteration {iteration}; switching to log domain");
                run_log()?
            }
            other => other?,
        },
    };
    if !out.converged {
        log::warn!(
            "sinkhorn did not reach tol {:e} within {} iterations",
            config.tol,
            config.max_iters
        );
    }
    Ok(TransportPlan::from_coupling(
        out.coupling,
        cost,
        p,
        q,
        eps,
        out.converged,
        out.iterations,
    ))
}

/// Exact OT (the Kantorovich linear program) by network simplex.
///
/// The returned plan is a basic solution with at most `n + m - 1` nonzeros.
pub fn exact_ot(
    cost: &CostMatrix,
    p: ArrayView1<'_, f64>,
    q: ArrayView1<'_, f64>,
) -> Result<TransportPlan> {
    check_marginals(cost, p, q)?;
    let (rows, cols) = cost.shape();
    if rows.saturating_mul(cols) > EXACT_CELL_LIMIT {
        return Err(Error::TooLarge {
            rows,
            cols,
            limit: EXACT_CELL_LIMIT,
        });
    }
    let out = network_simplex::solve(cost.values(), p, q)?;
    if !out.optimal {
        log::warn!("network simplex stopped at the pivot limit before optimality");
    }
    Ok(TransportPlan::from_coupling(
        out.coupling,
        cost,
        p,
        q,
        0.0,
        out.optimal,
        out.pivots,
    ))
}

/// Routes to [`exact_ot`] when `epsilon == 0`, otherwise to [`sinkhorn`].
pub fn solve(
    cost: &CostMatrix,
    p: ArrayView1<'_, f64>,
    q: ArrayView1<'_, f64>,
    config: &SolverConfig,
) -> Result<TransportPlan> {
    config.validate()?;
    if config.epsilon == 0.0 {
        exact_ot(cost, p, q)
    } else {
        sinkhorn(cost, p, q, config)
    }
}

/// Transports the dataset onto itself under the engineered cost built from
/// its `k`-nearest-neighbor exclusion zones.
///
/// Returns the plan together with the engineered cost it was solved on.
pub fn solve_mrot(
    data: &Dataset,
    k: usize,
    cap: CapRule,
    config: &SolverConfig,
) -> Result<(TransportPlan, CostMatrix)> {
    let base = cost::pairwise_cost(data, None)?;
    let graph = cost::knn_neighborhood(&base, k)?;
    let engineered = cost::engineer_cost(&base, &graph, cap)?;
    let w = data.weights().view();
    let plan = solve(&engineered, w, w, config)?;
    Ok((plan, engineered))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostKind;
    use ndarray::array;

    fn cm(v: Array2<f64>) -> CostMatrix {
        CostMatrix::from_values(v, CostKind::Base).unwrap()
    }

    #[test]
    fn constant_cost_gives_product_coupling() {
        let c = cm(Array2::from_elem((3, 3), 2.0));
        let p = Array1::from_elem(3, 1.0 / 3.0);
        for log_domain in [Some(false), Some(true)] {
            let cfg = SolverConfig {
                epsilon: 0.5,
                log_domain,
                ..Default::default()
            };
            let plan = sinkhorn(&c, p.view(), p.view(), &cfg).unwrap();
            assert!(plan.converged);
            for g in plan.coupling.iter() {
                assert!((g - 1.0 / 9.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exact_two_by_two() {
        let p = array![0.5, 0.5];
        let plan = exact_ot(&cm(array![[0.0, 1.0], [1.0, 0.0]]), p.view(), p.view()).unwrap();
        assert_eq!(plan.coupling, array![[0.5, 0.0], [0.0, 0.5]]);
        assert_eq!(plan.objective, 0.0);
        let plan = exact_ot(&cm(array![[1.0, 1.0], [1.0, 1.0]]), p.view(), p.view()).unwrap();
        assert!((plan.objective - 1.0).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        let c = cm(Array2::ones((2, 2)));
        let p = array![0.5, 0.5];
        let bad = SolverConfig {
            tol: 0.0,
            ..Default::default()
        };
        assert!(solve(&c, p.view(), p.view(), &bad).is_err());
        assert!(sinkhorn(&c, p.view(), p.view(), &SolverConfig::exact()).is_err());
        let q = array![0.5, 0.4];
        assert!(matches!(
            solve(&c, p.view(), q.view(), &SolverConfig::default()),
            Err(Error::InvalidWeights(_))
        ));
    }

    #[test]
    fn exact_guard_rejects_huge_problems() {
        let c = cm(Array2::zeros((2001, 2000)));
        let p = Array1::from_elem(2001, 1.0 / 2001.0);
        let q = Array1::from_elem(2000, 1.0 / 2000.0);
        assert!(matches!(
            exact_ot(&c, p.view(), q.view()),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn mrot_on_three_collinear_points() {
        // engineered rows: [4,4,4], [1,1,1], [4,4,4]; every plan costs 3
        let ds = Dataset::new(array![[0.0], [1.0], [2.0]]).unwrap();
        let (plan, eng) = solve_mrot(&ds, 1, CapRule::RowMax, &SolverConfig::exact()).unwrap();
        assert_eq!(eng.kind(), CostKind::Engineered);
        assert!((plan.objective - 3.0).abs() < 1e-12);
        assert!(plan.marginal_error < 1e-15);
    }

    #[test]
    fn mrot_saturated_pair() {
        let ds = Dataset::new(array![[0.0, 0.0], [1.0, 1.0]]).unwrap();
        let (plan, _) = solve_mrot(&ds, 1, CapRule::RowMax, &SolverConfig::default()).unwrap();
        assert!(plan.converged);
        assert!(plan.marginal_error < 1e-9);
        assert!((plan.objective - 2.0).abs() < 1e-9);
    }
}
