//! Ground costs, exclusion neighborhoods and the mass-repulsive engineered cost.
//!
//! The base cost is the squared Euclidean distance. Engineering replaces every
//! entry inside a sample's exclusion zone (its neighborhood, self included)
//! with a cap, so a sample can no longer keep its own mass cheaply and must
//! ship it just outside the zone.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use crate::dataset::{check_finite, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    Base,
    Engineered,
    Coulomb,
}

/// A dense nonnegative `n x m` cost matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    values: Array2<f64>,
    kind: CostKind,
}

impl CostMatrix {
    /// Wraps raw values, checking they are finite and nonnegative.
    pub fn from_values(values: Array2<f64>, kind: CostKind) -> Result<Self> {
        check_finite(values.view())?;
        if let Some(((row, col), _)) = values.indexed_iter().find(|(_, v)| **v < 0.0) {
            return Err(Error::param(format!("negative cost at ({row}, {col})")));
        }
        Ok(Self { values, kind })
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn kind(&self) -> CostKind {
        self.kind
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.dim()
    }

    pub fn is_square(&self) -> bool {
        self.values.nrows() == self.values.ncols()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.mean().unwrap_or(0.0)
    }

    pub fn median(&self) -> f64 {
        let mut v: Vec<f64> = self.values.iter().copied().collect();
        if v.is_empty() {
            return 0.0;
        }
        let mid = v.len() / 2;
        let (_, m, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
        *m
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    fn require_square(&self) -> Result<usize> {
        let (rows, cols) = self.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        Ok(rows)
    }
}

/// Squared Euclidean distances between rows of `a` and rows of `b`.
pub fn squared_distances(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            got: b.ncols(),
        });
    }
    check_finite(a)?;
    check_finite(b)?;
    let mut out = Array2::zeros((a.nrows(), b.nrows()));
    Zip::from(out.rows_mut()).and(a.rows()).for_each(|mut row, x| {
        for (o, y) in row.iter_mut().zip(b.rows()) {
            *o = x.iter().zip(y.iter()).map(|(p, q)| (p - q) * (p - q)).sum();
        }
    });
    Ok(out)
}

/// Base cost `C_ij = |x_i - y_j|^2`; the self-cost when `other` is `None`.
pub fn pairwise_cost(data: &Dataset, other: Option<&Dataset>) -> Result<CostMatrix> {
    let a = data.features();
    let values = match other {
        Some(o) => squared_distances(a, o.features())?,
        None => {
            let mut c = squared_distances(a, a)?;
            // exact zeros on the diagonal regardless of rounding
            c.diag_mut().fill(0.0);
            c
        }
    };
    Ok(CostMatrix {
        values,
        kind: CostKind::Base,
    })
}

/// Regularized Coulomb cost `C_ij = 1 / (1 + |x_i - x_j|)`.
pub fn coulomb_cost(data: &Dataset) -> Result<CostMatrix> {
    let mut values = squared_distances(data.features(), data.features())?;
    values.mapv_inplace(|d2| 1.0 / (1.0 + d2.sqrt()));
    values.diag_mut().fill(1.0);
    Ok(CostMatrix {
        values,
        kind: CostKind::Coulomb,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborhoodMode {
    Knn,
    RhoBall,
}

/// Exclusion zones: for each sample, the indices it may not cheaply send mass to.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodGraph {
    neighbor_sets: Vec<Vec<usize>>,
    mode: NeighborhoodMode,
    k: usize,
    rho: Option<f64>,
}

impl NeighborhoodGraph {
    /// Neighbor indices of sample `i`; `i` itself comes first, then by
    /// increasing cost (ascending index on ties).
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbor_sets[i]
    }

    pub fn len(&self) -> usize {
        self.neighbor_sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbor_sets.is_empty()
    }

    pub fn mode(&self) -> NeighborhoodMode {
        self.mode
    }

    /// Neighbor count in knn mode; largest zone size minus one in rho-ball mode.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rho(&self) -> Option<f64> {
        self.rho
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.neighbor_sets[i].contains(&j)
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> {
        self.neighbor_sets.iter().map(Vec::as_slice)
    }
}

/// `N(x_i) = {i} ∪ {the k cheapest other columns of row i}`, ties by index.
pub fn knn_neighborhood(cost: &CostMatrix, k: usize) -> Result<NeighborhoodGraph> {
    let n = cost.require_square()?;
    if k == 0 || k >= n {
        return Err(Error::param(format!(
            "neighbor count k must satisfy 1 <= k < n (k = {k}, n = {n})"
        )));
    }
    let values = cost.values();
    let neighbor_sets = (0..n)
        .map(|i| {
            let row = values.row(i);
            let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            let by_cost = |a: &usize, b: &usize| row[*a].total_cmp(&row[*b]).then(a.cmp(b));
            // partial selection then sort of the k survivors
            others.select_nth_unstable_by(k - 1, by_cost);
            others.truncate(k);
            others.sort_by(by_cost);
            let mut set = Vec::with_capacity(k + 1);
            set.push(i);
            set.extend(others);
            set
        })
        .collect();
    Ok(NeighborhoodGraph {
        neighbor_sets,
        mode: NeighborhoodMode::Knn,
        k,
        rho: None,
    })
}

/// `N(x_i) = {j : C_ij <= rho^2}`; always contains `i` on a base self-cost.
pub fn rho_ball_neighborhood(cost: &CostMatrix, rho: f64) -> Result<NeighborhoodGraph> {
    let n = cost.require_square()?;
    if rho.is_nan() || rho < 0.0 {
        return Err(Error::param(format!("ball radius must be nonnegative, got {rho}")));
    }
    let radius2 = rho * rho;
    let values = cost.values();
    let neighbor_sets: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let row = values.row(i);
            let mut set = vec![i];
            let mut inside: Vec<usize> = (0..n).filter(|&j| j != i && row[j] <= radius2).collect();
            inside.sort_by(|a, b| row[*a].total_cmp(&row[*b]).then(a.cmp(b)));
            set.extend(inside);
            set
        })
        .collect();
    let k = neighbor_sets.iter().map(|s| s.len() - 1).max().unwrap_or(0);
    Ok(NeighborhoodGraph {
        neighbor_sets,
        mode: NeighborhoodMode::RhoBall,
        k,
        rho: Some(rho),
    })
}

/// Value placed on neighborhood entries of the engineered cost.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "value")]
pub enum CapRule {
    /// `L_i = max_l C_il`, the maximum of the sample's own row.
    #[default]
    RowMax,
    /// `L = max_ij C_ij`.
    GlobalMax,
    Fixed(f64),
}

impl fmt::Display for CapRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CapRule::RowMax => f.write_str("row-max"),
            CapRule::GlobalMax => f.write_str("global-max"),
            CapRule::Fixed(l) => write!(f, "fixed:{l}"),
        }
    }
}

impl FromStr for CapRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "row-max" | "row_max" => Ok(CapRule::RowMax),
            "global-max" | "global_max" => Ok(CapRule::GlobalMax),
            other => {
                let value = other
                    .strip_prefix("fixed:")
                    .and_then(|v| v.parse::<f64>().ok())
                    .filter(|v| v.is_finite() && *v >= 0.0)
                    .ok_or_else(|| {
                        Error::param(format!(
                            "unknown cap rule `{other}` (expected row-max, global-max or fixed:L)"
                        ))
                    })?;
                Ok(CapRule::Fixed(value))
            }
        }
    }
}

/// Replaces `C_ij` by the cap `L_i` for every `j ∈ N(x_i)`.
///
/// Entries outside the neighborhoods are copied bit-for-bit. The result is
/// generally asymmetric. A fixed cap smaller than some neighborhood cost
/// weakens the repulsion; it is logged and still applied.
pub fn engineer_cost(
    cost: &CostMatrix,
    graph: &NeighborhoodGraph,
    cap: CapRule,
) -> Result<CostMatrix> {
    let n = cost.require_square()?;
    if graph.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: graph.len(),
        });
    }
    let global_max = cost.max();
    let mut values = cost.values.clone();
    for (i, mut row) in values.rows_mut().into_iter().enumerate() {
        let cap_value = match cap {
            CapRule::RowMax => row.iter().copied().fold(0.0, f64::max),
            CapRule::GlobalMax => global_max,
            CapRule::Fixed(l) => {
                let zone_max = graph.neighbors(i).iter().map(|&j| row[j]).fold(0.0, f64::max);
                if l < zone_max {
                    log::warn!(
                        "fixed cap {l} is below the neighborhood cost {zone_max} of row {i}; \
                         repulsion is weakened"
                    );
                }
                l
            }
        };
        for &j in graph.neighbors(i) {
            row[j] = cap_value;
        }
    }
    Ok(CostMatrix {
        values,
        kind: CostKind::Engineered,
    })
}
