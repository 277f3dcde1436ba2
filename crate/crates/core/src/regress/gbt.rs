//! Least-squares gradient boosting over depth-capped CART trees.
//!
//! Every feature and every midpoint threshold is scanned in a fixed order and
//! only strict improvements replace the incumbent split, so training is fully
//! deterministic.

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_one(&self, x: ArrayView1<'_, f64>) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub base: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

impl GbtModel {
    pub fn fit(
        x: ArrayView2<'_, f64>,
        y: &[f64],
        n_trees: usize,
        depth: usize,
        learning_rate: f64,
    ) -> Result<Self> {
        if n_trees == 0 || depth == 0 {
            return Err(Error::param("gradient boosting needs n_trees >= 1 and depth >= 1"));
        }
        if !(learning_rate > 0.0 && learning_rate <= 1.0) {
            return Err(Error::param(format!(
                "learning rate must lie in (0, 1], got {learning_rate}"
            )));
        }
        let n = x.nrows();
        let base = y.iter().sum::<f64>() / n as f64;
        let mut fitted = vec![base; n];
        let mut trees = Vec::with_capacity(n_trees);
        let mut residual = vec![0.0; n];
        for _ in 0..n_trees {
            for i in 0..n {
                residual[i] = y[i] - fitted[i];
            }
            let mut nodes = Vec::new();
            let all: Vec<usize> = (0..n).collect();
            grow(x, &residual, all, depth, &mut nodes);
            let tree = Tree { nodes };
            for (i, f) in fitted.iter_mut().enumerate() {
                *f += learning_rate * tree.predict_one(x.row(i));
            }
            trees.push(tree);
        }
        Ok(Self {
            base,
            learning_rate,
            trees,
        })
    }

    pub fn predict_one(&self, x: ArrayView1<'_, f64>) -> f64 {
        self.base
            + self
                .trees
                .iter()
                .map(|t| self.learning_rate * t.predict_one(x))
                .sum::<f64>()
    }
}

fn mean_of(idx: &[usize], r: &[f64]) -> f64 {
    idx.iter().map(|&i| r[i]).sum::<f64>() / idx.len() as f64
}

/// Appends the subtree for `idx` to `nodes` and returns its index.
fn grow(
    x: ArrayView2<'_, f64>,
    r: &[f64],
    idx: Vec<usize>,
    depth: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let at = nodes.len();
    nodes.push(Node::Leaf {
        value: mean_of(&idx, r),
    });
    if depth == 0 || idx.len() < 2 {
        return at;
    }
    let Some((feature, threshold)) = best_split(x, r, &idx) else {
        return at;
    };
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
        idx.iter().partition(|&&i| x[[i, feature]] <= threshold);
    let left = grow(x, r, left_idx, depth - 1, nodes);
    let right = grow(x, r, right_idx, depth - 1, nodes);
    nodes[at] = Node::Split {
        feature,
        threshold,
        left,
        right,
    };
    at
}

/// Split maximizing the reduction in squared error.
fn best_split(x: ArrayView2<'_, f64>, r: &[f64], idx: &[usize]) -> Option<(usize, f64)> {
    let n = idx.len() as f64;
    let total: f64 = idx.iter().map(|&i| r[i]).sum();
    let parent_score = total * total / n;
    let mut best: Option<(f64, usize, f64)> = None;
    let mut sorted = idx.to_vec();
    for feature in 0..x.ncols() {
        sorted.sort_by(|a, b| x[[*a, feature]].total_cmp(&x[[*b, feature]]).then(a.cmp(b)));
        let mut left_sum = 0.0;
        for pos in 0..sorted.len() - 1 {
            left_sum += r[sorted[pos]];
            let here = x[[sorted[pos], feature]];
            let next = x[[sorted[pos + 1], feature]];
            if here == next {
                continue;
            }
            let nl = (pos + 1) as f64;
            let nr = n - nl;
            let right_sum = total - left_sum;
            let gain = left_sum * left_sum / nl + right_sum * right_sum / nr - parent_score;
            if gain > MIN_GAIN && best.is_none_or(|(g, _, _)| gain > g) {
                best = Some((gain, feature, 0.5 * (here + next)));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}
