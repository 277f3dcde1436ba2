//! Independent reference implementations used only by the tests.
#![allow(dead_code)]

use mrot::eval::SeededRng;
use mrot::KdeModel;
use ndarray::{Array1, Array2};

/// Minimum of `<gamma, C>` over the transportation polytope, by a dense
/// two-phase tableau simplex with Bland's rule. Slow and simple on purpose:
/// it shares no code or pivoting strategy with the network simplex.
pub fn lp_transport_objective(cost: &Array2<f64>, p: &[f64], q: &[f64]) -> f64 {
    let (n, m) = cost.dim();
    let nv = n * m;
    // rows: n supply equalities then m demand equalities
    let mut a: Vec<Vec<f64>> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    for i in 0..n {
        let mut row = vec![0.0; nv];
        for j in 0..m {
            row[i * m + j] = 1.0;
        }
        a.push(row);
        b.push(p[i]);
    }
    for j in 0..m {
        let mut row = vec![0.0; nv];
        for i in 0..n {
            row[i * m + j] = 1.0;
        }
        a.push(row);
        b.push(q[j]);
    }
    let c: Vec<f64> = cost.iter().copied().collect();
    simplex_min(a, b, &c).expect("transportation problems are feasible and bounded")
}

const TOL: f64 = 1e-12;

/// `min c.x s.t. A x = b, x >= 0` with `b >= 0`. Returns `None` if infeasible.
pub fn simplex_min(a: Vec<Vec<f64>>, b: Vec<f64>, c: &[f64]) -> Option<f64> {
    let rows = a.len();
    let nv = c.len();
    let width = nv + rows + 1;
    // tableau columns: original vars, artificials, rhs
    let mut t: Vec<Vec<f64>> = a
        .iter()
        .zip(&b)
        .enumerate()
        .map(|(r, (row, &rhs))| {
            let mut line = row.clone();
            line.extend((0..rows).map(|k| if k == r { 1.0 } else { 0.0 }));
            line.push(rhs);
            line
        })
        .collect();
    let mut basis: Vec<usize> = (nv..nv + rows).collect();

    // phase I: minimize the sum of artificials
    let phase1: Vec<f64> = (0..nv + rows).map(|j| if j >= nv { 1.0 } else { 0.0 }).collect();
    run_bland(&mut t, &mut basis, &phase1, nv + rows);
    let infeasibility: f64 = basis
        .iter()
        .zip(&t)
        .filter(|(&bj, _)| bj >= nv)
        .map(|(_, row)| row[width - 1])
        .sum();
    if infeasibility > 1e-9 {
        return None;
    }
    // drive zero-level artificials out of the basis, dropping redundant rows
    let mut r = 0;
    while r < t.len() {
        if basis[r] >= nv {
            match (0..nv).find(|&j| t[r][j].abs() > 1e-9) {
                Some(j) => pivot(&mut t, &mut basis, r, j),
                None => {
                    t.remove(r);
                    basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }
    let mut phase2 = c.to_vec();
    phase2.extend(std::iter::repeat_n(0.0, rows));
    run_bland(&mut t, &mut basis, &phase2, nv);
    Some(basis.iter().zip(&t).map(|(&bj, row)| phase2[bj] * row[width - 1]).sum())
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, j: usize) {
    let pv = t[r][j];
    for v in t[r].iter_mut() {
        *v /= pv;
    }
    let prow = t[r].clone();
    for (k, row) in t.iter_mut().enumerate() {
        if k != r && row[j] != 0.0 {
            let f = row[j];
            for (x, y) in row.iter_mut().zip(&prow) {
                *x -= f * y;
            }
        }
    }
    basis[r] = j;
}

/// Bland's rule: lowest-index improving column, lowest-index tied leaving row.
/// Only the first `allowed` columns may enter.
fn run_bland(t: &mut [Vec<f64>], basis: &mut [usize], cost: &[f64], allowed: usize) {
    let last = t[0].len() - 1;
    loop {
        let reduced = |j: usize, t: &[Vec<f64>], basis: &[usize]| {
            cost[j] - basis.iter().zip(t).map(|(&bj, row)| cost[bj] * row[j]).sum::<f64>()
        };
        let Some(enter) = (0..allowed).find(|&j| !basis.contains(&j) && reduced(j, t, basis) < -TOL)
        else {
            return;
        };
        let mut leave: Option<(f64, usize)> = None;
        for (r, row) in t.iter().enumerate() {
            if row[enter] > TOL {
                let ratio = row[last] / row[enter];
                let better = match leave {
                    None => true,
                    Some((best, br)) => {
                        ratio < best - TOL || (ratio <= best + TOL && basis[r] < basis[br])
                    }
                };
                if better {
                    leave = Some((ratio, r));
                }
            }
        }
        let (_, r) = leave.expect("transportation LPs are bounded");
        pivot(t, basis, r, enter);
    }
}

/// `P(T <= t)` under the KDE by composite Simpson integration of its density,
/// starting 12 bandwidths left of the smallest center.
pub fn quadrature_cdf(model: &KdeModel, t: f64) -> f64 {
    let lo = model.centers.iter().copied().fold(f64::INFINITY, f64::min) - 12.0 * model.bandwidth;
    if t <= lo {
        return 0.0;
    }
    // resolve each bandwidth with ~200 panels
    let panels = (((t - lo) / model.bandwidth) * 200.0).ceil().clamp(2000.0, 2e6) as usize;
    let panels = panels + panels % 2;
    let h = (t - lo) / panels as f64;
    let mut acc = model.density(lo) + model.density(t);
    for k in 1..panels {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * model.density(lo + k as f64 * h);
    }
    acc * h / 3.0
}

pub fn random_simplex(rng: &mut SeededRng, n: usize) -> Array1<f64> {
    let raw: Vec<f64> = (0..n).map(|_| 0.05 + rng.uniform()).collect();
    let total: f64 = raw.iter().sum();
    Array1::from_iter(raw.into_iter().map(|w| w / total))
}

pub fn random_matrix(rng: &mut SeededRng, n: usize, m: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((n, m), |_| scale * rng.uniform())
}

pub fn random_points(rng: &mut SeededRng, n: usize, d: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, d), |_| rng.standard_normal())
}
