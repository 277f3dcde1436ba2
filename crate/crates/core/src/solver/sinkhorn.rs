//! Entropic optimal transport by Sinkhorn matrix scaling.
//!
//! Two variants share one driver:
//! * plain scaling on the Gibbs kernel `exp(-C/eps)`, which overflows or
//!   underflows once `eps` is small relative to the costs;
//! * a log-stabilized variant that keeps dual potentials `(f, g)` absorbed
//!   into the kernel `exp((f_i + g_j - C_ij)/eps)` and re-absorbs the scalings
//!   through exact log-sum-exp updates whenever they leave a safe range.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};

use crate::error::{Error, Result};

/// Scalings beyond `exp(ABSORB_LOG)` are folded back into the potentials.
const ABSORB_LOG: f64 = 30.0;
const CHECK_EVERY: usize = 10;

pub(crate) struct SinkhornOutput {
    pub coupling: Array2<f64>,
    pub converged: bool,
    pub iterations: usize,
}

pub(crate) fn plain(
    cost: ArrayView2<'_, f64>,
    p: ArrayView1<'_, f64>,
    q: ArrayView1<'_, f64>,
    epsilon: f64,
    max_iters: usize,
    tol: f64,
) -> Result<SinkhornOutput> {
    let kernel = cost.mapv(|c| (-c / epsilon).exp());
    let mut u = Array1::<f64>::ones(p.len());
    let mut v = Array1::<f64>::ones(q.len());
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        scale(&mut u, p, &mat_vec(&kernel, &v));
        scale(&mut v, q, &mat_t_vec(&kernel, &u));
        if !(all_finite_positive(&u) && all_finite_positive(&v)) {
            return Err(Error::NumericalOverflow {
                iteration: iterations,
            });
        }
        if (iterations % CHECK_EVERY == 0 || iterations == max_iters)
            && row_violation(&u, &mat_vec(&kernel, &v), p) < tol
        {
            converged = true;
            break;
        }
    }
    let coupling = assemble(&kernel, &u, &v);
    Ok(SinkhornOutput {
        coupling,
        converged,
        iterations,
    })
}

pub(crate) fn log_stabilized(
    cost: ArrayView2<'_, f64>,
    p: ArrayView1<'_, f64>,
    q: ArrayView1<'_, f64>,
    epsilon: f64,
    max_iters: usize,
    tol: f64,
) -> Result<SinkhornOutput> {
    let log_p = p.mapv(f64::ln);
    let log_q = q.mapv(f64::ln);
    let mut f = Array1::<f64>::zeros(p.len());
    let mut g = Array1::<f64>::zeros(q.len());
    absorb_exact(cost, &log_p, &log_q, epsilon, &mut f, &mut g);
    let mut kernel = gibbs(cost, &f, &g, epsilon);
    let mut u = Array1::<f64>::ones(p.len());
    let mut v = Array1::<f64>::ones(q.len());

    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        scale(&mut u, p, &mat_vec(&kernel, &v));
        scale(&mut v, q, &mat_t_vec(&kernel, &u));

        let healthy = all_finite_positive(&u) && all_finite_positive(&v);
        let drifted = healthy
            && u.iter().chain(v.iter()).any(|s| s.ln().abs() > ABSORB_LOG);
        if !healthy || drifted {
            if healthy {
                Zip::from(&mut f).and(&u).for_each(|f, u| *f += epsilon * u.ln());
                Zip::from(&mut g).and(&v).for_each(|g, v| *g += epsilon * v.ln());
            }
            // an unhealthy state discards the scalings and resumes from the
            // last good potentials with one exact log-domain sweep
            absorb_exact(cost, &log_p, &log_q, epsilon, &mut f, &mut g);
            kernel = gibbs(cost, &f, &g, epsilon);
            u.fill(1.0);
            v.fill(1.0);
        }

        if (iterations % CHECK_EVERY == 0 || iterations == max_iters)
            && row_violation(&u, &mat_vec(&kernel, &v), p) < tol
        {
            converged = true;
            break;
        }
    }
    let coupling = assemble(&kernel, &u, &v);
    Ok(SinkhornOutput {
        coupling,
        converged,
        iterations,
    })
}

fn mat_vec(k: &Array2<f64>, v: &Array1<f64>) -> Array1<f64> {
    k.rows().into_iter().map(|row| row.dot(v)).collect()
}

/// `K^T u`, accumulated row by row so the kernel is read contiguously.
fn mat_t_vec(k: &Array2<f64>, u: &Array1<f64>) -> Array1<f64> {
    let mut out = Array1::zeros(k.ncols());
    for (row, ui) in k.rows().into_iter().zip(u.iter()) {
        out.scaled_add(*ui, &row);
    }
    out
}

fn scale(target: &mut Array1<f64>, marginal: ArrayView1<'_, f64>, kv: &Array1<f64>) {
    Zip::from(target)
        .and(marginal)
        .and(kv)
        .for_each(|t, m, k| *t = m / k);
}

fn all_finite_positive(x: &Array1<f64>) -> bool {
    x.iter().all(|v| v.is_finite() && *v > 0.0)
}

fn row_violation(u: &Array1<f64>, kv: &Array1<f64>, p: ArrayView1<'_, f64>) -> f64 {
    Zip::from(u)
        .and(kv)
        .and(p)
        .fold(0.0f64, |acc, u, k, p| acc.max((u * k - p).abs()))
}

fn assemble(kernel: &Array2<f64>, u: &Array1<f64>, v: &Array1<f64>) -> Array2<f64> {
    let mut out = kernel.clone();
    for (mut row, ui) in out.axis_iter_mut(Axis(0)).zip(u.iter()) {
        Zip::from(&mut row).and(v).for_each(|x, vj| *x *= ui * vj);
    }
    out
}

fn gibbs(cost: ArrayView2<'_, f64>, f: &Array1<f64>, g: &Array1<f64>, epsilon: f64) -> Array2<f64> {
    let mut k = cost.to_owned();
    for (mut row, fi) in k.axis_iter_mut(Axis(0)).zip(f.iter()) {
        Zip::from(&mut row)
            .and(g)
            .for_each(|c, gj| *c = ((fi + gj - *c) / epsilon).exp());
    }
    k
}

/// One exact log-domain Sinkhorn sweep: `f` then `g` via log-sum-exp.
fn absorb_exact(
    cost: ArrayView2<'_, f64>,
    log_p: &Array1<f64>,
    log_q: &Array1<f64>,
    epsilon: f64,
    f: &mut Array1<f64>,
    g: &mut Array1<f64>,
) {
    for (i, row) in cost.axis_iter(Axis(0)).enumerate() {
        let lse = log_sum_exp(row.iter().zip(g.iter()).map(|(c, gj)| (gj - c) / epsilon));
        f[i] = epsilon * (log_p[i] - lse);
    }
    // column pass accumulates row by row to stay cache-friendly
    let m = cost.ncols();
    let mut col_max = vec![f64::NEG_INFINITY; m];
    for (row, fi) in cost.axis_iter(Axis(0)).zip(f.iter()) {
        for (mx, c) in col_max.iter_mut().zip(row.iter()) {
            *mx = mx.max((fi - c) / epsilon);
        }
    }
    let mut col_sum = vec![0.0; m];
    for (row, fi) in cost.axis_iter(Axis(0)).zip(f.iter()) {
        for ((s, c), mx) in col_sum.iter_mut().zip(row.iter()).zip(col_max.iter()) {
            *s += ((fi - c) / epsilon - mx).exp();
        }
    }
    for j in 0..m {
        g[j] = epsilon * (log_q[j] - (col_max[j] + col_sum[j].ln()));
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}
