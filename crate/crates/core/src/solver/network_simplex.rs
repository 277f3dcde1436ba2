//! Primal network simplex for the balanced transportation problem.
//!
//! The bipartite graph has one node per source row, one per sink column and an
//! artificial root joined to every node by a high-cost arc. The initial basis
//! is the star around the root, which is a strongly feasible spanning tree;
//! the leaving-arc tie rule below keeps it strongly feasible so degenerate
//! pivots cannot cycle. Entering arcs are chosen by block search.

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

pub(crate) struct ExactOutput {
    pub coupling: Array2<f64>,
    pub pivots: usize,
    pub optimal: bool,
}

struct Network<'a> {
    cost: ArrayView2<'a, f64>,
    n: usize,
    m: usize,
    root: usize,
    real_arcs: usize,
    art_cost: f64,
    flow: Vec<f64>,
    in_tree: Vec<bool>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    /// `true` when the arc to the parent points from the node to its parent.
    up: Vec<bool>,
    depth: Vec<usize>,
    potential: Vec<f64>,
    tree_adj: Vec<Vec<usize>>,
}

impl<'a> Network<'a> {
    fn new(cost: ArrayView2<'a, f64>, p: ArrayView1<'_, f64>, q: ArrayView1<'_, f64>) -> Self {
        let (n, m) = cost.dim();
        let nodes = n + m + 1;
        let root = n + m;
        let real_arcs = n * m;
        let max_cost = cost.iter().copied().fold(0.0, f64::max);
        let art_cost = (max_cost + 1.0) * nodes as f64;

        let mut net = Network {
            cost,
            n,
            m,
            root,
            real_arcs,
            art_cost,
            flow: vec![0.0; real_arcs + n + m],
            in_tree: vec![false; real_arcs + n + m],
            parent: vec![root; nodes],
            pred: vec![usize::MAX; nodes],
            up: vec![false; nodes],
            depth: vec![1; nodes],
            potential: vec![0.0; nodes],
            tree_adj: vec![Vec::new(); nodes],
        };
        net.depth[root] = 0;
        for v in 0..n + m {
            let arc = real_arcs + v;
            let is_source = v < n;
            net.flow[arc] = if is_source { p[v] } else { q[v - n] };
            net.in_tree[arc] = true;
            net.pred[v] = arc;
            net.up[v] = is_source;
            net.potential[v] = if is_source { -art_cost } else { art_cost };
            net.tree_adj[v].push(arc);
            net.tree_adj[root].push(arc);
        }
        net
    }

    fn arc_count(&self) -> usize {
        self.flow.len()
    }

    /// Tail and head of an arc.
    fn ends(&self, arc: usize) -> (usize, usize) {
        if arc < self.real_arcs {
            (arc / self.m, self.n + arc % self.m)
        } else {
            let v = arc - self.real_arcs;
            if v < self.n {
                (v, self.root)
            } else {
                (self.root, v)
            }
        }
    }

    fn arc_cost(&self, arc: usize) -> f64 {
        if arc < self.real_arcs {
            self.cost[[arc / self.m, arc % self.m]]
        } else {
            self.art_cost
        }
    }

    fn reduced_cost(&self, arc: usize) -> f64 {
        let (s, t) = self.ends(arc);
        self.arc_cost(arc) + self.potential[s] - self.potential[t]
    }

    fn join(&self, mut a: usize, mut b: usize) -> usize {
        while a != b {
            if self.depth[a] >= self.depth[b] {
                a = self.parent[a];
            } else {
                b = self.parent[b];
            }
        }
        a
    }

    /// Pushes flow around the cycle closed by `entering` and swaps it into the
    /// basis.
    fn pivot(&mut self, entering: usize) {
        let (first, second) = self.ends(entering);
        let join = self.join(first, second);

        // Flow runs first -> second over the entering arc, then second up to
        // the join, then down to first. Ties prefer the second path, which
        // preserves strong feasibility.
        let mut delta = f64::INFINITY;
        let mut leave_node = usize::MAX;
        let mut on_first = false;
        let mut u = first;
        while u != join {
            if self.up[u] {
                let d = self.flow[self.pred[u]];
                if d < delta {
                    delta = d;
                    leave_node = u;
                    on_first = true;
                }
            }
            u = self.parent[u];
        }
        let mut u = second;
        while u != join {
            if !self.up[u] {
                let d = self.flow[self.pred[u]];
                if d <= delta {
                    delta = d;
                    leave_node = u;
                    on_first = false;
                }
            }
            u = self.parent[u];
        }
        debug_assert!(leave_node != usize::MAX, "transportation cycles are always bounded");

        if delta > 0.0 {
            self.flow[entering] += delta;
            let mut u = first;
            while u != join {
                let arc = self.pred[u];
                if self.up[u] {
                    self.flow[arc] -= delta;
                } else {
                    self.flow[arc] += delta;
                }
                u = self.parent[u];
            }
            let mut u = second;
            while u != join {
                let arc = self.pred[u];
                if self.up[u] {
                    self.flow[arc] += delta;
                } else {
                    self.flow[arc] -= delta;
                }
                u = self.parent[u];
            }
        }
        let leaving = self.pred[leave_node];
        self.flow[leaving] = 0.0;

        // detach the subtree under leave_node
        let old_parent = self.parent[leave_node];
        self.in_tree[leaving] = false;
        remove_arc(&mut self.tree_adj[leave_node], leaving);
        remove_arc(&mut self.tree_adj[old_parent], leaving);

        // reattach it through the entering arc
        let (inside, outside) = if on_first { (first, second) } else { (second, first) };
        self.in_tree[entering] = true;
        self.tree_adj[inside].push(entering);
        self.tree_adj[outside].push(entering);
        self.hang(inside, outside, entering);
    }

    /// Makes `node` a child of `parent` via `arc` and refreshes the depth,
    /// parent pointers and potentials of the subtree that now hangs below it.
    fn hang(&mut self, node: usize, parent: usize, arc: usize) {
        let mut stack = vec![(node, parent, arc)];
        while let Some((v, par, via)) = stack.pop() {
            self.parent[v] = par;
            self.pred[v] = via;
            let (s, _) = self.ends(via);
            self.up[v] = s == v;
            self.depth[v] = self.depth[par] + 1;
            let c = self.arc_cost(via);
            self.potential[v] = if self.up[v] {
                self.potential[par] - c
            } else {
                self.potential[par] + c
            };
            for &e in &self.tree_adj[v] {
                if e == via {
                    continue;
                }
                let (s, t) = self.ends(e);
                let child = if s == v { t } else { s };
                stack.push((child, v, e));
            }
        }
    }
}

fn remove_arc(list: &mut Vec<usize>, arc: usize) {
    if let Some(pos) = list.iter().position(|&a| a == arc) {
        list.swap_remove(pos);
    }
}

pub(crate) fn solve(
    cost: ArrayView2<'_, f64>,
    p: ArrayView1<'_, f64>,
    q: ArrayView1<'_, f64>,
) -> Result<ExactOutput> {
    let (n, m) = cost.dim();
    let mut net = Network::new(cost, p, q);
    let arcs = net.arc_count();
    let block = ((arcs as f64).sqrt() as usize).max(10).min(arcs);
    let max_cost = cost.iter().copied().fold(0.0, f64::max);
    let rc_tol = 1e-12 * (1.0 + max_cost) * (n + m) as f64;
    let max_pivots = 50 * arcs + 1000;

    let mut next = 0usize;
    let mut pivots = 0usize;
    let mut optimal = false;
    while pivots < max_pivots {
        // block search: scan whole blocks, stop at the first block holding an
        // eligible arc and take its most negative reduced cost
        let mut best = -rc_tol;
        let mut entering = usize::MAX;
        let mut scanned = 0;
        let mut e = next;
        while scanned < arcs {
            if !net.in_tree[e] {
                let rc = net.reduced_cost(e);
                if rc < best {
                    best = rc;
                    entering = e;
                }
            }
            scanned += 1;
            e += 1;
            if e == arcs {
                e = 0;
            }
            if scanned % block == 0 && entering != usize::MAX {
                break;
            }
        }
        if entering == usize::MAX {
            optimal = true;
            break;
        }
        next = e;
        net.pivot(entering);
        pivots += 1;
    }

    let residual: f64 = net.flow[net.real_arcs..].iter().sum();
    let mass: f64 = p.sum();
    if optimal && residual > 1e-9 * mass.max(1.0) {
        return Err(Error::Infeasible { residual });
    }

    let mut coupling = Array2::zeros((n, m));
    for (idx, x) in coupling.iter_mut().enumerate() {
        *x = net.flow[idx].max(0.0);
    }
    Ok(ExactOutput {
        coupling,
        pivots,
        optimal,
    })
}
