//! Primal network simplex on the bipartite transportation graph.
//!
//! Rows supply `a_i`, columns demand `b_j`. An artificial root joined to
//! every node by an expensive arc gives a strongly feasible starting tree;
//! the leaving-arc rule keeps it strongly feasible, which rules out cycling
//! on degenerate pivots. Entering arcs come from a cyclic block search that
//! takes the most negative reduced cost in the block, lowest index first on
//! ties, so plans are reproducible run to run.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use super::{check_problem, Coupling};
use crate::{Error, Result};

const NONE: usize = usize::MAX;

struct Network {
    n_rows: usize,
    n_cols: usize,
    root: usize,
    /// Transport arcs `i*n_cols + j`, then row→root, then root→column.
    source: Vec<usize>,
    target: Vec<usize>,
    cost: Vec<f64>,
    flow: Vec<f64>,
    in_tree: Vec<bool>,
    basic: Vec<usize>,
    basic_pos: Vec<usize>,
    // spanning tree; only the subtree cut off by a pivot is re-hung
    parent: Vec<usize>,
    pred: Vec<usize>,
    /// `pred` arc points from the node up to its parent.
    pred_up: Vec<bool>,
    depth: Vec<usize>,
    potential: Vec<f64>,
    adjacency: Vec<Vec<usize>>,
    stack: Vec<usize>,
}

impl Network {
    fn new(cost: ArrayView2<'_, f64>, a: &[f64], b: &[f64]) -> Self {
        let (n_rows, n_cols) = (a.len(), b.len());
        let n_nodes = n_rows + n_cols + 1;
        let root = n_rows + n_cols;
        let n_transport = n_rows * n_cols;
        let n_arcs = n_transport + n_rows + n_cols;
        let max_cost = cost.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let scale = if max_cost > 0.0 { max_cost } else { 1.0 };
        let artificial = 2.0 * scale * n_nodes as f64;

        let mut source = Vec::with_capacity(n_arcs);
        let mut target = Vec::with_capacity(n_arcs);
        let mut costs = Vec::with_capacity(n_arcs);
        for i in 0..n_rows {
            for j in 0..n_cols {
                source.push(i);
                target.push(n_rows + j);
                costs.push(cost[[i, j]]);
            }
        }
        let mut flow = vec![0.0; n_arcs];
        let mut in_tree = vec![false; n_arcs];
        let mut basic = Vec::with_capacity(n_nodes - 1);
        for (i, &s) in a.iter().enumerate() {
            let e = source.len();
            source.push(i);
            target.push(root);
            costs.push(artificial);
            flow[e] = s;
            in_tree[e] = true;
            basic.push(e);
        }
        for (j, &d) in b.iter().enumerate() {
            let e = source.len();
            source.push(root);
            target.push(n_rows + j);
            costs.push(artificial);
            flow[e] = d;
            in_tree[e] = true;
            basic.push(e);
        }
        let mut basic_pos = vec![NONE; n_arcs];
        for (k, &e) in basic.iter().enumerate() {
            basic_pos[e] = k;
        }
        let mut net = Self {
            n_rows,
            n_cols,
            root,
            source,
            target,
            cost: costs,
            flow,
            in_tree,
            basic,
            basic_pos,
            parent: vec![NONE; n_nodes],
            pred: vec![NONE; n_nodes],
            pred_up: vec![false; n_nodes],
            depth: vec![0; n_nodes],
            potential: vec![0.0; n_nodes],
            adjacency: vec![Vec::new(); n_nodes],
            stack: Vec::with_capacity(n_nodes),
        };
        net.rebuild_tree();
        net
    }

    /// Recompute parents, depths and potentials from the basic arc set.
    /// Potentials satisfy `c(u→v) + π_u − π_v = 0` on tree arcs, `π_root = 0`.
    fn rebuild_tree(&mut self) {
        for adj in &mut self.adjacency {
            adj.clear();
        }
        for &e in &self.basic {
            self.adjacency[self.source[e]].push(e);
            self.adjacency[self.target[e]].push(e);
        }
        self.parent[self.root] = NONE;
        self.pred[self.root] = NONE;
        self.depth[self.root] = 0;
        self.potential[self.root] = 0.0;
        self.refresh_below(self.root);
    }

    fn reduced_cost(&self, e: usize) -> f64 {
        self.cost[e] + self.potential[self.source[e]] - self.potential[self.target[e]]
    }

    fn find_entering(&self, next: &mut usize, block: usize, tol: f64) -> Option<usize> {
        let m = self.cost.len();
        let mut best = NONE;
        let mut best_rc = -tol;
        let mut scanned_in_block = 0;
        let start = *next;
        for k in 0..m {
            let e = (start + k) % m;
            if !self.in_tree[e] {
                let rc = self.reduced_cost(e);
                if rc < best_rc {
                    best_rc = rc;
                    best = e;
                }
            }
            scanned_in_block += 1;
            if scanned_in_block == block {
                if best != NONE {
                    *next = (e + 1) % m;
                    return Some(best);
                }
                scanned_in_block = 0;
            }
        }
        if best != NONE {
            *next = (best + 1) % m;
            return Some(best);
        }
        None
    }

    fn pivot(&mut self, entering: usize) {
        let first = self.source[entering];
        let second = self.target[entering];
        let mut u = first;
        let mut v = second;
        while u != v {
            if self.depth[u] >= self.depth[v] {
                u = self.parent[u];
            } else {
                v = self.parent[v];
            }
        }
        let join = u;

        let mut delta = f64::INFINITY;
        let mut leaving_node = NONE;
        let mut on_first = false;
        let mut x = first;
        while x != join {
            if self.pred_up[x] {
                let d = self.flow[self.pred[x]];
                if d < delta {
                    delta = d;
                    leaving_node = x;
                    on_first = true;
                }
            }
            x = self.parent[x];
        }
        let mut x = second;
        while x != join {
            if !self.pred_up[x] {
                let d = self.flow[self.pred[x]];
                if d <= delta {
                    delta = d;
                    leaving_node = x;
                    on_first = false;
                }
            }
            x = self.parent[x];
        }
        debug_assert!(leaving_node != NONE, "transport cycles are always bounded");

        let delta = delta.max(0.0);
        if delta > 0.0 {
            let mut x = first;
            while x != join {
                let e = self.pred[x];
                if self.pred_up[x] {
                    self.flow[e] -= delta;
                } else {
                    self.flow[e] += delta;
                }
                x = self.parent[x];
            }
            let mut x = second;
            while x != join {
                let e = self.pred[x];
                if self.pred_up[x] {
                    self.flow[e] += delta;
                } else {
                    self.flow[e] -= delta;
                }
                x = self.parent[x];
            }
        }
        let leaving = self.pred[leaving_node];
        self.flow[entering] = delta;
        self.flow[leaving] = 0.0;
        self.in_tree[leaving] = false;
        self.in_tree[entering] = true;
        let pos = self.basic_pos[leaving];
        self.basic[pos] = entering;
        self.basic_pos[entering] = pos;
        self.basic_pos[leaving] = NONE;

        for end in [self.source[leaving], self.target[leaving]] {
            let adj = &mut self.adjacency[end];
            let k = adj.iter().position(|&e| e == leaving).expect("tree arc is adjacent");
            adj.swap_remove(k);
        }
        self.adjacency[first].push(entering);
        self.adjacency[second].push(entering);
        // the side of the entering arc that lost its path to the root
        let (sub_root, attach) = if on_first { (first, second) } else { (second, first) };
        self.hang(sub_root, attach, entering);
    }

    /// Attach `node` below `parent` through arc `e` and refresh parents,
    /// depths and potentials of everything beneath it.
    fn hang(&mut self, node: usize, parent: usize, e: usize) {
        self.set_child(node, parent, e);
        self.refresh_below(node);
    }

    fn refresh_below(&mut self, node: usize) {
        self.stack.clear();
        self.stack.push(node);
        while let Some(u) = self.stack.pop() {
            for k in 0..self.adjacency[u].len() {
                let e = self.adjacency[u][k];
                if e == self.pred[u] {
                    continue;
                }
                let v = if self.source[e] == u { self.target[e] } else { self.source[e] };
                self.set_child(v, u, e);
                self.stack.push(v);
            }
        }
    }

    fn set_child(&mut self, v: usize, u: usize, e: usize) {
        let up = self.source[e] == v;
        self.parent[v] = u;
        self.pred[v] = e;
        self.pred_up[v] = up;
        self.depth[v] = self.depth[u] + 1;
        // arc v→u: c + π_v − π_u = 0; arc u→v: c + π_u − π_v = 0
        self.potential[v] = if up {
            self.potential[u] - self.cost[e]
        } else {
            self.potential[u] + self.cost[e]
        };
    }

    fn run(&mut self) -> Result<()> {
        let m = self.cost.len();
        let block = ((m as f64).sqrt().ceil() as usize).max(10).min(m);
        let max_cost = self.cost[..self.n_rows * self.n_cols]
            .iter()
            .fold(0.0f64, |acc, c| acc.max(c.abs()));
        let tol = 1e-12 * max_cost.max(f64::MIN_POSITIVE) * (self.n_rows + self.n_cols) as f64;
        let max_pivots = 50 * m + 1000;
        let mut next = 0;
        for _ in 0..max_pivots {
            match self.find_entering(&mut next, block, tol) {
                Some(e) => self.pivot(e),
                None => return Ok(()),
            }
        }
        Err(Error::Divergence(format!(
            "network simplex exceeded {max_pivots} pivots"
        )))
    }
}

/// Exact minimum-cost coupling for `cost` with marginals `a`, `b`.
///
/// Zero-mass rows and columns are removed before solving and come back as
/// zero rows and columns of the plan.
pub fn solve_exact(
    cost: ArrayView2<'_, f64>,
    a: ArrayView1<'_, f64>,
    b: ArrayView1<'_, f64>,
) -> Result<Coupling> {
    let (rows, cols) = check_problem(cost, a, b)?;
    let mut plan = Array2::zeros(cost.dim());
    if !rows.is_empty() && !cols.is_empty() {
        let sub = Array2::from_shape_fn((rows.len(), cols.len()), |(i, j)| cost[[rows[i], cols[j]]]);
        let sa: Vec<f64> = rows.iter().map(|&i| a[i]).collect();
        let sb: Vec<f64> = cols.iter().map(|&j| b[j]).collect();
        let mut net = Network::new(sub.view(), &sa, &sb);
        net.run()?;
        for (ii, &i) in rows.iter().enumerate() {
            for (jj, &j) in cols.iter().enumerate() {
                plan[[i, j]] = net.flow[ii * net.n_cols + jj].max(0.0);
            }
        }
    }
    Ok(Coupling {
        plan,
        row_marginals: Array1::from(a.to_vec()),
        col_marginals: Array1::from(b.to_vec()),
    })
}
