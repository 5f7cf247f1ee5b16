//! Primal network simplex for the uncapacitated bipartite transportation problem,
//! in floating point, with a strongly feasible spanning tree and block-search
//! pricing.
//!
//! Node layout: supplies `0..K`, demands `K..K+M`, artificial root `K+M`.
//! Arc `k * M + m` is the real arc `k → K+m`; arc `K*M + i` joins node `i`
//! to the root.

use crate::error::{invalid, Result};

const UP: i8 = 1;
const DOWN: i8 = -1;
const NONE: usize = usize::MAX;

pub(crate) struct Solution {
    /// Flow on the real arcs, row-major `K × M`.
    pub flow: Vec<f64>,
    /// Node potentials; reduced cost of arc `i → j` is `c + π_i − π_j`.
    pub potential: Vec<f64>,
    pub pivots: usize,
}

struct Network<'a> {
    k: usize,
    m: usize,
    cost: &'a [f64],
    art_cost: f64,
    tol: f64,
    flow: Vec<f64>,
    in_tree: Vec<bool>,
    // spanning tree, indexed by node
    parent: Vec<usize>,
    pred: Vec<usize>,
    dir: Vec<i8>,
    depth: Vec<usize>,
    first_child: Vec<usize>,
    next_sib: Vec<usize>,
    prev_sib: Vec<usize>,
    pi: Vec<f64>,
    next_arc: usize,
    block: usize,
}

impl<'a> Network<'a> {
    fn node_count(&self) -> usize {
        self.k + self.m + 1
    }

    fn root(&self) -> usize {
        self.k + self.m
    }

    fn real_arcs(&self) -> usize {
        self.k * self.m
    }

    fn source(&self, e: usize) -> usize {
        if e < self.real_arcs() {
            e / self.m
        } else {
            let i = e - self.real_arcs();
            if i < self.k {
                i
            } else {
                self.root()
            }
        }
    }

    fn target(&self, e: usize) -> usize {
        if e < self.real_arcs() {
            self.k + e % self.m
        } else {
            let i = e - self.real_arcs();
            if i < self.k {
                self.root()
            } else {
                i
            }
        }
    }

    fn arc_cost(&self, e: usize) -> f64 {
        if e < self.real_arcs() {
            self.cost[e]
        } else if e - self.real_arcs() < self.k {
            0.0
        } else {
            self.art_cost
        }
    }

    fn reduced_cost(&self, e: usize) -> f64 {
        self.arc_cost(e) + self.pi[self.source(e)] - self.pi[self.target(e)]
    }

    fn new(a: &[f64], b: &[f64], cost: &'a [f64]) -> Self {
        let (k, m) = (a.len(), b.len());
        let n = k + m + 1;
        let max_cost = cost.iter().cloned().fold(0.0, f64::max);
        let art_cost = (max_cost + 1.0) * n as f64;
        let arcs = k * m + k + m;
        let root = k + m;
        let mut net = Self {
            k,
            m,
            cost,
            art_cost,
            tol: 1e-14 * art_cost,
            flow: vec![0.0; arcs],
            in_tree: vec![false; arcs],
            parent: vec![root; n],
            pred: vec![NONE; n],
            dir: vec![UP; n],
            depth: vec![1; n],
            first_child: vec![NONE; n],
            next_sib: vec![NONE; n],
            prev_sib: vec![NONE; n],
            pi: vec![0.0; n],
            next_arc: 0,
            block: ((k * m) as f64).sqrt().ceil().max(10.0) as usize,
        };
        net.parent[root] = NONE;
        net.depth[root] = 0;
        for i in 0..k + m {
            let e = k * m + i;
            net.pred[i] = e;
            net.in_tree[e] = true;
            if i < k {
                net.dir[i] = UP;
                net.flow[e] = a[i];
            } else {
                net.dir[i] = DOWN;
                net.flow[e] = b[i - k];
                net.pi[i] = art_cost;
            }
            net.attach(i, root);
        }
        net
    }

    fn attach(&mut self, child: usize, parent: usize) {
        self.parent[child] = parent;
        self.prev_sib[child] = NONE;
        self.next_sib[child] = self.first_child[parent];
        if self.first_child[parent] != NONE {
            self.prev_sib[self.first_child[parent]] = child;
        }
        self.first_child[parent] = child;
    }

    fn detach(&mut self, child: usize) {
        let parent = self.parent[child];
        let (prev, next) = (self.prev_sib[child], self.next_sib[child]);
        if prev != NONE {
            self.next_sib[prev] = next;
        } else {
            self.first_child[parent] = next;
        }
        if next != NONE {
            self.prev_sib[next] = prev;
        }
        self.prev_sib[child] = NONE;
        self.next_sib[child] = NONE;
    }

    /// Most negative reduced cost within the first block holding a candidate,
    /// scanning cyclically from where the last search stopped.
    fn block_search(&mut self) -> Option<usize> {
        let arcs = self.real_arcs();
        let mut best = -self.tol;
        let mut found = None;
        let mut count = 0;
        for step in 0..arcs {
            let e = (self.next_arc + step) % arcs;
            if !self.in_tree[e] {
                let rc = self.reduced_cost(e);
                if rc < best {
                    best = rc;
                    found = Some(e);
                }
            }
            count += 1;
            if count == self.block {
                if found.is_some() {
                    self.next_arc = (e + 1) % arcs;
                    return found;
                }
                count = 0;
            }
        }
        found
    }

    /// Lowest-index eligible arc (Bland).
    fn first_eligible(&self) -> Option<usize> {
        (0..self.real_arcs()).find(|&e| !self.in_tree[e] && self.reduced_cost(e) < -self.tol)
    }

    fn join(&self, mut u: usize, mut v: usize) -> usize {
        while u != v {
            if self.depth[u] > self.depth[v] {
                u = self.parent[u];
            } else if self.depth[v] > self.depth[u] {
                v = self.parent[v];
            } else {
                u = self.parent[u];
                v = self.parent[v];
            }
        }
        u
    }

    fn pivot(&mut self, e_in: usize) {
        let first = self.source(e_in);
        let second = self.target(e_in);
        let join = self.join(first, second);

        // leaving arc: strongly feasible choice
        let mut delta = f64::INFINITY;
        let mut u_out = NONE;
        let mut on_first = true;
        let mut u = first;
        while u != join {
            if self.dir[u] == UP && self.flow[self.pred[u]] < delta {
                delta = self.flow[self.pred[u]];
                u_out = u;
            }
            u = self.parent[u];
        }
        let mut u = second;
        while u != join {
            if self.dir[u] == DOWN && self.flow[self.pred[u]] <= delta {
                delta = self.flow[self.pred[u]];
                u_out = u;
                on_first = false;
            }
            u = self.parent[u];
        }
        assert!(u_out != NONE, "unbounded transport problem");
        let delta = delta.max(0.0);

        if delta > 0.0 {
            self.flow[e_in] += delta;
            let mut u = first;
            while u != join {
                let e = self.pred[u];
                self.flow[e] = (self.flow[e] - f64::from(self.dir[u]) * delta).max(0.0);
                u = self.parent[u];
            }
            let mut u = second;
            while u != join {
                let e = self.pred[u];
                self.flow[e] = (self.flow[e] + f64::from(self.dir[u]) * delta).max(0.0);
                u = self.parent[u];
            }
        }
        let e_out = self.pred[u_out];
        self.flow[e_out] = 0.0;
        self.in_tree[e_out] = false;
        self.in_tree[e_in] = true;

        let (u_in, v_in) = if on_first { (first, second) } else { (second, first) };
        self.rehang(u_in, v_in, u_out, e_in);
    }

    /// Replaces the tree arc above `u_out` by `e_in = (u_in, v_in)`: the path
    /// `u_in → … → u_out` is reversed so the detached subtree hangs from `v_in`.
    fn rehang(&mut self, u_in: usize, v_in: usize, u_out: usize, e_in: usize) {
        let mut path = vec![u_in];
        while *path.last().unwrap() != u_out {
            let p = self.parent[*path.last().unwrap()];
            path.push(p);
        }
        for &x in &path {
            self.detach(x);
        }
        let old_pred: Vec<usize> = path.iter().map(|&x| self.pred[x]).collect();
        let old_dir: Vec<i8> = path.iter().map(|&x| self.dir[x]).collect();
        self.pred[u_in] = e_in;
        self.dir[u_in] = if self.source(e_in) == u_in { UP } else { DOWN };
        self.attach(u_in, v_in);
        for i in 1..path.len() {
            self.pred[path[i]] = old_pred[i - 1];
            self.dir[path[i]] = -old_dir[i - 1];
            self.attach(path[i], path[i - 1]);
        }

        // potentials: zero reduced cost on e_in, then shift the whole subtree
        let target_pi = if self.source(e_in) == u_in {
            self.pi[v_in] - self.arc_cost(e_in)
        } else {
            self.pi[v_in] + self.arc_cost(e_in)
        };
        let shift = target_pi - self.pi[u_in];
        let mut stack = vec![u_in];
        while let Some(x) = stack.pop() {
            self.pi[x] += shift;
            self.depth[x] = self.depth[self.parent[x]] + 1;
            let mut c = self.first_child[x];
            while c != NONE {
                stack.push(c);
                c = self.next_sib[c];
            }
        }
    }

    /// Recomputes all potentials from the tree, removing accumulated drift.
    fn refresh_potentials(&mut self) {
        let root = self.root();
        self.pi[root] = 0.0;
        let mut stack = vec![root];
        while let Some(x) = stack.pop() {
            let mut c = self.first_child[x];
            while c != NONE {
                let e = self.pred[c];
                self.pi[c] = if self.dir[c] == UP {
                    self.pi[x] - self.arc_cost(e)
                } else {
                    self.pi[x] + self.arc_cost(e)
                };
                stack.push(c);
                c = self.next_sib[c];
            }
        }
    }
}

/// Minimum-cost transport between supplies `a` and demands `b` (both summing to
/// one) for the row-major `K × M` cost matrix.
pub(crate) fn network_simplex(a: &[f64], b: &[f64], cost: &[f64]) -> Result<Solution> {
    let (k, m) = (a.len(), b.len());
    if cost.len() != k * m {
        return Err(invalid("cost matrix does not match the marginals"));
    }
    let mut net = Network::new(a, b, cost);
    let arcs = net.real_arcs();
    let budget = 50 * (arcs + net.node_count()) + 10_000;
    let mut pivots = 0;
    loop {
        let entering = if pivots < budget {
            net.block_search()
        } else {
            net.first_eligible()
        };
        let e = match entering {
            Some(e) => e,
            None => {
                net.refresh_potentials();
                match net.block_search() {
                    Some(e) => e,
                    None => break,
                }
            }
        };
        net.pivot(e);
        pivots += 1;
    }
    Ok(Solution {
        flow: net.flow[..arcs].to_vec(),
        potential: net.pi.clone(),
        pivots,
    })
}
