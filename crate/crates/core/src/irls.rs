//! Length minimization over the free vertices of a straight-line tree.
//!
//! The objective `sum_e |x_a - x_b|` is convex. Each sweep replaces every
//! free vertex by the `1/length`-weighted average of its neighbors, solving
//! the whole tree-structured linear system at once by leaf-to-root
//! elimination. Edge lengths are regularized by `eps = 1e-12 * scale`.
//!
//! Near a collapse (an optimal edge of length zero) the sweeps converge
//! only linearly with a rate that approaches one, so the solver switches to
//! an active set: edges that have become very short are contracted, the
//! smaller problem is solved, and the result is accepted only if a
//! subgradient certificate exists for every contracted edge. A contracted
//! edge without certificate is reopened and the loop repeats.

use crate::error::{Error, Result};
use crate::geom;

/// Sweeps between checks for collapsing edges.
const CHUNK: usize = 100;
/// Edges shorter than this (relative to the scale, and at most a tenth of
/// the closest pair of fixed points) that keep shrinking are tried as
/// collapses.
const SHORT: f64 = 1e-2;
/// Contracted edges whose subgradient exceeds the unit ball by less than
/// this stay contracted; opening them would shorten the tree only to second
/// order in the excess.
const CERT_SLACK: f64 = 1e-6;
/// Stalled sweep chunks before a Newton polish is attempted.
const NEWTON_EVERY: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolverOptions {
    /// Relative tolerance for the length decrease and the vertex movement.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-10, max_sweeps: 100_000 }
    }
}

/// Vertices `0..n_fixed` are fixed, `n_fixed..n_fixed + n_free` are free.
#[derive(Clone, Debug)]
pub(crate) struct TreeProblem {
    pub dim: usize,
    pub fixed: Vec<f64>,
    pub n_fixed: usize,
    pub n_free: usize,
    pub edges: Vec<(usize, usize)>,
    /// Length unit for tolerances (diameter of the fixed points).
    pub scale: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct Solved {
    pub free: Vec<f64>,
    pub sweeps: usize,
}

struct Plan {
    /// Free vertices (local index) with every free child before its parent.
    postorder: Vec<usize>,
    /// Free parent and the edge to it.
    parent: Vec<Option<(usize, usize)>>,
    /// Edges incident to each free vertex: (edge index, other endpoint).
    incident: Vec<Vec<(usize, usize)>>,
}

impl TreeProblem {
    fn pos<'a>(&'a self, free: &'a [f64], v: usize) -> &'a [f64] {
        let d = self.dim;
        if v < self.n_fixed {
            &self.fixed[v * d..(v + 1) * d]
        } else {
            let u = v - self.n_fixed;
            &free[u * d..(u + 1) * d]
        }
    }

    pub fn edge_len(&self, free: &[f64], e: usize) -> f64 {
        let (a, b) = self.edges[e];
        geom::dist(self.pos(free, a), self.pos(free, b))
    }

    pub fn length(&self, free: &[f64]) -> f64 {
        (0..self.edges.len()).map(|e| self.edge_len(free, e)).sum()
    }

    fn plan(&self) -> Plan {
        let nf = self.n_fixed;
        let mut incident = vec![Vec::new(); self.n_free];
        for (e, &(a, b)) in self.edges.iter().enumerate() {
            if a >= nf {
                incident[a - nf].push((e, b));
            }
            if b >= nf {
                incident[b - nf].push((e, a));
            }
        }
        let mut parent = vec![None; self.n_free];
        let mut seen = vec![false; self.n_free];
        let mut bfs = Vec::with_capacity(self.n_free);
        for root in 0..self.n_free {
            if seen[root] {
                continue;
            }
            seen[root] = true;
            let start = bfs.len();
            bfs.push(root);
            let mut i = start;
            while i < bfs.len() {
                let u = bfs[i];
                for &(e, w) in &incident[u] {
                    if w >= nf && !seen[w - nf] {
                        seen[w - nf] = true;
                        parent[w - nf] = Some((u, e));
                        bfs.push(w - nf);
                    }
                }
                i += 1;
            }
        }
        bfs.reverse();
        Plan { postorder: bfs, parent, incident }
    }

    /// Initial guess: every free vertex at the average of the fixed vertices
    /// weighted by `2^-hops`.
    pub fn default_init(&self) -> Vec<f64> {
        let v = self.n_fixed + self.n_free;
        let mut adj = vec![Vec::new(); v];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let d = self.dim;
        let mut out = vec![0.0; self.n_free * d];
        for u in 0..self.n_free {
            let mut hops = vec![usize::MAX; v];
            hops[self.n_fixed + u] = 0;
            let mut queue = std::collections::VecDeque::from([self.n_fixed + u]);
            while let Some(x) = queue.pop_front() {
                for &y in &adj[x] {
                    if hops[y] == usize::MAX {
                        hops[y] = hops[x] + 1;
                        queue.push_back(y);
                    }
                }
            }
            let mut wsum = 0.0;
            for f in 0..self.n_fixed {
                if hops[f] == usize::MAX {
                    continue;
                }
                let w = 0.5f64.powi(hops[f] as i32);
                wsum += w;
                for c in 0..d {
                    out[u * d + c] += w * self.fixed[f * d + c];
                }
            }
            if wsum > 0.0 {
                for c in 0..d {
                    out[u * d + c] /= wsum;
                }
            }
        }
        out
    }

    /// Plain reweighted sweeps until the length decrease and the movement are
    /// both below `tol` (relative), or `cap` sweeps. Returns the sweep count
    /// and whether the criterion was met.
    fn sweeps(&self, plan: &Plan, free: &mut [f64], tol: f64, cap: usize) -> (usize, bool, f64) {
        let d = self.dim;
        let eps2 = (1e-12 * self.scale).powi(2);
        let nf = self.n_fixed;
        let mut weights = vec![0.0; self.edges.len()];
        let mut diag = vec![0.0; self.n_free];
        let mut rhs = vec![0.0; self.n_free * d];
        let mut val = vec![0.0; d];
        let mut length = self.length(free);
        let mut last_decrease = f64::INFINITY;
        for sweep in 1..=cap {
            for (e, w) in weights.iter_mut().enumerate() {
                let (a, b) = self.edges[e];
                let l2: f64 = self
                    .pos(free, a)
                    .iter()
                    .zip(self.pos(free, b))
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum();
                *w = 1.0 / (l2 + eps2).sqrt();
            }
            for u in 0..self.n_free {
                diag[u] = 0.0;
                rhs[u * d..(u + 1) * d].fill(0.0);
                for &(e, w) in &plan.incident[u] {
                    diag[u] += weights[e];
                    if w < nf {
                        for c in 0..d {
                            rhs[u * d + c] += weights[e] * self.fixed[w * d + c];
                        }
                    }
                }
            }
            for &u in &plan.postorder {
                if let Some((p, e)) = plan.parent[u] {
                    let w = weights[e];
                    let f = w / diag[u];
                    diag[p] -= w * f;
                    for c in 0..d {
                        rhs[p * d + c] += f * rhs[u * d + c];
                    }
                }
            }
            let mut moved: f64 = 0.0;
            for &u in plan.postorder.iter().rev() {
                match plan.parent[u] {
                    Some((p, e)) => {
                        let w = weights[e];
                        for c in 0..d {
                            val[c] = (rhs[u * d + c] + w * free[p * d + c]) / diag[u];
                        }
                    }
                    None => {
                        for c in 0..d {
                            val[c] = rhs[u * d + c] / diag[u];
                        }
                    }
                }
                let mut m2 = 0.0;
                for c in 0..d {
                    m2 += (val[c] - free[u * d + c]).powi(2);
                    free[u * d + c] = val[c];
                }
                moved = moved.max(m2.sqrt());
            }
            let new_length = self.length(free);
            last_decrease = (length - new_length) / new_length.max(f64::MIN_POSITIVE);
            length = new_length;
            if last_decrease.abs() < tol && moved < tol * self.scale {
                return (sweep, true, last_decrease);
            }
        }
        (cap, false, last_decrease)
    }

    /// Damped Newton iterations on the smooth objective. The Hessian couples
    /// only tree neighbors, so each step is one block elimination. Returns
    /// true once the decrease and the step are below `tol`; false when an
    /// edge is (nearly) collapsed or no step decreases the length.
    fn newton(&self, plan: &Plan, free: &mut [f64], tol: f64, iters: usize) -> bool {
        let d = self.dim;
        let nf = self.n_fixed;
        let dd = d * d;
        let mut length = self.length(free);
        let mut diag = vec![0.0; self.n_free * dd];
        let mut off = vec![0.0; self.n_free * dd];
        let mut rhs = vec![0.0; self.n_free * d];
        let mut step = vec![0.0; self.n_free * d];
        let mut inv = vec![0.0; dd];
        let mut tmp = vec![0.0; dd];
        for _ in 0..iters {
            diag.fill(0.0);
            off.fill(0.0);
            rhs.fill(0.0);
            for (e, &(a, b)) in self.edges.iter().enumerate() {
                let len = self.edge_len(free, e);
                if len < 1e-9 * self.scale {
                    return false;
                }
                let (pa, pb) = (self.pos(free, a), self.pos(free, b));
                let u: Vec<f64> = (0..d).map(|c| (pa[c] - pb[c]) / len).collect();
                let h = |i: usize, j: usize| ((i == j) as u8 as f64 - u[i] * u[j]) / len;
                for (v, sign) in [(a, 1.0), (b, -1.0)] {
                    if v < nf {
                        continue;
                    }
                    let x = v - nf;
                    for i in 0..d {
                        rhs[x * d + i] -= sign * u[i];
                        for j in 0..d {
                            diag[x * dd + i * d + j] += h(i, j);
                        }
                    }
                }
                if a >= nf && b >= nf {
                    let (xa, xb) = (a - nf, b - nf);
                    let child = if plan.parent[xa].is_some_and(|(p, pe)| p == xb && pe == e) { xa } else { xb };
                    for i in 0..d {
                        for j in 0..d {
                            off[child * dd + i * d + j] = -h(i, j);
                        }
                    }
                }
            }
            for x in 0..self.n_free {
                let trace: f64 = (0..d).map(|i| diag[x * dd + i * d + i]).sum();
                for i in 0..d {
                    diag[x * dd + i * d + i] += 1e-12 * trace;
                }
            }
            for &x in &plan.postorder {
                let Some((p, _)) = plan.parent[x] else { continue };
                if !invert(&diag[x * dd..(x + 1) * dd], d, &mut inv) {
                    return false;
                }
                // tmp = C * inv where C is the symmetric coupling block.
                let c = &off[x * dd..(x + 1) * dd];
                matmul(c, &inv, d, &mut tmp);
                for i in 0..d {
                    for j in 0..d {
                        let s: f64 = (0..d).map(|k| tmp[i * d + k] * c[k * d + j]).sum();
                        diag[p * dd + i * d + j] -= s;
                    }
                    let r: f64 = (0..d).map(|k| tmp[i * d + k] * rhs[x * d + k]).sum();
                    rhs[p * d + i] -= r;
                }
            }
            for &x in plan.postorder.iter().rev() {
                if !invert(&diag[x * dd..(x + 1) * dd], d, &mut inv) {
                    return false;
                }
                let mut r: Vec<f64> = rhs[x * d..(x + 1) * d].to_vec();
                if let Some((p, _)) = plan.parent[x] {
                    let c = &off[x * dd..(x + 1) * dd];
                    for i in 0..d {
                        r[i] -= (0..d).map(|k| c[i * d + k] * step[p * d + k]).sum::<f64>();
                    }
                }
                for i in 0..d {
                    step[x * d + i] = (0..d).map(|k| inv[i * d + k] * r[k]).sum();
                }
            }
            let start = free.to_vec();
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..40 {
                for i in 0..free.len() {
                    free[i] = start[i] + t * step[i];
                }
                let trial = self.length(free);
                if trial <= length {
                    accepted = Some(trial);
                    break;
                }
                t *= 0.5;
            }
            let Some(trial) = accepted else {
                free.copy_from_slice(&start);
                return false;
            };
            let decrease = (length - trial) / trial.max(f64::MIN_POSITIVE);
            length = trial;
            let moved = step.chunks(d).map(|s| t * geom::norm(s)).fold(0.0, f64::max);
            if decrease < tol && moved < tol * self.scale {
                return true;
            }
        }
        false
    }

    /// Subproblem with the given edges contracted. Returns it together with
    /// the group index of every original vertex and, per reduced edge, its
    /// original edge index.
    fn merged(&self, contracted: &[usize]) -> (TreeProblem, Vec<usize>, Vec<usize>) {
        let v = self.n_fixed + self.n_free;
        let mut dsu = crate::topology::Dsu::new(v);
        for &e in contracted {
            let (a, b) = self.edges[e];
            dsu.union(a, b);
        }
        // Roots of groups holding a fixed vertex are fixed vertices because
        // the union keeps the smaller index.
        let mut group = vec![usize::MAX; v];
        let mut n_fixed = 0;
        for f in 0..self.n_fixed {
            group[f] = f;
            n_fixed += 1;
        }
        let mut next = n_fixed;
        let mut free_id = std::collections::HashMap::new();
        for u in self.n_fixed..v {
            let r = dsu.find(u);
            group[u] = if r < self.n_fixed {
                r
            } else {
                *free_id.entry(r).or_insert_with(|| {
                    next += 1;
                    next - 1
                })
            };
        }
        let mut edges = Vec::new();
        let mut origin = Vec::new();
        for (e, &(a, b)) in self.edges.iter().enumerate() {
            let (ga, gb) = (group[a], group[b]);
            if ga != gb {
                edges.push((ga, gb));
                origin.push(e);
            }
        }
        let reduced = TreeProblem {
            dim: self.dim,
            fixed: self.fixed.clone(),
            n_fixed,
            n_free: next - n_fixed,
            edges,
            scale: self.scale,
        };
        (reduced, group, origin)
    }

    /// Checks that every zero-length edge admits a subgradient of norm at
    /// most one. Returns the worst violation as (edge, descent direction for
    /// the detached side, free vertices of that side, excess).
    fn uncertified_collapse(&self, free: &[f64]) -> Option<(usize, Vec<f64>, Vec<usize>, f64)> {
        let zero = 1e-14 * self.scale;
        let d = self.dim;
        let v = self.n_fixed + self.n_free;
        let mut zadj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); v];
        let mut force = vec![vec![0.0; d]; v];
        for e in 0..self.edges.len() {
            let (a, b) = self.edges[e];
            let len = self.edge_len(free, e);
            if len <= zero {
                zadj[a].push((b, e));
                zadj[b].push((a, e));
            } else {
                let (pa, pb) = (self.pos(free, a), self.pos(free, b));
                for c in 0..d {
                    force[a][c] += (pa[c] - pb[c]) / len;
                    force[b][c] += (pb[c] - pa[c]) / len;
                }
            }
        }
        let mut visited = vec![false; v];
        let mut worst: Option<(usize, Vec<f64>, Vec<usize>, f64)> = None;
        // Fixed vertices come first, so a group holding one is rooted there.
        for root in 0..v {
            if visited[root] || zadj[root].is_empty() {
                continue;
            }
            let mut comp = vec![root];
            let mut parent = vec![(usize::MAX, usize::MAX); v];
            visited[root] = true;
            let mut i = 0;
            while i < comp.len() {
                let u = comp[i];
                for &(w, e) in &zadj[u] {
                    if !visited[w] {
                        visited[w] = true;
                        parent[w] = (u, e);
                        comp.push(w);
                    }
                }
                i += 1;
            }
            let mut subtree: Vec<Vec<usize>> = vec![Vec::new(); v];
            let mut sum: Vec<Vec<f64>> = vec![Vec::new(); v];
            for &u in comp.iter().rev() {
                let mut s = force[u].clone();
                let mut members = vec![u];
                for &(w, _) in &zadj[u] {
                    if parent[w].0 == u {
                        for c in 0..d {
                            s[c] += sum[w][c];
                        }
                        members.extend(subtree[w].iter().copied());
                    }
                }
                if u != root {
                    let excess = geom::norm(&s) - 1.0;
                    if excess > CERT_SLACK && worst.as_ref().is_none_or(|w| excess > w.3) {
                        let dir = geom::normalized(&s).map(|g| geom::scale(&g, -1.0)).unwrap_or_default();
                        worst = Some((parent[u].1, dir, members.clone(), excess));
                    }
                }
                sum[u] = s;
                subtree[u] = members;
            }
        }
        worst.map(|(e, dir, members, excess)| {
            let free_members = members.into_iter().filter(|&m| m >= self.n_fixed).map(|m| m - self.n_fixed).collect();
            (e, dir, free_members, excess)
        })
    }

    pub fn solve(&self, init: Vec<f64>, opts: &SolverOptions) -> Result<Solved> {
        self.solve_inner(init, opts, &vec![false; self.edges.len()], 0)
    }

    fn solve_inner(&self, init: Vec<f64>, opts: &SolverOptions, forbidden: &[bool], depth: usize) -> Result<Solved> {
        let mut free = init;
        if self.n_free == 0 {
            return Ok(Solved { free, sweeps: 0 });
        }
        let plan = self.plan();
        let min_fixed_gap = (0..self.n_fixed)
            .flat_map(|i| (i + 1..self.n_fixed).map(move |j| (i, j)))
            .map(|(i, j)| geom::dist(self.pos(&free, i), self.pos(&free, j)))
            .fold(f64::INFINITY, f64::min);
        let collapse_tol = (1e-5 * self.scale).min(0.1 * min_fixed_gap);
        let short_tol = (SHORT * self.scale).min(0.1 * min_fixed_gap);
        let mut forbidden = forbidden.to_vec();
        let mut total = 0;
        let rounds = 2 * self.edges.len() + 4;
        for _ in 0..rounds {
            // Sweep in chunks until converged or some edge is heading for a
            // collapse: already shorter than `collapse_tol`, or short and
            // still shrinking.
            let mut stalled = 0;
            let collapsed: Vec<usize> = loop {
                let before: Vec<f64> = (0..self.edges.len()).map(|e| self.edge_len(&free, e)).collect();
                let (s, ok, dec) = self.sweeps(&plan, &mut free, opts.tol, CHUNK);
                total += s;
                let shrinking = |e: usize| {
                    let len = self.edge_len(&free, e);
                    len < collapse_tol || (!ok && len < short_tol && len < 0.99 * before[e])
                };
                let candidates: Vec<usize> = (0..self.edges.len()).filter(|&e| !forbidden[e] && shrinking(e)).collect();
                if ok || !candidates.is_empty() {
                    break candidates;
                }
                stalled += 1;
                if stalled % NEWTON_EVERY == 0 && self.newton(&plan, &mut free, opts.tol, 50) {
                    break (0..self.edges.len())
                        .filter(|&e| !forbidden[e] && self.edge_len(&free, e) < collapse_tol)
                        .collect();
                }
                if total >= opts.max_sweeps {
                    return Err(Error::SolverFailure { sweeps: total, last_decrease: dec });
                }
            };
            if collapsed.is_empty() {
                return Ok(Solved { free, sweeps: total });
            }
            let (reduced, group, origin) = self.merged(&collapsed);
            let d = self.dim;
            let mut sub_init = vec![0.0; reduced.n_free * d];
            for u in 0..self.n_free {
                let g = group[self.n_fixed + u];
                if g >= reduced.n_fixed {
                    let gi = g - reduced.n_fixed;
                    sub_init[gi * d..(gi + 1) * d].copy_from_slice(&free[u * d..(u + 1) * d]);
                }
            }
            let sub_forbidden: Vec<bool> = origin.iter().map(|&e| forbidden[e]).collect();
            let sub = reduced.solve_inner(sub_init, opts, &sub_forbidden, depth + 1)?;
            total += sub.sweeps;
            for u in 0..self.n_free {
                let g = group[self.n_fixed + u];
                let p = reduced.pos(&sub.free, g).to_vec();
                free[u * d..(u + 1) * d].copy_from_slice(&p);
            }
            match self.uncertified_collapse(&free) {
                None => return Ok(Solved { free, sweeps: total }),
                Some((e, dir, members, _)) => {
                    forbidden[e] = true;
                    let step = 2.0 * collapse_tol;
                    for m in members {
                        for c in 0..d {
                            free[m * d + c] += step * dir[c];
                        }
                    }
                }
            }
        }
        // Out of active-set rounds: finish with plain sweeps.
        let (s, ok, dec) = self.sweeps(&plan, &mut free, opts.tol, opts.max_sweeps.saturating_sub(total).max(1));
        total += s;
        if !ok {
            return Err(Error::SolverFailure { sweeps: total, last_decrease: dec });
        }
        Ok(Solved { free, sweeps: total })
    }
}

/// Inverse of a small dense `d x d` matrix by Gauss-Jordan elimination.
fn invert(m: &[f64], d: usize, out: &mut [f64]) -> bool {
    let mut a = m.to_vec();
    out.fill(0.0);
    for i in 0..d {
        out[i * d + i] = 1.0;
    }
    for col in 0..d {
        let piv = (col..d).max_by(|&x, &y| a[x * d + col].abs().total_cmp(&a[y * d + col].abs())).expect("rows");
        let pv = a[piv * d + col];
        if pv.abs() < f64::MIN_POSITIVE || !pv.is_finite() {
            return false;
        }
        for k in 0..d {
            a.swap(col * d + k, piv * d + k);
            out.swap(col * d + k, piv * d + k);
        }
        for k in 0..d {
            a[col * d + k] /= pv;
            out[col * d + k] /= pv;
        }
        for r in 0..d {
            if r != col {
                let f = a[r * d + col];
                for k in 0..d {
                    a[r * d + k] -= f * a[col * d + k];
                    out[r * d + k] -= f * out[col * d + k];
                }
            }
        }
    }
    true
}

fn matmul(a: &[f64], b: &[f64], d: usize, out: &mut [f64]) {
    for i in 0..d {
        for j in 0..d {
            out[i * d + j] = (0..d).map(|k| a[i * d + k] * b[k * d + j]).sum();
        }
    }
}
