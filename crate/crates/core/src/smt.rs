//! Steiner minimal trees by search over full topologies.
//!
//! Full topologies are built by attaching terminals one at a time on every
//! edge. The shortest network for a partial topology never exceeds the one
//! for any of its completions (delete the later terminals and smooth the
//! resulting degree-two vertices), so partial optima are lower bounds and
//! branches above the incumbent are cut. Every full-topology optimum is
//! contracted to its combinatorial type; collapsed edges produce the lower
//! types.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

use crate::config_space::Configuration;
use crate::error::{Error, Result};
use crate::geom;
use crate::irls::{SolverOptions, TreeProblem};
use crate::local_min::{minimize_fixed_topology, Network};
use crate::topology::{default_budget, enumerate_full_topologies, insert_on_edge, SteinerTopology, TypeSignature};

/// Near-ties up to this relative gap are reported as fragile.
pub const FRAGILE_BAND: f64 = 1e-6;

/// Edges shorter than this fraction of the diameter count as collapsed.
pub const CONTRACT_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmtOptions {
    pub rel_tol: f64,
    pub budget: usize,
    /// Cut branches by partial lengths. Without it every full topology is
    /// solved from scratch.
    pub prune: bool,
    pub solver: SolverOptions,
}

impl Default for SmtOptions {
    fn default() -> Self {
        SmtOptions { rel_tol: 1e-9, budget: default_budget(), prune: true, solver: SolverOptions::default() }
    }
}

impl SmtOptions {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        SmtOptions { rel_tol, ..Default::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmtMinimum {
    pub signature: TypeSignature,
    /// Contracted shortest network of this type.
    pub network: Network,
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmtResult {
    /// Types within `rel_tol` of the minimum, shortest first.
    pub minima: Vec<SmtMinimum>,
    pub min_length: f64,
    pub ambiguous: bool,
    /// Another type lies within `FRAGILE_BAND` but outside `rel_tol`.
    pub fragile: bool,
    /// The shortest type not among the minima, when the search saw one.
    /// Exact only without pruning or when inside the fragile band.
    pub runner_up: Option<SmtMinimum>,
}

impl SmtResult {
    pub fn unique_type(&self) -> Option<&TypeSignature> {
        match self.minima.as_slice() {
            [only] => Some(&only.signature),
            _ => None,
        }
    }

    pub fn contains(&self, signature: &TypeSignature) -> bool {
        self.minima.iter().any(|m| &m.signature == signature)
    }

    pub fn minimum(&self, signature: &TypeSignature) -> Option<&SmtMinimum> {
        self.minima.iter().find(|m| &m.signature == signature)
    }
}

struct Leaf {
    length: f64,
    edges: Vec<(usize, usize)>,
    interior: Vec<f64>,
}

/// Farthest-first terminal order; spreading out the first terminals makes
/// the partial bounds tighter.
fn insertion_order(config: &Configuration) -> Vec<usize> {
    let n = config.n();
    let mut order = vec![0];
    let mut gap: Vec<f64> = (0..n).map(|i| geom::dist(config.point(i), config.point(0))).collect();
    while order.len() < n {
        let next = (0..n)
            .filter(|i| !order.contains(i))
            .max_by(|&a, &b| gap[a].total_cmp(&gap[b]).then(b.cmp(&a)))
            .expect("points remain");
        order.push(next);
        for i in 0..n {
            gap[i] = gap[i].min(geom::dist(config.point(i), config.point(next)));
        }
    }
    order
}

struct Search<'a> {
    config: &'a Configuration,
    n: usize,
    band: f64,
    solver: SolverOptions,
    best: f64,
    leaves: Vec<Leaf>,
}

impl Search<'_> {
    /// Solves the partial topology on the first `m` terminals. Interior
    /// vertex `j` carries id `n + j` in `edges`.
    fn solve_partial(&self, m: usize, edges: &[(usize, usize)], init: Vec<f64>) -> Result<(f64, Vec<f64>)> {
        let n = self.n;
        let d = self.config.dim();
        let remap = |v: usize| if v < n { v } else { v - n + m };
        let problem = TreeProblem {
            dim: d,
            fixed: self.config.coords()[..m * d].to_vec(),
            n_fixed: m,
            n_free: m - 2,
            edges: edges.iter().map(|&(a, b)| (remap(a), remap(b))).collect(),
            scale: self.config.diameter(),
        };
        let solved = problem.solve(init, &self.solver)?;
        Ok((problem.length(&solved.free), solved.free))
    }

    fn cutoff(&self) -> f64 {
        self.best * (1.0 + self.band) + 1e-12 * self.config.diameter()
    }

    fn descend(&mut self, m: usize, edges: Vec<(usize, usize)>, interior: Vec<f64>, length: f64) -> Result<()> {
        if m == self.n {
            if length <= self.cutoff() {
                self.best = self.best.min(length);
                self.leaves.push(Leaf { length, edges, interior });
            }
            return Ok(());
        }
        let n = self.n;
        let d = self.config.dim();
        let pos = |v: usize| -> &[f64] {
            if v < n {
                self.config.point(v)
            } else {
                &interior[(v - n) * d..(v - n + 1) * d]
            }
        };
        let mut children = Vec::with_capacity(edges.len());
        for e in 0..edges.len() {
            let (a, b) = edges[e];
            let grown = insert_on_edge(&edges, e, m, n + m - 2);
            let mut init = interior.clone();
            for c in 0..d {
                init.push((pos(a)[c] + pos(b)[c] + self.config.point(m)[c]) / 3.0);
            }
            let (len, free) = self.solve_partial(m + 1, &grown, init)?;
            children.push((len, grown, free));
        }
        children.sort_by(|x, y| x.0.total_cmp(&y.0));
        for (len, grown, free) in children {
            if len > self.cutoff() {
                break;
            }
            self.descend(m + 1, grown, free, len)?;
        }
        Ok(())
    }
}

fn minimum_spanning_tree_length(config: &Configuration) -> f64 {
    let n = config.n();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    best[0] = 0.0;
    let mut total = 0.0;
    for _ in 0..n {
        let u = (0..n).filter(|&i| !in_tree[i]).min_by(|&a, &b| best[a].total_cmp(&best[b])).expect("vertex left");
        in_tree[u] = true;
        total += best[u];
        for v in 0..n {
            if !in_tree[v] {
                best[v] = best[v].min(geom::dist(config.point(u), config.point(v)));
            }
        }
    }
    total
}

/// All shortest networks of `config`, one per combinatorial type, within
/// `rel_tol` of the minimum length.
pub fn steiner_minimal_trees(config: &Configuration, opts: &SmtOptions) -> Result<SmtResult> {
    let n = config.n();
    if n > opts.budget {
        return Err(Error::BudgetExceeded { n, cap: opts.budget });
    }
    if n <= 2 {
        let edges = if n == 2 { vec![(0, 1)] } else { vec![] };
        let net = Network::new(SteinerTopology::new(n, 0, edges)?, config.clone(), vec![])?;
        let min = SmtMinimum { signature: net.signature(), length: net.length(), network: net };
        return Ok(SmtResult {
            min_length: min.length,
            minima: vec![min],
            ambiguous: false,
            fragile: false,
            runner_up: None,
        });
    }
    let band = opts.rel_tol.max(FRAGILE_BAND);
    let candidates: Vec<(f64, Network)> = if opts.prune {
        let order = insertion_order(config);
        let permuted = config.permuted(&order)?;
        let mut search = Search {
            config: &permuted,
            n,
            band,
            solver: opts.solver,
            best: minimum_spanning_tree_length(config),
            leaves: Vec::new(),
        };
        let start = vec![(0, n), (1, n), (2, n)];
        let d = config.dim();
        let init: Vec<f64> = (0..d).map(|c| (0..3).map(|t| permuted.point(t)[c]).sum::<f64>() / 3.0).collect();
        let (len, free) = search.solve_partial(3, &start, init)?;
        search.descend(3, start, free, len)?;
        search
            .leaves
            .into_iter()
            .map(|leaf| {
                let edges = leaf
                    .edges
                    .iter()
                    .map(|&(a, b)| {
                        let back = |v: usize| if v < n { order[v] } else { v };
                        (back(a), back(b))
                    })
                    .collect();
                let interior = leaf.interior.chunks(d).map(|c| c.to_vec()).collect();
                let net = Network::new(SteinerTopology::new(n, n - 2, edges)?, config.clone(), interior)?;
                Ok((leaf.length, net))
            })
            .collect::<Result<_>>()?
    } else {
        enumerate_full_topologies(n, opts.budget)?
            .iter()
            .map(|g| minimize_fixed_topology(config, g, &opts.solver).map(|net| (net.length(), net)))
            .collect::<Result<_>>()?
    };
    collect_minima(config, candidates, opts.rel_tol)
}

fn collect_minima(config: &Configuration, mut candidates: Vec<(f64, Network)>, rel_tol: f64) -> Result<SmtResult> {
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    let min_length = candidates.first().map(|c| c.0).ok_or_else(|| Error::SearchFailed("no topology solved".into()))?;
    let tol = CONTRACT_TOL * config.diameter();
    let keep = min_length * (1.0 + rel_tol);
    let mut by_type: BTreeMap<TypeSignature, SmtMinimum> = BTreeMap::new();
    let mut runner_up: Option<SmtMinimum> = None;
    for (length, net) in candidates {
        if length > keep && runner_up.is_some() {
            break;
        }
        let reduced = net.contracted(tol)?;
        let signature = reduced.signature();
        if length <= keep {
            by_type.entry(signature.clone()).or_insert(SmtMinimum { signature, network: reduced, length });
        } else if !by_type.contains_key(&signature) {
            runner_up = Some(SmtMinimum { signature, network: reduced, length });
        }
    }
    let mut minima: Vec<SmtMinimum> = by_type.into_values().collect();
    minima.sort_by(|a, b| a.length.total_cmp(&b.length).then_with(|| a.signature.cmp(&b.signature)));
    let fragile = runner_up.as_ref().is_some_and(|r| r.length <= min_length * (1.0 + FRAGILE_BAND));
    Ok(SmtResult { ambiguous: minima.len() > 1, min_length, minima, fragile, runner_up })
}

/// True when exactly one type is shortest; the result is the witness.
pub fn is_unambiguous(config: &Configuration, opts: &SmtOptions) -> Result<(bool, SmtResult)> {
    let result = steiner_minimal_trees(config, opts)?;
    Ok((!result.ambiguous, result))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellMembership {
    UnambiguousInterior,
    Ambiguous,
    Outside,
}

impl fmt::Display for CellMembership {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CellMembership::UnambiguousInterior => "unambiguous-interior",
            CellMembership::Ambiguous => "ambiguous",
            CellMembership::Outside => "outside",
        })
    }
}

pub fn cell_membership(config: &Configuration, signature: &TypeSignature, opts: &SmtOptions) -> Result<CellMembership> {
    let result = steiner_minimal_trees(config, opts)?;
    Ok(if !result.contains(signature) {
        CellMembership::Outside
    } else if result.ambiguous {
        CellMembership::Ambiguous
    } else {
        CellMembership::UnambiguousInterior
    })
}

/// The five shortest-network types of three labeled points in the plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Type3 {
    FullCcw,
    FullCw,
    #[serde(rename = "path-A")]
    PathA,
    #[serde(rename = "path-B")]
    PathB,
    #[serde(rename = "path-C")]
    PathC,
}

impl fmt::Display for Type3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Type3::FullCcw => "full-ccw",
            Type3::FullCw => "full-cw",
            Type3::PathA => "path-A",
            Type3::PathB => "path-B",
            Type3::PathC => "path-C",
        })
    }
}

impl Type3 {
    fn path(vertex: usize) -> Type3 {
        [Type3::PathA, Type3::PathB, Type3::PathC][vertex]
    }

    /// Reads the type off a contracted three-terminal network.
    pub fn of_network(net: &Network) -> Result<Type3> {
        let g = net.topology();
        if g.n() != 3 || net.dim() != 2 {
            return Err(Error::Precondition("need three planar terminals".into()));
        }
        let deg = g.degrees();
        match g.k() {
            1 => {
                let s = net.position(3);
                let dir = |t: usize| geom::sub(net.position(t), s);
                let ccw = geom::ccw_angle(&dir(0), &dir(1)) < geom::ccw_angle(&dir(0), &dir(2));
                Ok(if ccw { Type3::FullCcw } else { Type3::FullCw })
            }
            0 => (0..3)
                .find(|&v| deg[v] == 2)
                .map(Type3::path)
                .ok_or_else(|| Error::Degenerate("three-terminal tree without a middle vertex".into())),
            _ => Err(Error::InvalidTopology("three terminals allow at most one interior vertex".into())),
        }
    }
}

/// Closed-form type of the shortest network of a labeled triangle: a path
/// through the vertex whose angle is at least 120 degrees, otherwise the
/// full tree oriented like the triangle.
pub fn classify3(config: &Configuration) -> Result<Type3> {
    if config.n() != 3 || config.dim() != 2 {
        return Err(Error::Precondition("classify3 needs three points in the plane".into()));
    }
    let p: Vec<&[f64]> = config.points().collect();
    for v in 0..3 {
        let a = geom::sub(p[(v + 1) % 3], p[v]);
        let b = geom::sub(p[(v + 2) % 3], p[v]);
        if geom::angle_between(&a, &b) >= 2.0 * std::f64::consts::PI / 3.0 {
            return Ok(Type3::path(v));
        }
    }
    Ok(if geom::orient2(p[0], p[1], p[2]) > 0.0 { Type3::FullCcw } else { Type3::FullCw })
}
