//! Partially ordered trees: terminals are labeled `t1..tn` and ordered,
//! interior (Steiner) vertices `s1..sk` are interchangeable.
//!
//! Vertex ids are `0..n` for terminals followed by `n..n+k` for interior
//! vertices. Two topologies are combinatorially equivalent exactly when their
//! [`TypeSignature`]s agree; in the plane the signature can additionally
//! record the counterclockwise order of edges around every vertex.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom;

/// Environment variable overriding the enumeration cap.
pub const BUDGET_ENV: &str = "STEINER_LAB_BUDGET";
pub const DEFAULT_BUDGET: usize = 9;

/// Largest `n` for which full topologies are enumerated.
pub fn default_budget() -> usize {
    std::env::var(BUDGET_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_BUDGET)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TopologyJson", into = "TopologyJson")]
pub struct SteinerTopology {
    n: usize,
    k: usize,
    edges: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct TopologyJson {
    pub n: usize,
    pub interior: usize,
    pub edges: Vec<[String; 2]>,
}

impl TryFrom<TopologyJson> for SteinerTopology {
    type Error = Error;

    fn try_from(value: TopologyJson) -> Result<Self> {
        let parse = |s: &str| -> Result<usize> {
            let bad = || Error::InvalidTopology(format!("bad vertex id {s:?}"));
            let (kind, idx) = s.split_at(1);
            let idx: usize = idx.parse().map_err(|_| bad())?;
            match kind {
                "t" if (1..=value.n).contains(&idx) => Ok(idx - 1),
                "s" if (1..=value.interior).contains(&idx) => Ok(value.n + idx - 1),
                _ => Err(bad()),
            }
        };
        let edges = value
            .edges
            .iter()
            .map(|[a, b]| Ok((parse(a)?, parse(b)?)))
            .collect::<Result<Vec<_>>>()?;
        SteinerTopology::new(value.n, value.interior, edges)
    }
}

impl From<SteinerTopology> for TopologyJson {
    fn from(value: SteinerTopology) -> Self {
        TopologyJson {
            n: value.n,
            interior: value.k,
            edges: value
                .edges
                .iter()
                .map(|&(a, b)| [value.vertex_name(a), value.vertex_name(b)])
                .collect(),
        }
    }
}

/// Canonical encoding of a combinatorial type.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TypeSignature(pub String);

impl fmt::Display for TypeSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TypeSignature {
    /// Whether the encoded type has every terminal at degree 1 and every
    /// interior vertex at degree 3.
    pub fn is_full(&self) -> bool {
        self.parse().map(|t| t.is_full()).unwrap_or(false)
    }

    pub fn is_planar(&self) -> bool {
        self.0.starts_with("P|")
    }

    /// Rebuilds a topology with the encoded type (interior numbering is
    /// arbitrary). Planar rotation data is not reconstructed.
    pub fn parse(&self) -> Result<SteinerTopology> {
        let body = self
            .0
            .split_once('|')
            .map(|(_, b)| b)
            .ok_or_else(|| Error::InvalidTopology(format!("malformed signature {}", self.0)))?;
        let bytes = body.as_bytes();
        let mut pos = 0;
        let mut terminals = 0;
        let mut interior = 0;
        let mut raw: Vec<(Node, Node)> = Vec::new();
        #[derive(Clone, Copy)]
        enum Node {
            T(usize),
            S(usize),
        }
        fn parse_node(
            bytes: &[u8],
            pos: &mut usize,
            terminals: &mut usize,
            interior: &mut usize,
            raw: &mut Vec<(Node, Node)>,
        ) -> Option<Node> {
            let node = match bytes.get(*pos)? {
                b't' => {
                    *pos += 1;
                    let start = *pos;
                    while bytes.get(*pos).is_some_and(u8::is_ascii_digit) {
                        *pos += 1;
                    }
                    let idx: usize = std::str::from_utf8(&bytes[start..*pos]).ok()?.parse().ok()?;
                    *terminals = (*terminals).max(idx);
                    Node::T(idx - 1)
                }
                b's' => {
                    *pos += 1;
                    *interior += 1;
                    Node::S(*interior - 1)
                }
                _ => return None,
            };
            if bytes.get(*pos) != Some(&b'(') {
                return None;
            }
            *pos += 1;
            while bytes.get(*pos) != Some(&b')') {
                let child = parse_node(bytes, pos, terminals, interior, raw)?;
                raw.push((node, child));
                if bytes.get(*pos) == Some(&b',') {
                    *pos += 1;
                }
            }
            *pos += 1;
            Some(node)
        }
        parse_node(bytes, &mut pos, &mut terminals, &mut interior, &mut raw)
            .filter(|_| pos == bytes.len())
            .ok_or_else(|| Error::InvalidTopology(format!("malformed signature {}", self.0)))?;
        let id = |node: Node| match node {
            Node::T(i) => i,
            Node::S(j) => terminals + j,
        };
        let edges = raw.into_iter().map(|(a, b)| (id(a), id(b))).collect();
        SteinerTopology::new(terminals, interior, edges)
    }
}

/// Counterclockwise neighbor order at every vertex of a planar embedding.
pub type PlanarOrders = Vec<Vec<usize>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MoustacheKind {
    OneSided,
    TwoSided,
}

/// A moustache of a topology: leaves adjacent to a common anchor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Moustache {
    pub kind: MoustacheKind,
    pub anchor: usize,
    /// One leaf for one-sided moustaches, two (ascending) for two-sided ones.
    pub leaves: Vec<usize>,
}

impl Moustache {
    pub fn smallest_leaf(&self) -> usize {
        self.leaves[0]
    }
}

/// How a shave renumbered the vertices. Old ids refer to the unshaved
/// topology, new ids to the shaved one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShaveMap {
    pub moustache: Moustache,
    /// For every new vertex, the old vertex it came from.
    pub source: Vec<usize>,
    /// New id of the anchor.
    pub anchor_new: usize,
    /// Whether the anchor was interior before shaving (two-sided only).
    pub anchor_promoted: bool,
}

impl SteinerTopology {
    pub fn new(n: usize, k: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let t = SteinerTopology { n, k, edges };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        let v = self.n + self.k;
        if self.n == 0 {
            return Err(Error::InvalidTopology("need at least one terminal".into()));
        }
        if self.edges.len() + 1 != v {
            return Err(Error::InvalidTopology(format!(
                "a tree on {v} vertices has {} edges, got {}",
                v - 1,
                self.edges.len()
            )));
        }
        let mut dsu = Dsu::new(v);
        for &(a, b) in &self.edges {
            if a >= v || b >= v || a == b {
                return Err(Error::InvalidTopology(format!("bad edge ({a}, {b})")));
            }
            if !dsu.union(a, b) {
                return Err(Error::InvalidTopology("edges contain a cycle".into()));
            }
        }
        let deg = self.degrees();
        if let Some(w) = (self.n..v).find(|&w| deg[w] < 3) {
            return Err(Error::InvalidTopology(format!(
                "interior vertex {} has degree {}",
                self.vertex_name(w),
                deg[w]
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of interior vertices.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_vertices(&self) -> usize {
        self.n + self.k
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn is_terminal(&self, v: usize) -> bool {
        v < self.n
    }

    pub fn vertex_name(&self, v: usize) -> String {
        if v < self.n {
            format!("t{}", v + 1)
        } else {
            format!("s{}", v - self.n + 1)
        }
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_vertices()];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_vertices()];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    pub fn is_full(&self) -> bool {
        let deg = self.degrees();
        (0..self.n).all(|v| deg[v] == 1) && (self.n..self.num_vertices()).all(|v| deg[v] == 3)
    }

    /// Renumbers interior vertices: new interior `j` is old interior `perm[j]`.
    pub fn relabel_interior(&self, perm: &[usize]) -> Result<Self> {
        let mut inv = vec![0; self.k];
        for (j, &p) in perm.iter().enumerate() {
            inv[p] = j;
        }
        let map = |v: usize| if v < self.n { v } else { self.n + inv[v - self.n] };
        Self::new(self.n, self.k, self.edges.iter().map(|&(a, b)| (map(a), map(b))).collect())
    }

    /// Canonical signature. Without planar orders the encoding is the
    /// sorted-children code of the tree rooted at `t1`; with planar orders
    /// children follow the counterclockwise order after the parent edge (and
    /// the smallest rotation at the root), so orientation is part of the type.
    pub fn canonicalize(&self, planar: Option<&PlanarOrders>) -> TypeSignature {
        let adj = match planar {
            Some(orders) => orders.clone(),
            None => self.adjacency(),
        };
        let code = self.encode(0, None, &adj, planar.is_some());
        TypeSignature(format!("{}|{code}", if planar.is_some() { "P" } else { "A" }))
    }

    fn encode(&self, u: usize, parent: Option<usize>, adj: &[Vec<usize>], planar: bool) -> String {
        let nbrs = &adj[u];
        let mut children: Vec<String> = match parent {
            Some(p) => {
                let at = nbrs.iter().position(|&x| x == p).expect("parent is a neighbor");
                (1..nbrs.len())
                    .map(|i| nbrs[(at + i) % nbrs.len()])
                    .map(|c| self.encode(c, Some(u), adj, planar))
                    .collect()
            }
            None => nbrs.iter().map(|&c| self.encode(c, Some(u), adj, planar)).collect(),
        };
        if !planar {
            children.sort();
        } else if parent.is_none() && !children.is_empty() {
            let len = children.len();
            let best = (0..len)
                .min_by(|&i, &j| {
                    let a = (0..len).map(|x| &children[(i + x) % len]);
                    let b = (0..len).map(|x| &children[(j + x) % len]);
                    a.cmp(b)
                })
                .unwrap_or(0);
            children.rotate_left(best);
        }
        let label = if u < self.n { format!("t{}", u + 1) } else { "s".to_string() };
        format!("{label}({})", children.join(","))
    }

    /// Counterclockwise neighbor orders read off planar vertex positions
    /// (`positions[v]` for every vertex id).
    pub fn planar_orders(&self, positions: &[Vec<f64>]) -> PlanarOrders {
        self.adjacency()
            .into_iter()
            .enumerate()
            .map(|(u, mut nbrs)| {
                let angle = |v: &usize| {
                    let d = geom::sub(&positions[*v], &positions[u]);
                    d[1].atan2(d[0])
                };
                nbrs.sort_by(|a, b| angle(a).total_cmp(&angle(b)));
                nbrs
            })
            .collect()
    }

    /// Signature of a straight-line realization: planar when `d = 2`.
    pub fn signature_at(&self, positions: &[Vec<f64>]) -> TypeSignature {
        if positions.first().is_some_and(|p| p.len() == 2) {
            self.canonicalize(Some(&self.planar_orders(positions)))
        } else {
            self.canonicalize(None)
        }
    }

    /// Merges vertices joined by edges shorter than `tol` and returns the
    /// combinatorial type together with the position of every new vertex.
    pub fn contract(&self, positions: &[Vec<f64>], tol: f64) -> Result<(SteinerTopology, Vec<Vec<f64>>)> {
        let v = self.num_vertices();
        let mut dsu = Dsu::new(v);
        for &(a, b) in &self.edges {
            if geom::dist(&positions[a], &positions[b]) < tol {
                dsu.union(a, b);
            }
        }
        let mut group_terminal: BTreeMap<usize, usize> = BTreeMap::new();
        for t in 0..self.n {
            if let Some(other) = group_terminal.insert(dsu.find(t), t) {
                return Err(Error::Degenerate(format!(
                    "terminals {} and {} merge under contraction",
                    self.vertex_name(other),
                    self.vertex_name(t)
                )));
            }
        }
        let mut new_id = vec![usize::MAX; v];
        let mut root_id: BTreeMap<usize, usize> = BTreeMap::new();
        for t in 0..self.n {
            root_id.insert(dsu.find(t), t);
        }
        let mut next = self.n;
        for u in self.n..v {
            let r = dsu.find(u);
            let id = *root_id.entry(r).or_insert_with(|| {
                next += 1;
                next - 1
            });
            new_id[u] = id;
        }
        for t in 0..self.n {
            new_id[t] = t;
        }
        let mut new_positions = vec![Vec::new(); next];
        for u in 0..v {
            if new_positions[new_id[u]].is_empty() || u < self.n {
                new_positions[new_id[u]] = positions[u].clone();
            }
        }
        let edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .map(|&(a, b)| (new_id[a], new_id[b]))
            .filter(|(a, b)| a != b)
            .collect();
        let topo = SteinerTopology::new(self.n, next - self.n, edges)?;
        Ok((topo, new_positions))
    }

    /// All one- and two-sided moustaches.
    pub fn find_moustaches(&self) -> Vec<Moustache> {
        let deg = self.degrees();
        let adj = self.adjacency();
        let is_leaf = |v: usize| v < self.n && deg[v] == 1;
        let mut out = Vec::new();
        for v in 0..self.num_vertices() {
            let mut leaves: Vec<usize> = adj[v].iter().copied().filter(|&p| is_leaf(p)).collect();
            leaves.sort_unstable();
            match deg[v] {
                2 if v < self.n => out.extend(leaves.iter().map(|&p| Moustache {
                    kind: MoustacheKind::OneSided,
                    anchor: v,
                    leaves: vec![p],
                })),
                3 => {
                    for i in 0..leaves.len() {
                        for j in i + 1..leaves.len() {
                            out.push(Moustache {
                                kind: MoustacheKind::TwoSided,
                                anchor: v,
                                leaves: vec![leaves[i], leaves[j]],
                            });
                        }
                    }
                }
                _ => {}
            }
        }
        out.sort_by_key(|m| (m.leaves.clone(), m.anchor));
        out
    }

    /// Removes a moustache. For a two-sided moustache with interior anchor,
    /// the anchor becomes a terminal that takes the smaller leaf label; the
    /// remaining terminals keep their relative order.
    pub fn shave(&self, m: &Moustache) -> Result<(SteinerTopology, ShaveMap)> {
        if !self.find_moustaches().contains(m) {
            return Err(Error::Precondition(format!("{m:?} is not a moustache of this topology")));
        }
        let promoted = m.kind == MoustacheKind::TwoSided && m.anchor >= self.n;
        let mut terminal_sources = Vec::new();
        for t in 0..self.n {
            if promoted && t == m.leaves[0] {
                terminal_sources.push(m.anchor);
            } else if !m.leaves.contains(&t) {
                terminal_sources.push(t);
            }
        }
        let interior_sources: Vec<usize> =
            (self.n..self.num_vertices()).filter(|&w| !(promoted && w == m.anchor)).collect();
        let source: Vec<usize> = terminal_sources.iter().chain(&interior_sources).copied().collect();
        let mut new_of = vec![usize::MAX; self.num_vertices()];
        for (new, &old) in source.iter().enumerate() {
            new_of[old] = new;
        }
        let edges = self
            .edges
            .iter()
            .filter(|(a, b)| !m.leaves.contains(a) && !m.leaves.contains(b))
            .map(|&(a, b)| (new_of[a], new_of[b]))
            .collect();
        let topo = SteinerTopology::new(terminal_sources.len(), interior_sources.len(), edges)?;
        let map = ShaveMap {
            moustache: m.clone(),
            anchor_new: new_of[m.anchor],
            anchor_promoted: promoted,
            source,
        };
        Ok((topo, map))
    }

    /// Adds a moustache at `anchor`, the inverse of [`SteinerTopology::shave`].
    ///
    /// `leaf_labels` are the terminal labels (0-based, in the grown topology)
    /// that the new leaves receive; the old terminals fill the remaining
    /// labels in order. With `promote` the anchor (a terminal) becomes an
    /// interior vertex, which is the two-sided growth from a degree-1
    /// terminal. Returns the grown topology and, for every old vertex, its
    /// new id.
    pub fn grow(&self, anchor: usize, leaf_labels: &[usize], promote: bool) -> Result<(SteinerTopology, Vec<usize>)> {
        if promote && (leaf_labels.len() != 2 || anchor >= self.n) {
            return Err(Error::Precondition("promotion needs a terminal anchor and two leaves".into()));
        }
        if leaf_labels.is_empty() || leaf_labels.len() > 2 {
            return Err(Error::Precondition("a moustache has one or two leaves".into()));
        }
        let new_n = self.n + leaf_labels.len() - usize::from(promote);
        if leaf_labels.iter().any(|&l| l >= new_n) || (leaf_labels.len() == 2 && leaf_labels[0] == leaf_labels[1]) {
            return Err(Error::Precondition(format!("leaf labels {leaf_labels:?} out of range")));
        }
        let kept: Vec<usize> = (0..self.n).filter(|&t| !(promote && t == anchor)).collect();
        let mut old_to_new = vec![usize::MAX; self.num_vertices()];
        let mut slots = (0..new_n).filter(|l| !leaf_labels.contains(l));
        for &t in &kept {
            old_to_new[t] = slots.next().expect("slot count matches");
        }
        for w in self.n..self.num_vertices() {
            old_to_new[w] = new_n + (w - self.n);
        }
        let new_k = self.k + usize::from(promote);
        if promote {
            old_to_new[anchor] = new_n + self.k;
        }
        let mut edges: Vec<(usize, usize)> =
            self.edges.iter().map(|&(a, b)| (old_to_new[a], old_to_new[b])).collect();
        for &l in leaf_labels {
            edges.push((old_to_new[anchor], l));
        }
        Ok((SteinerTopology::new(new_n, new_k, edges)?, old_to_new))
    }
}

/// Inserts terminal `terminal` on edge `edge` through the new interior vertex
/// `steiner`, the single step of the full-topology enumeration.
pub(crate) fn insert_on_edge(edges: &[(usize, usize)], edge: usize, terminal: usize, steiner: usize) -> Vec<(usize, usize)> {
    let mut out = edges.to_vec();
    let (a, b) = out[edge];
    out[edge] = (a, steiner);
    out.push((steiner, b));
    out.push((terminal, steiner));
    out
}

/// All full Steiner topologies on `n >= 3` terminals, generated by attaching
/// terminal `i + 1` through a new interior vertex on every edge of each
/// topology for the first `i` terminals. There are `(2n - 5)!!` of them.
pub fn enumerate_full_topologies(n: usize, budget: usize) -> Result<Vec<SteinerTopology>> {
    if n < 3 {
        return Err(Error::Precondition("full topologies need n >= 3".into()));
    }
    if n > budget {
        return Err(Error::BudgetExceeded { n, cap: budget });
    }
    // Interior vertex j (0-based) has id n + j throughout.
    let mut layer: Vec<Vec<(usize, usize)>> = vec![vec![(0, n), (1, n), (2, n)]];
    for t in 3..n {
        let steiner = n + t - 2;
        layer = layer
            .iter()
            .flat_map(|edges| (0..edges.len()).map(move |e| insert_on_edge(edges, e, t, steiner)))
            .collect();
    }
    layer.into_iter().map(|edges| SteinerTopology::new(n, n - 2, edges)).collect()
}

/// `(2n - 5)!!`, the number of full topologies on `n >= 3` terminals.
pub fn full_topology_count(n: usize) -> u64 {
    (1..=(2 * n as u64).saturating_sub(5)).step_by(2).product()
}

pub(crate) struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    pub fn new(n: usize) -> Self {
        Dsu { parent: (0..n).collect() }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when `a` and `b` were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn star3() -> SteinerTopology {
        SteinerTopology::new(3, 1, vec![(0, 3), (1, 3), (2, 3)]).unwrap()
    }

    fn path(order: [usize; 3]) -> SteinerTopology {
        SteinerTopology::new(3, 0, vec![(order[0], order[1]), (order[1], order[2])]).unwrap()
    }

    /// Full 4-terminal topology pairing `{a, b}` at s1 and `{c, d}` at s2.
    fn full4(a: usize, b: usize, c: usize, d: usize) -> SteinerTopology {
        SteinerTopology::new(4, 2, vec![(a, 4), (b, 4), (4, 5), (c, 5), (d, 5)]).unwrap()
    }

    #[test]
    fn square_trees_are_inequivalent() {
        // Solid tree pairs {A,B},{C,D}; dashed pairs {A,D},{B,C}.
        let solid = full4(0, 1, 2, 3);
        let dashed = full4(0, 3, 1, 2);
        assert_ne!(solid.canonicalize(None), dashed.canonicalize(None));
    }

    #[test]
    fn interior_relabeling_keeps_signature() {
        let g = full4(0, 1, 2, 3);
        let r = g.relabel_interior(&[1, 0]).unwrap();
        assert_ne!(g.edges(), r.edges());
        assert_eq!(g.canonicalize(None), r.canonicalize(None));
    }

    #[test]
    fn terminal_order_matters() {
        assert_ne!(path([0, 1, 2]).canonicalize(None), path([1, 0, 2]).canonicalize(None));
        assert_eq!(path([0, 1, 2]).canonicalize(None), path([2, 1, 0]).canonicalize(None));
    }

    #[test]
    fn planar_orientation_is_recorded() {
        let g = star3();
        let ccw = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![0.3, 0.3]];
        let mut cw = ccw.clone();
        cw.swap(0, 1);
        assert_ne!(g.signature_at(&ccw), g.signature_at(&cw));
        // Rotating the picture does not change the planar type.
        let rotated: Vec<Vec<f64>> = ccw.iter().map(|p| geom::rotate2(p, 2.0)).collect();
        assert_eq!(g.signature_at(&ccw), g.signature_at(&rotated));
    }

    #[test]
    fn signatures_parse_back() {
        for g in enumerate_full_topologies(6, 9).unwrap() {
            let sig = g.canonicalize(None);
            assert_eq!(sig.parse().unwrap().canonicalize(None), sig);
            assert!(sig.is_full());
        }
        assert!(!path([0, 1, 2]).canonicalize(None).is_full());
    }

    /// Independent count: brute-force all trees on `n` labeled terminals and
    /// `n - 2` unlabeled degree-3 vertices via Pruefer sequences, dedup by
    /// signature.
    fn brute_force_full_count(n: usize) -> usize {
        let v = 2 * n - 2;
        let k = n - 2;
        let mut seen = BTreeSet::new();
        let mut seq = vec![0usize; v - 2];
        loop {
            let mut deg = vec![1usize; v];
            for &x in &seq {
                deg[x] += 1;
            }
            if (0..n).all(|t| deg[t] == 1) && (n..v).all(|w| deg[w] == 3) {
                let mut edges = Vec::new();
                let mut d = deg.clone();
                for &x in &seq {
                    let leaf = (0..v).find(|&l| d[l] == 1).unwrap();
                    edges.push((leaf, x));
                    d[leaf] -= 1;
                    d[x] -= 1;
                }
                let rest: Vec<usize> = (0..v).filter(|&l| d[l] == 1).collect();
                edges.push((rest[0], rest[1]));
                seen.insert(SteinerTopology::new(n, k, edges).unwrap().canonicalize(None));
            }
            let mut i = 0;
            loop {
                if i == seq.len() {
                    return seen.len();
                }
                seq[i] += 1;
                if seq[i] < v {
                    break;
                }
                seq[i] = 0;
                i += 1;
            }
        }
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(brute_force_full_count(3), 1);
        assert_eq!(brute_force_full_count(4), 3);
        assert_eq!(brute_force_full_count(5), 15);
        for n in 3..=7 {
            let all = enumerate_full_topologies(n, 9).unwrap();
            assert_eq!(all.len() as u64, full_topology_count(n));
            let sigs: BTreeSet<_> = all.iter().map(|g| g.canonicalize(None)).collect();
            assert_eq!(sigs.len(), all.len());
            assert!(all.iter().all(SteinerTopology::is_full));
        }
        assert!(matches!(enumerate_full_topologies(10, 9), Err(Error::BudgetExceeded { n: 10, cap: 9 })));
    }

    #[test]
    fn contraction_cases() {
        let g = full4(0, 1, 2, 3);
        let pos = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
            vec![0.5, 0.3],
            vec![0.5, 0.7],
        ];
        let (same, _) = g.contract(&pos, 1e-7).unwrap();
        assert_eq!(same.canonicalize(None), g.canonicalize(None));

        let mut x = pos.clone();
        x[4] = vec![0.5, 0.5];
        x[5] = vec![0.5, 0.5];
        let (xt, xp) = g.contract(&x, 1e-7).unwrap();
        assert_eq!(xt.k(), 1);
        assert_eq!(xt.degrees()[4], 4);
        assert_eq!(xp[4], vec![0.5, 0.5]);

        let s = star3();
        let pos = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![2.0, 0.1], vec![1.0, 0.0]];
        let (pt, _) = s.contract(&pos, 1e-7).unwrap();
        assert_eq!(pt.canonicalize(None), path([0, 1, 2]).canonicalize(None));

        let two = SteinerTopology::new(2, 0, vec![(0, 1)]).unwrap();
        assert!(matches!(two.contract(&[vec![0.0], vec![0.0]], 1e-7), Err(Error::Degenerate(_))));
    }

    #[test]
    fn moustache_examples() {
        let ms = star3().find_moustaches();
        assert_eq!(ms.len(), 3);
        assert!(ms.iter().all(|m| m.kind == MoustacheKind::TwoSided && m.anchor == 3));

        let ms = path([0, 1, 2]).find_moustaches();
        assert_eq!(ms.len(), 2);
        assert!(ms.iter().all(|m| m.kind == MoustacheKind::OneSided && m.anchor == 1));

        let ms = full4(0, 1, 2, 3).find_moustaches();
        assert_eq!(ms.len(), 2);
    }

    #[test]
    fn shave_examples() {
        let s = star3();
        let m = s.find_moustaches()[0].clone(); // leaves {t1, t2}
        let (g, map) = s.shave(&m).unwrap();
        assert_eq!((g.n(), g.k()), (2, 0));
        assert_eq!(map.source, vec![3, 2]);

        let p = path([0, 1, 2]);
        let m = p.find_moustaches()[0].clone();
        let (g, _) = p.shave(&m).unwrap();
        assert_eq!(g.edges(), &[(0, 1)]);

        let f = full4(0, 1, 2, 3);
        let m = f.find_moustaches()[0].clone();
        let (g, _) = f.shave(&m).unwrap();
        assert!(g.is_full());
        assert_eq!((g.n(), g.k()), (3, 1));
    }

    #[test]
    fn grow_inverts_shave() {
        for g in enumerate_full_topologies(6, 9).unwrap().into_iter().take(30) {
            for m in g.find_moustaches() {
                let (small, map) = g.shave(&m).unwrap();
                let (back, _) = small.grow(map.anchor_new, &m.leaves, map.anchor_promoted).unwrap();
                assert_eq!(back.canonicalize(None), g.canonicalize(None));
            }
        }
    }

    fn arb_full(n: usize) -> impl Strategy<Value = SteinerTopology> {
        let count = full_topology_count(n) as usize;
        (0..count).prop_map(move |i| enumerate_full_topologies(n, 9).unwrap().swap_remove(i))
    }

    proptest! {
        #[test]
        fn signature_invariant_under_interior_permutation(
            g in (4usize..8).prop_flat_map(arb_full),
            seed in any::<u64>(),
        ) {
            let mut perm: Vec<usize> = (0..g.k()).collect();
            let mut s = seed;
            for i in (1..perm.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(i, (s >> 33) as usize % (i + 1));
            }
            let r = g.relabel_interior(&perm).unwrap();
            prop_assert_eq!(g.canonicalize(None), r.canonicalize(None));
        }

        #[test]
        fn shave_yields_smaller_tree(g in (3usize..8).prop_flat_map(arb_full)) {
            let ms = g.find_moustaches();
            prop_assert!(!ms.is_empty());
            for m in ms {
                let (s, _) = g.shave(&m).unwrap();
                prop_assert_eq!(s.n(), g.n() - 1);
                prop_assert_eq!(s.edges().len() + 1, s.num_vertices());
            }
        }
    }
}
