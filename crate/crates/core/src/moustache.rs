//! Moustache operations on shortest networks: trimming a leaf edge, shaving
//! a moustache off, growing one back along an allowed direction, and
//! estimating how large a grown moustache may be while the network stays
//! the unique shortest one.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::config_space::Configuration;
use crate::error::{Error, Result};
use crate::geom;
use crate::local_min::Network;
use crate::smt::{steiner_minimal_trees, SmtOptions};
use crate::topology::{Moustache, MoustacheKind, ShaveMap, TypeSignature};

/// Tolerance on the angle conditions of an allowed direction.
const FRAME_TOL: f64 = 1e-9;

/// Moves degree-1 terminals towards their neighbors:
/// `p -> (1 - t) p + t v` for every `(p, t)`. The network keeps its topology
/// and interior positions.
pub fn trim_leaves(net: &Network, leaves: &[(usize, f64)]) -> Result<(Configuration, Network)> {
    let g = net.topology();
    let deg = g.degrees();
    let adj = g.adjacency();
    let mut points: Vec<Vec<f64>> = net.config().points().map(|p| p.to_vec()).collect();
    for &(p, t) in leaves {
        if p >= g.n() || deg[p] != 1 {
            return Err(Error::Precondition(format!("{} is not a degree-1 terminal", g.vertex_name(p))));
        }
        if !(0.0..1.0).contains(&t) {
            return Err(Error::Precondition(format!("trim parameter {t} outside [0, 1)")));
        }
        let v = adj[p][0];
        points[p] = geom::lerp(net.position(p), net.position(v), t);
    }
    let config = Configuration::new(net.dim(), points)
        .map_err(|_| Error::Degenerate("trimming merges two terminals".into()))?;
    let trimmed = Network::new(g.clone(), config.clone(), net.interior_positions().to_vec())?;
    Ok((config, trimmed))
}

pub fn trim(net: &Network, p: usize, t: f64) -> Result<(Configuration, Network)> {
    trim_leaves(net, &[(p, t)])
}

/// Removes a moustache from a network. A promoted anchor becomes the
/// terminal at its image, taking the smaller leaf label.
pub fn shave(net: &Network, m: &Moustache) -> Result<(Network, ShaveMap)> {
    let (topology, map) = net.topology().shave(m)?;
    let positions: Vec<Vec<f64>> = map.source.iter().map(|&old| net.position(old).to_vec()).collect();
    let config = Configuration::new(net.dim(), positions[..topology.n()].to_vec())?;
    let interior = positions[topology.n()..].to_vec();
    Ok((Network::new(topology, config, interior)?, map))
}

/// Side of `omega` on which the allowed direction lies in the plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    /// `omega` rotated counterclockwise by 120 degrees.
    Left,
    Right,
}

/// How the allowed direction is chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionChoice {
    /// Planar: `omega` rotated by +-120 degrees.
    Side(Side),
    /// Any dimension: `phi = -omega/2 + (sqrt 3/2) normal`, where `normal`
    /// is made a unit vector orthogonal to `omega`.
    Normal(Vec<f64>),
    /// An explicit direction, validated against the angle condition.
    Direction(Vec<f64>),
    /// Planar: left; higher dimensions: the normal along the first axis not
    /// parallel to `omega`; one-sided: `-omega`.
    Default,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFrame {
    pub kind: MoustacheKind,
    /// Terminal of the (shaved) network the moustache grows from.
    pub anchor: usize,
    pub x: Vec<f64>,
    pub omega: Vec<f64>,
    pub phi: Vec<f64>,
    /// Second direction, two-sided only.
    pub psi: Option<Vec<f64>>,
    pub r: f64,
}

impl GrowthFrame {
    /// Same directions with another radius.
    pub fn with_radius(&self, r: f64) -> GrowthFrame {
        GrowthFrame { r, ..self.clone() }
    }

    /// New leaf positions: `x + r phi` and, two-sided, `x + r psi`.
    pub fn leaf_points(&self) -> Vec<Vec<f64>> {
        let mut out = vec![geom::axpy(&self.x, self.r, &self.phi)];
        if let Some(psi) = &self.psi {
            out.push(geom::axpy(&self.x, self.r, psi));
        }
        out
    }
}

/// Allowed direction for a two-sided moustache: the unit vector at 120
/// degrees from `omega` in the plane spanned by `omega` and `normal`.
pub fn two_sided_phi(omega: &[f64], normal: &[f64]) -> Result<Vec<f64>> {
    let n = geom::normalized(&geom::reject(normal, omega))
        .ok_or_else(|| Error::NotAllowed("normal is parallel to omega".into()))?;
    Ok(geom::axpy(&geom::scale(omega, -0.5), 3f64.sqrt() / 2.0, &n))
}

/// Unit vector from the anchor of a degree-1 terminal towards its neighbor.
pub fn omega_at(net: &Network, v: usize) -> Result<Vec<f64>> {
    let g = net.topology();
    if v >= g.n() || g.degrees()[v] != 1 {
        return Err(Error::Precondition(format!("{} is not a degree-1 terminal", g.vertex_name(v))));
    }
    let w = g.adjacency()[v][0];
    geom::unit_towards(net.position(v), net.position(w)).ok_or(Error::DegenerateVertex(v))
}

pub fn make_growth_frame(
    net: &Network,
    v: usize,
    kind: MoustacheKind,
    choice: &DirectionChoice,
    r: f64,
) -> Result<GrowthFrame> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Precondition(format!("radius {r} must be positive")));
    }
    let omega = omega_at(net, v)?;
    let d = net.dim();
    let planar_side = |side: Side| -> Result<Vec<f64>> {
        if d != 2 {
            return Err(Error::NotAllowed("a side only selects a direction in the plane".into()));
        }
        let angle = if side == Side::Left { 2.0 * PI / 3.0 } else { -2.0 * PI / 3.0 };
        Ok(geom::rotate2(&omega, angle))
    };
    let phi = match (kind, choice) {
        (_, DirectionChoice::Side(side)) => planar_side(*side)?,
        (_, DirectionChoice::Normal(normal)) => two_sided_phi(&omega, normal)?,
        (_, DirectionChoice::Direction(phi)) => {
            geom::normalized(phi).ok_or_else(|| Error::NotAllowed("zero direction".into()))?
        }
        (MoustacheKind::OneSided, DirectionChoice::Default) => geom::scale(&omega, -1.0),
        (MoustacheKind::TwoSided, DirectionChoice::Default) if d == 2 => planar_side(Side::Left)?,
        (MoustacheKind::TwoSided, DirectionChoice::Default) => two_sided_phi(&omega, &geom::orthogonal_unit(&omega))?,
    };
    let c = geom::dot(&phi, &omega);
    let psi = match kind {
        MoustacheKind::TwoSided => {
            if (c + 0.5).abs() > FRAME_TOL {
                return Err(Error::NotAllowed(format!("<phi, omega> = {c}, need -1/2")));
            }
            Some(geom::scale(&geom::add(&phi, &omega), -1.0))
        }
        MoustacheKind::OneSided => {
            if c > -0.5 + FRAME_TOL {
                return Err(Error::NotAllowed(format!("<phi, omega> = {c}, need at most -1/2")));
            }
            None
        }
    };
    Ok(GrowthFrame { kind, anchor: v, x: net.position(v).to_vec(), omega, phi, psi, r })
}

/// Result of growing a moustache.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grown {
    pub config: Configuration,
    pub network: Network,
    /// Labels of the new leaves, the `phi` leaf first.
    pub leaf_labels: Vec<usize>,
    /// New id of every old vertex.
    pub old_to_new: Vec<usize>,
}

/// Grows the moustache described by `frame`. Two-sided moustaches turn the
/// anchor into an interior vertex unless `keep_anchor` is set. `labels` are
/// the terminal labels of the new leaves (the `phi` leaf first); by default
/// a promoted anchor's leaves take its label and the next one, and other
/// leaves are appended at the end.
pub fn grow(net: &Network, frame: &GrowthFrame, labels: Option<&[usize]>, keep_anchor: bool) -> Result<Grown> {
    let g = net.topology();
    let n = g.n();
    let v = frame.anchor;
    let two_sided = frame.kind == MoustacheKind::TwoSided;
    let promote = two_sided && !keep_anchor;
    let leaves = frame.leaf_points();
    let leaf_labels: Vec<usize> = match labels {
        Some(l) => l.to_vec(),
        None if promote => vec![v, v + 1],
        None => (n..n + leaves.len()).collect(),
    };
    if leaf_labels.len() != leaves.len() {
        return Err(Error::Precondition(format!("{} labels for {} leaves", leaf_labels.len(), leaves.len())));
    }
    for p in &leaves {
        let clash = net.config().points().enumerate().any(|(i, q)| !(promote && i == v) && geom::dist(p, q) <= 1e-12);
        if clash {
            return Err(Error::Collision("a new leaf lands on an existing point".into()));
        }
    }
    if leaves.len() == 2 && geom::dist(&leaves[0], &leaves[1]) <= 1e-12 {
        return Err(Error::Collision("the two new leaves coincide".into()));
    }
    let (topology, old_to_new) = g.grow(v, &leaf_labels, promote)?;
    let new_n = topology.n();
    let mut positions = vec![Vec::new(); topology.num_vertices()];
    for old in 0..g.num_vertices() {
        positions[old_to_new[old]] = net.position(old).to_vec();
    }
    for (label, p) in leaf_labels.iter().zip(leaves) {
        positions[*label] = p;
    }
    let config = Configuration::new(net.dim(), positions[..new_n].to_vec())
        .map_err(|e| Error::Collision(e.to_string()))?;
    let network = Network::new(topology, config.clone(), positions[new_n..].to_vec())?;
    Ok(Grown { config, network, leaf_labels, old_to_new })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct R1Estimate {
    /// Largest radius that passed.
    pub lower: f64,
    /// Smallest radius that failed, or `r_max` when everything passed.
    pub upper: f64,
    /// Every radius tried with its verdict.
    pub samples: Vec<(f64, bool)>,
    /// No failing radius lies below a passing one.
    pub monotone: bool,
}

/// Oracle: the grown network is the unique shortest network of its points
/// (not fragile) and has the grown type.
pub fn admissible(net: &Network, frame: &GrowthFrame, labels: Option<&[usize]>, keep_anchor: bool, opts: &SmtOptions) -> Result<bool> {
    let grown = match grow(net, frame, labels, keep_anchor) {
        Ok(g) => g,
        Err(Error::Collision(_)) => return Ok(false),
        Err(e) => return Err(e),
    };
    let expected: TypeSignature = grown.network.signature();
    let result = steiner_minimal_trees(&grown.config, opts)?;
    Ok(!result.fragile && result.unique_type() == Some(&expected))
}

/// Brackets the largest admissible radius below `r_max <= 1` by halving
/// down to the first pass and bisecting to a gap of `1e-3 r_max`.
pub fn estimate_r1(
    net: &Network,
    frame: &GrowthFrame,
    labels: Option<&[usize]>,
    keep_anchor: bool,
    r_max: f64,
    opts: &SmtOptions,
) -> Result<R1Estimate> {
    let r_max = r_max.min(1.0);
    if !(r_max > 0.0) {
        return Err(Error::Precondition("r_max must be positive".into()));
    }
    let mut samples = Vec::new();
    let test = |r: f64, samples: &mut Vec<(f64, bool)>| -> Result<bool> {
        let ok = admissible(net, &frame.with_radius(r), labels, keep_anchor, opts)?;
        samples.push((r, ok));
        Ok(ok)
    };
    let floor = 1e-9 * net.config().diameter();
    let mut upper = r_max;
    if test(r_max, &mut samples)? {
        return Ok(R1Estimate { lower: r_max, upper: r_max, samples, monotone: true });
    }
    let mut lower = r_max / 2.0;
    while !test(lower, &mut samples)? {
        upper = lower;
        lower /= 2.0;
        if lower < floor {
            return Err(Error::EstimationFailed(format!("no admissible radius down to {floor:e}")));
        }
    }
    while upper - lower > 1e-3 * r_max {
        let mid = 0.5 * (lower + upper);
        if test(mid, &mut samples)? {
            lower = mid;
        } else {
            upper = mid;
        }
    }
    let monotone = samples.iter().all(|&(r, ok)| ok || samples.iter().all(|&(s, pass)| !pass || s < r));
    Ok(R1Estimate { lower, upper, samples, monotone })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smt::steiner_minimal_trees;

    fn equilateral_smt() -> Network {
        let c = Configuration::new(2, vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, 3f64.sqrt() / 2.0]]).unwrap();
        steiner_minimal_trees(&c, &SmtOptions::default()).unwrap().minima[0].network.clone()
    }

    #[test]
    fn trim_identity_and_length() {
        let net = equilateral_smt();
        let (c0, same) = trim(&net, 0, 0.0).unwrap();
        assert_eq!(&c0, net.config());
        assert_eq!(same.length(), net.length());
        let (c, trimmed) = trim(&net, 0, 0.5).unwrap();
        let expected = 3f64.sqrt() - 0.5 / 3f64.sqrt();
        assert!((trimmed.length() - expected).abs() < 1e-12);
        let resolved = steiner_minimal_trees(&c, &SmtOptions::default()).unwrap();
        assert!((resolved.min_length - expected).abs() < 1e-9);
        assert_eq!(resolved.minima[0].signature, net.signature());
        assert!(trim(&net, 3, 0.5).is_err());
        assert!(trim(&net, 0, 1.0).is_err());
    }

    #[test]
    fn frame_examples() {
        let c = Configuration::new(2, vec![vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let net = steiner_minimal_trees(&c, &SmtOptions::default()).unwrap().minima[0].network.clone();
        let f = make_growth_frame(&net, 0, MoustacheKind::TwoSided, &DirectionChoice::Side(Side::Left), 0.1).unwrap();
        assert!((f.phi[0] + 0.5).abs() < 1e-15 && (f.phi[1] - 3f64.sqrt() / 2.0).abs() < 1e-15);
        let psi = f.psi.clone().unwrap();
        assert!((psi[0] + 0.5).abs() < 1e-15 && (psi[1] + 3f64.sqrt() / 2.0).abs() < 1e-15);
        let one = make_growth_frame(&net, 0, MoustacheKind::OneSided, &DirectionChoice::Direction(vec![-1.0, 0.0]), 0.1);
        assert!(one.is_ok());
        let bad = make_growth_frame(&net, 0, MoustacheKind::OneSided, &DirectionChoice::Direction(vec![0.0, 1.0]), 0.1);
        assert!(matches!(bad, Err(Error::NotAllowed(_))));
    }

    #[test]
    fn frame_algebra_in_three_dimensions() {
        let c = Configuration::new(3, vec![vec![0.0, 0.0, 0.0], vec![0.3, -0.2, 0.9]]).unwrap();
        let net = steiner_minimal_trees(&c, &SmtOptions::default()).unwrap().minima[0].network.clone();
        for normal in [vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 1.0], vec![0.2, 0.7, -0.1]] {
            let f = make_growth_frame(&net, 1, MoustacheKind::TwoSided, &DirectionChoice::Normal(normal), 0.1).unwrap();
            let psi = f.psi.clone().unwrap();
            for (a, b) in [(&f.phi, &f.omega), (&psi, &f.phi), (&psi, &f.omega)] {
                assert!((geom::dot(a, b) + 0.5).abs() < 1e-12);
            }
            assert!((geom::norm(&psi) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn one_sided_growth_on_triangle_is_shortest_and_trims_back() {
        let net = equilateral_smt();
        let frame = make_growth_frame(&net, 0, MoustacheKind::OneSided, &DirectionChoice::Default, 0.05).unwrap();
        let grown = grow(&net, &frame, None, false).unwrap();
        assert!((grown.network.length() - net.length() - 0.05).abs() < 1e-12);
        let r = steiner_minimal_trees(&grown.config, &SmtOptions::default()).unwrap();
        assert!(!r.ambiguous);
        assert!((r.min_length - grown.network.length()).abs() < 1e-9);
        assert_eq!(r.minima[0].signature, grown.network.signature());
        let m = Moustache { kind: MoustacheKind::OneSided, anchor: 0, leaves: vec![3] };
        let (back, _) = shave(&grown.network, &m).unwrap();
        assert_eq!(back.config(), net.config());
        assert_eq!(back.signature(), net.signature());
    }

    #[test]
    fn two_sided_grow_then_shave_restores_signature() {
        let net = equilateral_smt();
        let frame = make_growth_frame(&net, 1, MoustacheKind::TwoSided, &DirectionChoice::Side(Side::Right), 0.05).unwrap();
        let grown = grow(&net, &frame, None, false).unwrap();
        assert_eq!(grown.leaf_labels, vec![1, 2]);
        assert_eq!(grown.network.topology().n(), 4);
        let report = grown.network.verify_locally_minimal(1e-9).unwrap();
        assert!(report.passed);
        let m = grown
            .network
            .topology()
            .find_moustaches()
            .into_iter()
            .find(|m| m.leaves == vec![1, 2])
            .unwrap();
        let (back, map) = shave(&grown.network, &m).unwrap();
        assert!(map.anchor_promoted);
        assert_eq!(back.signature(), net.signature());
        assert!(back.config().distance_to(net.config()) < 1e-15);
    }

    #[test]
    fn r1_on_triangle_is_positive_and_rechecks() {
        let net = equilateral_smt();
        let frame = make_growth_frame(&net, 0, MoustacheKind::OneSided, &DirectionChoice::Default, 1.0).unwrap();
        let est = estimate_r1(&net, &frame, None, false, 1.0, &SmtOptions::default()).unwrap();
        assert!(est.lower > 0.0 && est.lower <= est.upper && est.upper <= 1.0);
        assert!(est.monotone);
        for f in [0.25, 0.5, 1.0] {
            assert!(admissible(&net, &frame.with_radius(f * est.lower), None, false, &SmtOptions::default()).unwrap());
        }
    }
}
