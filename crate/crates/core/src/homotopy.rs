//! Paths in configuration space along which the shortest network keeps its
//! combinatorial type, the escape from an ambiguous configuration along the
//! direction vectors of its terminals, and the four-point configuration whose
//! ambiguous part of a cell is disconnected.
//!
//! A path between two configurations with the same unique type is built
//! recursively: shave a moustache off both shortest networks, connect the
//! smaller configurations, and lift that path back by growing a moustache of
//! fixed radius along a continuous field of allowed directions. The lifted
//! path is preceded by trimming the moustache of the first network down to
//! that radius and followed by enlarging it to the last network. Every
//! sample of the final polyline is checked against the exact search.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::config_space::{interpolate_off_diagonal, Configuration};
use crate::error::{Error, Result};
use crate::geom;
use crate::local_min::{minimize_fixed_topology, minimize_from, Network};
use crate::moustache::{estimate_r1, grow, omega_at, shave, two_sided_phi, GrowthFrame};
use crate::smt::{steiner_minimal_trees, SmtOptions, SmtResult};
use crate::topology::{Moustache, MoustacheKind, SteinerTopology, TypeSignature};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathParams {
    /// Samples per path segment.
    pub samples: usize,
    /// Fraction of the smallest sampled admissible radius that is used.
    pub safety_factor: f64,
    /// Each interval next to a fragile sample is split into this many parts.
    pub refine: usize,
    /// Points of the lower path at which the admissible radius is estimated.
    pub r1_probes: usize,
    pub r_max: f64,
    /// Rebuilds with a halved safety factor after a failed certification.
    pub retries: usize,
    pub smt: SmtOptions,
}

impl Default for PathParams {
    fn default() -> Self {
        PathParams {
            samples: 200,
            safety_factor: 0.5,
            refine: 4,
            r1_probes: 9,
            r_max: 1.0,
            retries: 2,
            smt: SmtOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    /// Type of the shortest network (the first one when there are several).
    pub signature: TypeSignature,
    pub unambiguous: bool,
    /// The target type is among the shortest networks.
    pub in_cell: bool,
    pub fragile: bool,
    pub min_length: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub t: f64,
    pub config: Configuration,
    pub verdict: Verdict,
}

/// One level of the recursive construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    /// Point count at this level.
    pub n: usize,
    pub moustache: Moustache,
    /// Radius of the moustache along the lifted segment.
    pub radius: f64,
    /// Smallest lower bracket of the admissible radius over the probes.
    pub r1_lower: f64,
    /// Largest change of the growth direction between consecutive samples.
    pub max_phi_step: f64,
    /// Largest displacement between consecutive samples of the lower path.
    pub max_lower_step: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifiedPath {
    pub target_type: TypeSignature,
    pub samples: Vec<PathSample>,
    /// Largest displacement between consecutive samples.
    pub step_bound: f64,
    pub passed: bool,
    /// Parameters of the samples that failed.
    pub failures: Vec<f64>,
    /// Recursion levels, smallest point count first.
    pub levels: Vec<LevelReport>,
    /// Escapes applied at ambiguous endpoints.
    pub escapes: Vec<EscapeMove>,
    pub params: PathParams,
}

impl CertifiedPath {
    pub fn configurations(&self) -> impl Iterator<Item = &Configuration> {
        self.samples.iter().map(|s| &s.config)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EscapeMove {
    pub r: f64,
    /// Direction vector of every terminal in the chosen network.
    pub motions: Vec<Vec<f64>>,
    pub config: Configuration,
    /// Length of the next shortest type minus the length of the chosen one
    /// after the move.
    pub margin: f64,
    pub halvings: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Need {
    /// Unique shortest type equal to the target.
    Unique,
    /// Target among the shortest types.
    Cell,
}

/// Convex combination that leaves coordinates equal in both endpoints
/// untouched, so that junctions between segments match bitwise.
fn blend(a: &Configuration, b: &Configuration, s: f64) -> Result<Configuration> {
    let coords = a
        .coords()
        .iter()
        .zip(b.coords())
        .map(|(&x, &y)| if x == y { x } else { (1.0 - s) * x + s * y })
        .collect();
    Configuration::from_flat(a.dim(), coords)
}

fn segment(a: &Configuration, b: &Configuration, count: usize) -> Result<Vec<Configuration>> {
    let count = count.max(2);
    let mut out = vec![a.clone()];
    for i in 1..count - 1 {
        out.push(blend(a, b, i as f64 / (count - 1) as f64)?);
    }
    out.push(b.clone());
    Ok(out)
}

fn max_step(knots: &[Configuration]) -> f64 {
    knots.windows(2).map(|w| w[0].distance_to(&w[1])).fold(0.0, f64::max)
}

/// Keeps at most `count` knots, spread evenly in arc length; the first and
/// last knot are always kept.
fn resample(knots: Vec<Configuration>, count: usize) -> Vec<Configuration> {
    if knots.len() <= count || count < 2 {
        return knots;
    }
    let mut cum = vec![0.0];
    for w in knots.windows(2) {
        cum.push(cum.last().unwrap() + w[0].distance_to(&w[1]));
    }
    let total = *cum.last().unwrap();
    let mut keep = vec![0];
    for i in 1..count - 1 {
        let target = total * i as f64 / (count - 1) as f64;
        let j = cum.partition_point(|&c| c < target).min(knots.len() - 1);
        if j > *keep.last().unwrap() && j < knots.len() - 1 {
            keep.push(j);
        }
    }
    keep.push(knots.len() - 1);
    keep.into_iter().map(|j| knots[j].clone()).collect()
}

/// The shortest network of `config`, which must be unique and of type `g`.
fn unique_network(config: &Configuration, g: &TypeSignature, opts: &SmtOptions) -> Result<Network> {
    let result = steiner_minimal_trees(config, opts)?;
    match result.unique_type() {
        Some(t) if t == g => Ok(result.minima[0].network.clone()),
        Some(t) => Err(Error::Precondition(format!("shortest network has type {t}, not {g}"))),
        None => Err(Error::Precondition(format!("{} shortest networks tie", result.minima.len()))),
    }
}

/// Continuous choice of the growth direction along the lower path. The
/// angle to `omega` is interpolated linearly; in the plane its sign is the
/// side fixed by the edge order of the type, otherwise the component
/// orthogonal to `omega` follows the geodesic between the endpoint normals.
struct DirectionField {
    kind: MoustacheKind,
    planar: bool,
    theta: [f64; 2],
    normals: [Vec<f64>; 2],
}

impl DirectionField {
    fn new(kind: MoustacheKind, ends: [(Vec<f64>, Vec<f64>); 2]) -> Result<Self> {
        let planar = ends[0].0.len() == 2;
        let mut theta = [0.0; 2];
        let mut normals = [Vec::new(), Vec::new()];
        for (i, (omega, phi)) in ends.iter().enumerate() {
            theta[i] = if planar { geom::ccw_angle(omega, phi) } else { geom::angle_between(omega, phi) };
            normals[i] = geom::normalized(&geom::reject(phi, omega)).unwrap_or_else(|| geom::orthogonal_unit(omega));
        }
        match (kind, planar) {
            (MoustacheKind::TwoSided, true) => {
                let side = |t: f64| if t < PI { 2.0 * PI / 3.0 } else { 4.0 * PI / 3.0 };
                if side(theta[0]) != side(theta[1]) {
                    return Err(Error::VerificationFailed("moustache lies on different sides at the endpoints".into()));
                }
                theta = [side(theta[0]); 2];
            }
            (MoustacheKind::TwoSided, false) => theta = [2.0 * PI / 3.0; 2],
            (MoustacheKind::OneSided, true) => {
                for t in &mut theta {
                    *t = t.clamp(2.0 * PI / 3.0, 4.0 * PI / 3.0);
                }
            }
            (MoustacheKind::OneSided, false) => {
                for t in &mut theta {
                    *t = t.clamp(2.0 * PI / 3.0, PI);
                }
            }
        }
        Ok(DirectionField { kind, planar, theta, normals })
    }

    fn phi(&self, omega: &[f64], t: f64) -> Result<Vec<f64>> {
        let theta = (1.0 - t) * self.theta[0] + t * self.theta[1];
        if self.planar {
            return Ok(geom::rotate2(omega, theta));
        }
        let project = |n: &[f64]| {
            geom::normalized(&geom::reject(n, omega))
                .ok_or_else(|| Error::VerificationFailed("growth normal became parallel to omega".into()))
        };
        let n = geom::slerp(&project(&self.normals[0])?, &project(&self.normals[1])?, t);
        match self.kind {
            MoustacheKind::TwoSided => two_sided_phi(omega, &n),
            MoustacheKind::OneSided => {
                let n = project(&n)?;
                Ok(geom::axpy(&geom::scale(omega, theta.cos()), theta.sin(), &n))
            }
        }
    }
}

/// `(omega, phi)` of a moustache in a network and its shaved network.
fn endpoint_directions(net: &Network, m: &Moustache, low: &Network, anchor_new: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let omega = omega_at(low, anchor_new)?;
    let phi = geom::unit_towards(net.position(m.anchor), net.position(m.leaves[0])).ok_or(Error::DegenerateVertex(m.anchor))?;
    Ok((omega, phi))
}

fn leaf_lengths(net: &Network, m: &Moustache) -> f64 {
    m.leaves.iter().map(|&p| geom::dist(net.position(p), net.position(m.anchor))).fold(f64::INFINITY, f64::min)
}

/// Knots of a path from `s0` to `s1` inside the unambiguous cell of `g`.
fn lift_path(
    s0: &Configuration,
    s1: &Configuration,
    g: &TypeSignature,
    params: &PathParams,
    safety: f64,
    levels: &mut Vec<LevelReport>,
) -> Result<Vec<Configuration>> {
    let samples = params.samples.max(2);
    if s0 == s1 {
        return Ok(vec![s0.clone(); samples]);
    }
    if s0.n() <= 2 {
        let clearance = if s0.n() == 2 { s0.diagonal_distance()?.min(s1.diagonal_distance()?) } else { 1.0 };
        let poly = interpolate_off_diagonal(s0, s1, clearance)?;
        return Ok(poly.sample(samples)?.into_iter().map(|(_, c)| c).collect());
    }
    let net0 = unique_network(s0, g, &params.smt)?;
    let net1 = unique_network(s1, g, &params.smt)?;
    let m0 = net0
        .topology()
        .find_moustaches()
        .into_iter()
        .next()
        .ok_or_else(|| Error::InvalidTopology("type has no moustache".into()))?;
    let m1 = net1
        .topology()
        .find_moustaches()
        .into_iter()
        .find(|m| m.kind == m0.kind && m.leaves == m0.leaves)
        .ok_or_else(|| Error::VerificationFailed("endpoint networks disagree on the moustache".into()))?;
    let (low0, map0) = shave(&net0, &m0)?;
    let (low1, map1) = shave(&net1, &m1)?;
    let g_low = low0.signature();
    if low1.signature() != g_low || map0.anchor_new != map1.anchor_new {
        return Err(Error::VerificationFailed("shaved endpoint networks have different types".into()));
    }
    let anchor = map0.anchor_new;
    let keep_anchor = m0.kind == MoustacheKind::TwoSided && !map0.anchor_promoted;
    let field = DirectionField::new(
        m0.kind,
        [endpoint_directions(&net0, &m0, &low0, anchor)?, endpoint_directions(&net1, &m1, &low1, map1.anchor_new)?],
    )?;

    let lower = resample(lift_path(low0.config(), low1.config(), &g_low, params, safety, levels)?, 2 * samples);
    let topology = low0.topology().clone();
    let mut interior = low0.interior_positions().to_vec();
    let mut nets = Vec::with_capacity(lower.len());
    for c in &lower {
        let net = if topology.k() == 0 {
            minimize_fixed_topology(c, &topology, &params.smt.solver)?
        } else {
            minimize_from(c, &topology, &interior, &params.smt.solver)?
        };
        interior = net.interior_positions().to_vec();
        nets.push(net);
    }
    let last = (nets.len() - 1).max(1) as f64;
    let mut frames = Vec::with_capacity(nets.len());
    for (j, net) in nets.iter().enumerate() {
        let omega = omega_at(net, anchor)?;
        let phi = field.phi(&omega, j as f64 / last)?;
        let psi = (m0.kind == MoustacheKind::TwoSided).then(|| geom::scale(&geom::add(&phi, &omega), -1.0));
        frames.push(GrowthFrame { kind: m0.kind, anchor, x: net.position(anchor).to_vec(), omega, phi, psi, r: 1.0 });
    }

    let labels = m0.leaves.clone();
    let probes = params.r1_probes.clamp(2, nets.len());
    let mut r1_lower = f64::INFINITY;
    for i in 0..probes {
        let j = (i * (nets.len() - 1) + (probes - 1) / 2) / (probes - 1);
        let est = estimate_r1(&nets[j], &frames[j], Some(&labels), keep_anchor, params.r_max, &params.smt)?;
        r1_lower = r1_lower.min(est.lower);
    }
    let r = (safety * r1_lower).min(leaf_lengths(&net0, &m0)).min(leaf_lengths(&net1, &m1));

    let mut lifted = Vec::with_capacity(nets.len());
    for (net, frame) in nets.iter().zip(&frames) {
        lifted.push(grow(net, &frame.with_radius(r), Some(&labels), keep_anchor)?.config);
    }
    let max_phi_step = frames.windows(2).map(|w| geom::dist(&w[0].phi, &w[1].phi)).fold(0.0, f64::max);
    levels.push(LevelReport {
        n: s0.n(),
        moustache: m0,
        radius: r,
        r1_lower,
        max_phi_step,
        max_lower_step: max_step(&lower),
    });

    let mut out = segment(s0, &lifted[0], samples)?;
    out.pop();
    let tail = segment(lifted.last().expect("lower path is nonempty"), s1, samples)?;
    out.extend(lifted);
    out.extend(tail.into_iter().skip(1));
    Ok(out)
}

fn verdict(config: &Configuration, target: &TypeSignature, need: Need, opts: &SmtOptions) -> Result<Verdict> {
    let result: SmtResult = steiner_minimal_trees(config, opts)?;
    let in_cell = result.contains(target);
    let unambiguous = !result.ambiguous;
    let ok = match need {
        Need::Unique => in_cell && unambiguous,
        Need::Cell => in_cell,
    };
    Ok(Verdict {
        signature: result.minima[0].signature.clone(),
        unambiguous,
        in_cell,
        fragile: result.fragile,
        min_length: result.min_length,
        ok,
    })
}

fn certify(
    knots: Vec<(Configuration, Need)>,
    target: &TypeSignature,
    params: &PathParams,
    levels: Vec<LevelReport>,
    escapes: Vec<EscapeMove>,
) -> Result<CertifiedPath> {
    let check = |knots: &[(Configuration, Need)]| -> Result<Vec<Verdict>> {
        knots.par_iter().map(|(c, need)| verdict(c, target, *need, &params.smt)).collect()
    };
    let verdicts = check(&knots)?;
    let mut refine_after = vec![false; knots.len()];
    for (i, v) in verdicts.iter().enumerate() {
        if v.fragile {
            if i > 0 {
                refine_after[i - 1] = true;
            }
            if i + 1 < knots.len() {
                refine_after[i] = true;
            }
        }
    }
    let parts = params.refine.max(1);
    let mut extra: Vec<(usize, Configuration, Need)> = Vec::new();
    for i in (0..knots.len()).filter(|&i| refine_after[i]) {
        let need = if knots[i].1 == Need::Cell || knots[i + 1].1 == Need::Cell { Need::Cell } else { Need::Unique };
        for k in 1..parts {
            extra.push((i, blend(&knots[i].0, &knots[i + 1].0, k as f64 / parts as f64)?, need));
        }
    }
    let extra_knots: Vec<(Configuration, Need)> = extra.iter().map(|(_, c, need)| (c.clone(), *need)).collect();
    let extra_verdicts = check(&extra_knots)?;

    let mut merged: Vec<(Configuration, Verdict)> = Vec::with_capacity(knots.len() + extra.len());
    let mut pending = extra.into_iter().zip(extra_verdicts).peekable();
    for (i, ((c, _), v)) in knots.into_iter().zip(verdicts).enumerate() {
        merged.push((c, v));
        while let Some(((_, c, _), v)) = pending.next_if(|((after, _, _), _)| *after == i) {
            merged.push((c, v));
        }
    }
    let last = (merged.len() - 1).max(1) as f64;
    let samples: Vec<PathSample> = merged
        .into_iter()
        .enumerate()
        .map(|(i, (config, verdict))| PathSample { t: i as f64 / last, config, verdict })
        .collect();
    let failures: Vec<f64> = samples.iter().filter(|s| !s.verdict.ok).map(|s| s.t).collect();
    let step_bound = samples.windows(2).map(|w| w[0].config.distance_to(&w[1].config)).fold(0.0, f64::max);
    Ok(CertifiedPath {
        target_type: target.clone(),
        passed: failures.is_empty(),
        samples,
        step_bound,
        failures,
        levels,
        escapes,
        params: params.clone(),
    })
}

fn check_pair(s0: &Configuration, s1: &Configuration) -> Result<()> {
    if s0.n() != s1.n() || s0.dim() != s1.dim() {
        return Err(Error::Precondition("endpoints must have equal point count and dimension".into()));
    }
    Ok(())
}

/// Builds and certifies `start -> e0 -> e1 -> end`, where the middle stretch
/// must stay unambiguous and the outer stretches only in the cell.
fn build_and_certify(
    start: &Configuration,
    end: &Configuration,
    e0: &Configuration,
    e1: &Configuration,
    g: &TypeSignature,
    params: &PathParams,
    escapes: Vec<EscapeMove>,
) -> Result<CertifiedPath> {
    let mut attempt = 0;
    loop {
        let safety = params.safety_factor / 2f64.powi(attempt as i32);
        let mut levels = Vec::new();
        let middle = lift_path(e0, e1, g, params, safety, &mut levels)?;
        let mut knots = Vec::new();
        if start != e0 {
            let mut lead = segment(start, e0, params.samples)?;
            lead.pop();
            knots.extend(lead.into_iter().map(|c| (c, Need::Cell)));
        }
        knots.extend(middle.into_iter().map(|c| (c, Need::Unique)));
        if end != e1 {
            knots.extend(segment(e1, end, params.samples)?.into_iter().skip(1).map(|c| (c, Need::Cell)));
        }
        let path = certify(knots, g, params, levels, escapes.clone())?;
        if path.passed || attempt >= params.retries {
            return Ok(path);
        }
        attempt += 1;
    }
}

/// A path from `s0` to `s1` along which the shortest network is unique and
/// of type `g`. A path that fails certification is returned with
/// `passed = false` and the failing parameters.
pub fn connect_unambiguous(s0: &Configuration, s1: &Configuration, g: &TypeSignature, params: &PathParams) -> Result<CertifiedPath> {
    check_pair(s0, s1)?;
    unique_network(s0, g, &params.smt).map_err(|e| Error::Precondition(format!("first endpoint: {e}")))?;
    unique_network(s1, g, &params.smt).map_err(|e| Error::Precondition(format!("second endpoint: {e}")))?;
    build_and_certify(s0, s1, s0, s1, g, params, Vec::new())
}

/// Moves every terminal of the type-`g` shortest network along its
/// direction vector by a common distance `r`, halving `r` from half the
/// shortest edge until the moved configuration has `g` as its unique type.
/// The margin to the next type is measured by the exhaustive search.
pub fn escape_ambiguity(config: &Configuration, g: &TypeSignature, opts: &SmtOptions) -> Result<EscapeMove> {
    if config.dim() != 2 {
        return Err(Error::OutOfScope("the escape is proven for planar configurations only".into()));
    }
    if !g.is_full() {
        return Err(Error::OutOfScope(format!("type {g} is not full")));
    }
    let exact = SmtOptions { prune: false, ..opts.clone() };
    let result = steiner_minimal_trees(config, &exact)?;
    let gamma = match result.minimum(g) {
        Some(m) if result.ambiguous => m.network.clone(),
        Some(_) => return Err(Error::Precondition("configuration is already unambiguous".into())),
        None => return Err(Error::Precondition(format!("type {g} is not among the shortest networks"))),
    };
    let motions: Vec<Vec<f64>> = (0..config.n()).map(|u| gamma.direction_vector(u)).collect::<Result<_>>()?;
    let mut r = 0.5 * gamma.shortest_edge();
    let mut last = String::new();
    for halvings in 0..=60 {
        let moved = config.map_points(|u, p| geom::axpy(p, r, &motions[u]))?;
        let after = steiner_minimal_trees(&moved, &exact)?;
        if after.unique_type() == Some(g) {
            let margin = after.runner_up.as_ref().map_or(f64::INFINITY, |ru| ru.length - after.min_length);
            if margin > 0.0 {
                return Ok(EscapeMove { r, motions, config: moved, margin, halvings });
            }
        }
        last = format!("r = {r:e}: {} shortest types, first {}", after.minima.len(), after.minima[0].signature);
        r /= 2.0;
    }
    Err(Error::VerificationFailed(format!("no escape after 60 halvings ({last})")))
}

/// A path from `s0` to `s1` along which `g` stays among the shortest types,
/// for planar configurations and full `g`. Ambiguous endpoints first escape
/// into the unambiguous part of the cell.
pub fn connect_cell(s0: &Configuration, s1: &Configuration, g: &TypeSignature, params: &PathParams) -> Result<CertifiedPath> {
    check_pair(s0, s1)?;
    if s0.dim() != 2 {
        return Err(Error::OutOfScope("cells are connected for planar configurations only".into()));
    }
    if !g.is_full() {
        return Err(Error::OutOfScope(format!("type {g} is not full")));
    }
    let mut escapes = Vec::new();
    let mut ends = Vec::new();
    for s in [s0, s1] {
        let result = steiner_minimal_trees(s, &params.smt)?;
        if !result.contains(g) {
            return Err(Error::Precondition(format!("type {g} is not among the shortest networks of an endpoint")));
        }
        if result.ambiguous {
            let esc = escape_ambiguity(s, g, &params.smt)?;
            ends.push(esc.config.clone());
            escapes.push(esc);
        } else {
            ends.push(s.clone());
        }
    }
    build_and_certify(s0, s1, &ends[0], &ends[1], g, params, escapes)
}

/// Counterclockwise angle at terminal `c`, which has degree 2, from its edge
/// towards terminal `d` to its other edge, in `[0, 2 pi)`.
pub fn angle_alpha(net: &Network, c: usize, d: usize) -> Result<f64> {
    if net.dim() != 2 {
        return Err(Error::Precondition("the angle is defined in the plane".into()));
    }
    let g = net.topology();
    if c >= g.n() || d >= g.n() {
        return Err(Error::Precondition("c and d must be terminals".into()));
    }
    let adj = &g.adjacency()[c];
    if adj.len() != 2 || !adj.contains(&d) {
        return Err(Error::Precondition(format!("{} must have degree 2 with {} as a neighbor", g.vertex_name(c), g.vertex_name(d))));
    }
    let other = if adj[0] == d { adj[1] } else { adj[0] };
    let to_d = geom::unit_towards(net.position(c), net.position(d)).ok_or(Error::DegenerateVertex(c))?;
    let to_other = geom::unit_towards(net.position(c), net.position(other)).ok_or(Error::DegenerateVertex(c))?;
    Ok(geom::ccw_angle(&to_d, &to_other))
}

/// Stretches `config` horizontally about its centroid until the shortest
/// realizations of `a` and `b` have equal length, by bisection on the
/// stretch factor within `bracket`.
pub fn tie_by_stretch(
    config: &Configuration,
    a: &SteinerTopology,
    b: &SteinerTopology,
    bracket: (f64, f64),
    opts: &SmtOptions,
) -> Result<Configuration> {
    let n = config.n() as f64;
    let cx = config.points().map(|p| p[0]).sum::<f64>() / n;
    let stretched = |s: f64| config.map_points(|_, p| {
        let mut q = p.to_vec();
        q[0] = cx + s * (p[0] - cx);
        q
    });
    let gap = |s: f64| -> Result<(f64, Configuration)> {
        let c = stretched(s)?;
        let la = minimize_fixed_topology(&c, a, &opts.solver)?.length();
        let lb = minimize_fixed_topology(&c, b, &opts.solver)?.length();
        Ok((la - lb, c))
    };
    let (mut lo, mut hi) = bracket;
    let (f_lo, _) = gap(lo)?;
    let (f_hi, _) = gap(hi)?;
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::SearchFailed(format!("no sign change of the length gap on [{lo}, {hi}]")));
    }
    let mut best = stretched(0.5 * (lo + hi))?;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let (f, c) = gap(mid)?;
        best = c;
        if f == 0.0 || (hi - lo) < 1e-15 {
            break;
        }
        if f.signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}

/// The four-point configuration whose two shortest networks, under two
/// different orderings, share one type but bend the opposite way at `C`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ambiguous4 {
    /// Points `(-1, 0), (0, 1), (0, inner), (1, 0)`.
    pub base: Configuration,
    pub inner: f64,
    /// Point `k` of ordering `i` is point `orderings[i][k]` of `base`.
    pub orderings: [Vec<usize>; 2],
    pub configs: [Configuration; 2],
    /// Shortest networks of the first ordering.
    pub result: SmtResult,
    pub signature: TypeSignature,
    /// The type-`signature` network under each ordering.
    pub networks: [Network; 2],
    /// Angle at `C` from the edge towards `D`, under each ordering.
    pub alpha: [f64; 2],
}

const C_LABEL: usize = 2;
const D_LABEL: usize = 3;

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

fn demo_at(inner: f64, height: f64, opts: &SmtOptions) -> Result<Option<Ambiguous4>> {
    let base = Configuration::new(2, vec![vec![-1.0, 0.0], vec![0.0, height], vec![0.0, inner], vec![1.0, 0.0]])?;
    let result = steiner_minimal_trees(&base, opts)?;
    if result.minima.len() != 2 || result.fragile {
        return Ok(None);
    }
    let Some(first) = result.minima.iter().find(|m| {
        let adj = m.network.topology().adjacency();
        adj[C_LABEL].len() == 2 && adj[C_LABEL].contains(&D_LABEL)
    }).cloned() else {
        return Ok(None);
    };
    let alpha0 = angle_alpha(&first.network, C_LABEL, D_LABEL)?;
    for order in permutations(4).into_iter().skip(1) {
        let other = base.permuted(&order)?;
        let res = steiner_minimal_trees(&other, opts)?;
        if res.minima.len() != 2 {
            continue;
        }
        let Some(second) = res.minimum(&first.signature) else { continue };
        let alpha1 = angle_alpha(&second.network, C_LABEL, D_LABEL)?;
        if (alpha0 - PI) * (alpha1 - PI) >= 0.0 {
            continue;
        }
        let mut orderings = [vec![0, 1, 2, 3], order];
        let mut configs = [base.clone(), other];
        let mut networks = [first.network.clone(), second.network.clone()];
        let mut alpha = [alpha0, alpha1];
        let mut result = result;
        if alpha0 < PI {
            orderings.swap(0, 1);
            configs.swap(0, 1);
            networks.swap(0, 1);
            alpha.swap(0, 1);
            result = res;
        }
        return Ok(Some(Ambiguous4 { base, inner, orderings, configs, result, signature: first.signature.clone(), networks, alpha }));
    }
    Ok(None)
}

/// Searches the symmetric family `A = (-1, 0)`, `B = (0, 1)`, `C = (0, y)`,
/// `D = (1, 0)` for a height `y` at which the two mirror-image shortest
/// networks (with `C` of degree 2) tie and nothing else comes close, and
/// returns the middle of the longest run of accepted heights on a grid.
pub fn ambiguous4_demo(opts: &SmtOptions) -> Result<Ambiguous4> {
    const HEIGHT: f64 = 1.0;
    const STEPS: usize = 40;
    let mut accepted = Vec::new();
    for i in 1..STEPS {
        let y = HEIGHT * i as f64 / STEPS as f64;
        if demo_at(y, HEIGHT, opts)?.is_some() {
            accepted.push(i);
        }
    }
    let mut best: Option<(usize, usize)> = None;
    let mut run_start = 0;
    for k in 0..accepted.len() {
        if k == 0 || accepted[k] != accepted[k - 1] + 1 {
            run_start = k;
        }
        if best.is_none_or(|(s, e)| k - run_start > e - s) {
            best = Some((run_start, k));
        }
    }
    let (s, e) = best.ok_or_else(|| Error::SearchFailed("no height gives a two-type tie with opposite bends".into()))?;
    let mid = (accepted[s] + accepted[e]) as f64 / 2.0;
    let y = HEIGHT * mid / STEPS as f64;
    demo_at(y, HEIGHT, opts)?.ok_or_else(|| Error::SearchFailed(format!("height {y} rejected")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smt::{classify3, Type3};

    fn cfg(points: &[[f64; 2]]) -> Configuration {
        Configuration::new(2, points.iter().map(|p| p.to_vec()).collect()).unwrap()
    }

    fn square() -> Configuration {
        cfg(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    }

    fn unique_type(c: &Configuration) -> TypeSignature {
        let r = steiner_minimal_trees(c, &SmtOptions::default()).unwrap();
        r.unique_type().expect("unambiguous").clone()
    }

    #[test]
    fn blend_keeps_shared_coordinates_and_ends() {
        let a = cfg(&[[0.1, 0.3], [0.7, 0.9]]);
        let b = cfg(&[[0.1, 0.35], [0.2, 0.9]]);
        let seg = segment(&a, &b, 7).unwrap();
        assert_eq!(seg[0], a);
        assert_eq!(seg[6], b);
        for c in &seg {
            assert_eq!(c.point(0)[0], 0.1);
            assert_eq!(c.point(1)[1], 0.9);
        }
        let long = segment(&a, &b, 50).unwrap();
        let short = resample(long.clone(), 10);
        assert!(short.len() <= 10);
        assert_eq!(short[0], long[0]);
        assert_eq!(short.last(), long.last());
    }

    #[test]
    fn constant_path() {
        let c = cfg(&[[0.0, 0.0], [1.0, 0.0], [0.4, 0.8]]);
        let g = unique_type(&c);
        let path = connect_unambiguous(&c, &c, &g, &PathParams::default()).unwrap();
        assert!(path.passed);
        assert_eq!(path.step_bound, 0.0);
        assert!(path.samples.iter().all(|s| s.config == c));
    }

    #[test]
    fn acute_triangles_stay_full_ccw() {
        let s0 = cfg(&[[0.0, 0.0], [1.0, 0.0], [0.4, 0.8]]);
        let s1 = cfg(&[[2.0, 1.0], [2.9, 1.5], [2.1, 2.2]]);
        assert_eq!(classify3(&s0).unwrap(), Type3::FullCcw);
        assert_eq!(classify3(&s1).unwrap(), Type3::FullCcw);
        let g = unique_type(&s0);
        let path = connect_unambiguous(&s0, &s1, &g, &PathParams::default()).unwrap();
        assert!(path.passed, "failures at {:?}", path.failures);
        assert!(path.samples.len() >= 200);
        assert_eq!(path.samples[0].config, s0);
        assert_eq!(path.samples.last().unwrap().config, s1);
        assert!(path.samples.windows(2).all(|w| w[0].t < w[1].t));
        for s in &path.samples {
            assert_eq!(s.verdict.signature, g);
            assert!(s.verdict.unambiguous);
            assert_eq!(classify3(&s.config).unwrap(), Type3::FullCcw);
        }
    }

    #[test]
    fn finer_sampling_keeps_the_verdict() {
        let s0 = cfg(&[[0.0, 0.0], [1.0, 0.1], [1.2, 0.9], [0.1, 0.7]]);
        let (sin, cos) = 0.5f64.sin_cos();
        let s1 = s0.map_points(|_, p| vec![1.0 + 1.2 * (cos * p[0] - sin * p[1]), 1.2 * (sin * p[0] + cos * p[1])]).unwrap();
        let g = unique_type(&s0);
        assert_eq!(unique_type(&s1), g);
        let mut coarse = None;
        for samples in [100, 200] {
            let params = PathParams { samples, ..Default::default() };
            let path = connect_unambiguous(&s0, &s1, &g, &params).unwrap();
            assert!(path.passed, "{samples} samples: failures at {:?}", path.failures);
            let phi_step = path.levels.iter().map(|l| l.max_phi_step).fold(0.0, f64::max);
            assert!(phi_step < 0.1);
            if let Some(c) = coarse {
                assert!(phi_step < 0.75 * c, "direction steps {c} -> {phi_step}");
            }
            coarse = Some(phi_step);
        }
    }

    #[test]
    fn ambiguous_endpoint_is_rejected() {
        let s0 = cfg(&[[0.0, 0.0], [1.0, 0.0], [1.0, 0.8], [0.0, 0.8]]);
        let g = unique_type(&s0);
        let err = connect_unambiguous(&s0, &square(), &g, &PathParams::default()).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)), "{err}");
    }

    #[test]
    fn escape_from_the_square() {
        let opts = SmtOptions::default();
        let result = steiner_minimal_trees(&square(), &opts).unwrap();
        assert_eq!(result.minima.len(), 2);
        for m in &result.minima {
            let esc = escape_ambiguity(&square(), &m.signature, &opts).unwrap();
            assert!(esc.r < m.network.shortest_edge());
            assert!(esc.margin > 0.0);
            assert_eq!(unique_type(&esc.config), m.signature);
        }
        let moved = escape_ambiguity(&square(), &result.minima[0].signature, &opts).unwrap().config;
        assert!(matches!(escape_ambiguity(&moved, &result.minima[0].signature, &opts), Err(Error::Precondition(_))));
        let cube = Configuration::new(3, vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        assert!(matches!(escape_ambiguity(&cube, &result.minima[0].signature, &opts), Err(Error::OutOfScope(_))));
    }

    #[test]
    fn square_to_square_in_the_cell() {
        let s1 = square().map_points(|_, p| vec![2.0 + 1.3 * p[0], 0.5 + 1.3 * p[1]]).unwrap();
        let g = steiner_minimal_trees(&square(), &SmtOptions::default()).unwrap().minima[0].signature.clone();
        let params = PathParams { samples: 60, ..Default::default() };
        let path = connect_cell(&square(), &s1, &g, &params).unwrap();
        assert!(path.passed, "failures at {:?}", path.failures);
        assert_eq!(path.escapes.len(), 2);
        assert_eq!(path.samples[0].config, square());
        assert!(!path.samples[0].verdict.unambiguous);
        assert!(path.samples.iter().all(|s| s.verdict.in_cell));
    }

    #[test]
    fn cell_endpoints_of_different_types() {
        let r = steiner_minimal_trees(&square(), &SmtOptions::default()).unwrap();
        let wide = cfg(&[[0.0, 0.0], [1.0, 0.0], [1.0, 0.8], [0.0, 0.8]]);
        let tall = cfg(&[[0.0, 0.0], [0.8, 0.0], [0.8, 1.0], [0.0, 1.0]]);
        let g = unique_type(&wide);
        assert!(r.contains(&g));
        let err = connect_cell(&wide, &tall, &g, &PathParams::default()).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)), "{err}");
    }

    #[test]
    fn straight_angle() {
        let c = cfg(&[[-1.0, 0.0], [0.0, 0.0], [1.0, 0.0]]);
        let g = SteinerTopology::new(3, 0, vec![(0, 1), (1, 2)]).unwrap();
        let net = Network::new(g, c, vec![]).unwrap();
        assert!((angle_alpha(&net, 1, 2).unwrap() - PI).abs() < 1e-15);
        assert!(angle_alpha(&net, 0, 1).is_err());
    }

    #[test]
    fn four_point_obstruction() {
        let demo = ambiguous4_demo(&SmtOptions::default()).unwrap();
        assert_eq!(demo.result.minima.len(), 2);
        let [a, b] = [&demo.result.minima[0], &demo.result.minima[1]];
        assert!((b.length - a.length).abs() <= 1e-9 * a.length);
        assert!(demo.alpha[0] > PI && demo.alpha[1] < PI);
        assert!((demo.alpha[0] + demo.alpha[1] - 2.0 * PI).abs() < 1e-6);
        for (c, net) in demo.configs.iter().zip(&demo.networks) {
            let r = steiner_minimal_trees(c, &SmtOptions::default()).unwrap();
            assert_eq!(r.minimum(&demo.signature).unwrap().network.signature(), net.signature());
        }
    }

    #[test]
    fn stretch_restores_a_tie() {
        let opts = SmtOptions::default();
        let result = steiner_minimal_trees(&square(), &opts).unwrap();
        let [a, b] = [result.minima[0].network.topology(), result.minima[1].network.topology()];
        let bent = cfg(&[[0.01, -0.02], [1.0, 0.03], [0.98, 1.0], [0.0, 1.01]]);
        let tie = tie_by_stretch(&bent, a, b, (0.8, 1.25), &opts).unwrap();
        let r = steiner_minimal_trees(&tie, &opts).unwrap();
        assert_eq!(r.minima.len(), 2);
    }
}
