//! Ordered point configurations and their place in `R^{nd}`.
//!
//! A [`Configuration`] is an ordered list of `n` distinct points in `R^d`.
//! Listing the coordinates point by point gives its [`ConfigVector`]; the
//! configuration space is `R^{nd}` with the coincidence planes
//! `{p_i = p_j}` removed, and [`Configuration::diagonal_distance`] measures
//! how far a configuration sits from those planes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom;

/// Two points closer than this are treated as coincident.
pub const DISTINCT_EPS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConfigurationJson", into = "ConfigurationJson")]
pub struct Configuration {
    dim: usize,
    coords: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ConfigurationJson {
    dim: usize,
    points: Vec<Vec<f64>>,
}

impl TryFrom<ConfigurationJson> for Configuration {
    type Error = Error;

    fn try_from(value: ConfigurationJson) -> Result<Self> {
        Configuration::new(value.dim, value.points)
    }
}

impl From<Configuration> for ConfigurationJson {
    fn from(value: Configuration) -> Self {
        ConfigurationJson {
            dim: value.dim,
            points: value.points().map(<[f64]>::to_vec).collect(),
        }
    }
}

/// The flattened coordinate vector `(p_11, ..., p_1d, p_21, ..., p_nd)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigVector {
    pub entries: Vec<f64>,
}

impl ConfigVector {
    /// Distance from this vector to the nearest plane `Delta_i^j`, where the
    /// vector is read as `entries.len() / dim` points of dimension `dim`.
    ///
    /// The closest point of `Delta_i^j` replaces `p_i` and `p_j` by their
    /// midpoint, so the distance is `|p_i - p_j| / sqrt(2)`.
    pub fn diagonal_distance(&self, dim: usize) -> Result<f64> {
        if dim == 0 || self.entries.len() % dim != 0 {
            return Err(Error::InvalidConfiguration(format!(
                "vector of length {} does not split into points of dimension {dim}",
                self.entries.len()
            )));
        }
        let n = self.entries.len() / dim;
        if n < 2 {
            return Err(Error::NoDiagonalPlanes);
        }
        let pt = |i: usize| &self.entries[i * dim..(i + 1) * dim];
        let mut best = f64::INFINITY;
        for i in 0..n {
            for j in i + 1..n {
                best = best.min(geom::dist(pt(i), pt(j)));
            }
        }
        Ok(best / std::f64::consts::SQRT_2)
    }
}

impl Configuration {
    /// Builds a configuration from explicit points, checking dimension,
    /// finiteness and pairwise distinctness.
    pub fn new(dim: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::InvalidConfiguration(format!(
                "every point must have {dim} coordinates"
            )));
        }
        Self::from_flat(dim, points.into_iter().flatten().collect())
    }

    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfiguration("dimension must be positive".into()));
        }
        if coords.is_empty() || coords.len() % dim != 0 {
            return Err(Error::InvalidConfiguration(format!(
                "need a positive multiple of {dim} coordinates, got {}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidConfiguration("coordinates must be finite".into()));
        }
        let config = Configuration { dim, coords };
        for i in 0..config.n() {
            for j in i + 1..config.n() {
                if geom::dist(config.point(i), config.point(j)) <= DISTINCT_EPS {
                    return Err(Error::InvalidConfiguration(format!(
                        "points {} and {} coincide",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(config)
    }

    pub fn unflatten(dim: usize, v: &ConfigVector) -> Result<Self> {
        Self::from_flat(dim, v.entries.clone())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn flatten(&self) -> ConfigVector {
        ConfigVector { entries: self.coords.clone() }
    }

    pub fn diagonal_distance(&self) -> Result<f64> {
        self.flatten().diagonal_distance(self.dim)
    }

    /// Largest pairwise distance; 1 for a single point so that relative
    /// tolerances stay meaningful.
    pub fn diameter(&self) -> f64 {
        let mut best: f64 = 0.0;
        for i in 0..self.n() {
            for j in i + 1..self.n() {
                best = best.max(geom::dist(self.point(i), self.point(j)));
            }
        }
        if best > 0.0 {
            best
        } else {
            1.0
        }
    }

    /// Replaces point `i`, re-validating distinctness.
    pub fn with_point(&self, i: usize, p: &[f64]) -> Result<Self> {
        let mut coords = self.coords.clone();
        coords[i * self.dim..(i + 1) * self.dim].copy_from_slice(p);
        Self::from_flat(self.dim, coords)
    }

    /// Removes the points at the given indices, keeping the order of the rest.
    pub fn without(&self, indices: &[usize]) -> Result<Self> {
        let coords = (0..self.n())
            .filter(|i| !indices.contains(i))
            .flat_map(|i| self.point(i).to_vec())
            .collect();
        Self::from_flat(self.dim, coords)
    }

    /// Applies `f` to every point.
    pub fn map_points(&self, mut f: impl FnMut(usize, &[f64]) -> Vec<f64>) -> Result<Self> {
        let coords = self
            .points()
            .enumerate()
            .flat_map(|(i, p)| f(i, p))
            .collect();
        Self::from_flat(self.dim, coords)
    }

    /// Reorders points: the new point `k` is the old point `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.n() {
            return Err(Error::InvalidConfiguration("permutation has wrong length".into()));
        }
        let coords = order.iter().flat_map(|&i| self.point(i).to_vec()).collect();
        Self::from_flat(self.dim, coords)
    }

    /// Euclidean distance in `R^{nd}`.
    pub fn distance_to(&self, other: &Configuration) -> f64 {
        geom::dist(&self.coords, &other.coords)
    }

    /// Linear interpolation in `R^{nd}`. The result is validated.
    pub fn lerp(&self, other: &Configuration, t: f64) -> Result<Self> {
        Self::from_flat(self.dim, geom::lerp(&self.coords, &other.coords, t))
    }
}

/// A piecewise-linear path in configuration space, given by its vertices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolylinePath {
    pub vertices: Vec<Configuration>,
}

impl PolylinePath {
    /// Samples `count >= 2` configurations evenly spaced in arc length
    /// (every vertex of the polyline is included as well).
    pub fn sample(&self, count: usize) -> Result<Vec<(f64, Configuration)>> {
        let verts = &self.vertices;
        if verts.len() == 1 || count < 2 {
            return Ok(vec![(0.0, verts[0].clone()), (1.0, verts[0].clone())]);
        }
        let seg: Vec<f64> = verts.windows(2).map(|w| w[0].distance_to(&w[1])).collect();
        let total: f64 = seg.iter().sum();
        let mut breaks = vec![0.0];
        let mut acc = 0.0;
        for s in &seg {
            acc += s;
            breaks.push(if total > 0.0 { acc / total } else { breaks.len() as f64 / seg.len() as f64 });
        }
        *breaks.last_mut().unwrap() = 1.0;
        let mut ts: Vec<f64> = (0..count).map(|i| i as f64 / (count - 1) as f64).collect();
        ts.extend(breaks.iter().copied());
        ts.sort_by(f64::total_cmp);
        ts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        let mut out = Vec::with_capacity(ts.len());
        for t in ts {
            let k = match breaks.iter().position(|&b| b >= t) {
                Some(0) => 1,
                Some(k) => k,
                None => breaks.len() - 1,
            };
            let (b0, b1) = (breaks[k - 1], breaks[k]);
            let local = if b1 > b0 { (t - b0) / (b1 - b0) } else { 0.0 };
            let c = if local <= 0.0 {
                verts[k - 1].clone()
            } else if local >= 1.0 {
                verts[k].clone()
            } else {
                verts[k - 1].lerp(&verts[k], local)?
            };
            out.push((t, c));
        }
        Ok(out)
    }
}

/// Builds a path from `c0` to `c1` that stays off the coincidence planes, for
/// the base cases `n <= 2`.
///
/// Every point of the returned polyline keeps diagonal distance at least
/// `min(clearance, diagonal_distance(c0), diagonal_distance(c1))`. For `n = 2`
/// the first point follows its straight segment and the difference vector
/// `delta = p2 - p1` either moves straight or, when that would pass too close
/// to zero, is lifted along a unit direction `e` orthogonal to the motion of
/// `delta`, carried across, and lowered again.
pub fn interpolate_off_diagonal(
    c0: &Configuration,
    c1: &Configuration,
    clearance: f64,
) -> Result<PolylinePath> {
    if c0.n() != c1.n() || c0.dim() != c1.dim() {
        return Err(Error::Precondition(
            "endpoints must have equal point count and dimension".into(),
        ));
    }
    if c0.n() > 2 {
        return Err(Error::Precondition("base-case interpolation needs n <= 2".into()));
    }
    if !(clearance > 0.0) {
        return Err(Error::Precondition("clearance must be positive".into()));
    }
    if c0 == c1 || c0.n() == 1 {
        return Ok(PolylinePath { vertices: vec![c0.clone(), c1.clone()] });
    }
    let d = c0.dim();
    let d0 = geom::sub(c0.point(1), c0.point(0));
    let d1 = geom::sub(c1.point(1), c1.point(0));
    if d == 1 && d0[0].signum() != d1[0].signum() {
        return Err(Error::DisconnectedBaseSpace);
    }
    let target = clearance
        .min(c0.diagonal_distance()?)
        .min(c1.diagonal_distance()?)
        * std::f64::consts::SQRT_2;
    // Minimum of |d0 + s (d1 - d0)| over s in [0, 1].
    let motion = geom::sub(&d1, &d0);
    let mm = geom::dot(&motion, &motion);
    let s_star = if mm > 0.0 { (-geom::dot(&d0, &motion) / mm).clamp(0.0, 1.0) } else { 0.0 };
    let closest = geom::norm(&geom::axpy(&d0, s_star, &motion));
    if closest >= target {
        return Ok(PolylinePath { vertices: vec![c0.clone(), c1.clone()] });
    }
    let u = geom::normalized(&motion).expect("endpoints differ");
    let mut e = geom::orthogonal_unit(&u);
    if geom::dot(&d0, &e) < 0.0 {
        e = geom::scale(&e, -1.0);
    }
    let half_endpoint = 0.5 * c0.diagonal_distance()?.min(c1.diagonal_distance()?);
    let lift = clearance.max(half_endpoint) * std::f64::consts::SQRT_2;
    let build = |t: f64, delta: &[f64]| -> Result<Configuration> {
        let p1 = geom::lerp(c0.point(0), c1.point(0), t);
        let p2 = geom::add(&p1, delta);
        Configuration::new(d, vec![p1, p2])
    };
    let up0 = geom::axpy(&d0, lift, &e);
    let up1 = geom::axpy(&d1, lift, &e);
    Ok(PolylinePath {
        vertices: vec![
            c0.clone(),
            build(1.0 / 3.0, &up0)?,
            build(2.0 / 3.0, &up1)?,
            c1.clone(),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(dim: usize, pts: &[&[f64]]) -> Configuration {
        Configuration::new(dim, pts.iter().map(|p| p.to_vec()).collect()).unwrap()
    }

    #[test]
    fn flatten_lists_points_in_order() {
        assert_eq!(cfg(2, &[&[1.0, 2.0], &[3.0, 4.0]]).flatten().entries, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(cfg(3, &[&[0.0, 0.0, 0.0]]).flatten().entries, vec![0.0; 3]);
        assert_eq!(
            cfg(2, &[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]).flatten().entries,
            vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0]
        );
    }

    /// Oracle: minimize `sqrt(|p - m|^2 + |q - m|^2)` over a grid of `m` in
    /// `[-1, 3] x [-2, 2]`.
    fn brute_force_plane_distance(p: &[f64], q: &[f64]) -> f64 {
        let steps = 400;
        let mut best = f64::INFINITY;
        for i in 0..=steps {
            for j in 0..=steps {
                let m = [-1.0 + 4.0 * i as f64 / steps as f64, -2.0 + 4.0 * j as f64 / steps as f64];
                let d2 = geom::dist(p, &m).powi(2) + geom::dist(q, &m).powi(2);
                best = best.min(d2.sqrt());
            }
        }
        best
    }

    #[test]
    fn diagonal_distance_examples() {
        let c = cfg(2, &[&[0.0, 0.0], &[2.0, 0.0]]);
        assert!((c.diagonal_distance().unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((brute_force_plane_distance(&[0.0, 0.0], &[2.0, 0.0]) - 2f64.sqrt()).abs() < 1e-2);

        let probe = ConfigVector { entries: vec![0.0, 0.0, 0.0, 0.0] };
        assert_eq!(probe.diagonal_distance(2).unwrap(), 0.0);
        assert!(Configuration::from_flat(2, probe.entries).is_err());

        let c = cfg(2, &[&[0.0, 0.0], &[3.0, 4.0], &[100.0, 100.0]]);
        assert!((c.diagonal_distance().unwrap() - 5.0 / 2f64.sqrt()).abs() < 1e-14);

        assert!(matches!(cfg(2, &[&[0.0, 0.0]]).diagonal_distance(), Err(Error::NoDiagonalPlanes)));
    }

    #[test]
    fn swap_of_two_points_detours() {
        let c0 = cfg(2, &[&[0.0, 0.0], &[1.0, 0.0]]);
        let c1 = cfg(2, &[&[1.0, 0.0], &[0.0, 0.0]]);
        let path = interpolate_off_diagonal(&c0, &c1, 0.3).unwrap();
        assert_eq!(path.vertices.len(), 4);
        let bound = 0.3f64.min(1.0 / 2f64.sqrt());
        for (_, c) in path.sample(201).unwrap() {
            assert!(c.diagonal_distance().unwrap() >= bound - 1e-12);
        }
        // The straight segment would hit the plane at t = 1/2.
        let mid = ConfigVector { entries: geom::lerp(c0.coords(), c1.coords(), 0.5) };
        assert!(mid.diagonal_distance(2).unwrap() < 1e-15);
    }

    #[test]
    fn base_cases() {
        let a = cfg(2, &[&[0.0, 0.0]]);
        let b = cfg(2, &[&[5.0, 5.0]]);
        assert_eq!(interpolate_off_diagonal(&a, &b, 1.0).unwrap().vertices, vec![a.clone(), b]);
        let c = cfg(2, &[&[0.0, 0.0], &[1.0, 0.0]]);
        let p = interpolate_off_diagonal(&c, &c, 1.0).unwrap();
        assert!(p.vertices.iter().all(|v| *v == c));
        let l0 = cfg(1, &[&[0.0], &[1.0]]);
        let l1 = cfg(1, &[&[1.0], &[0.0]]);
        assert!(matches!(interpolate_off_diagonal(&l0, &l1, 0.1), Err(Error::DisconnectedBaseSpace)));
    }

    fn arb_config(n: usize, d: usize) -> impl Strategy<Value = Configuration> {
        prop::collection::vec(-5.0f64..5.0, n * d)
            .prop_filter_map("distinct points", move |v| Configuration::from_flat(d, v).ok())
            .prop_filter("well separated", |c| c.n() < 2 || c.diagonal_distance().unwrap() > 1e-3)
    }

    proptest! {
        #[test]
        fn flatten_round_trips(c in (1usize..5, 2usize..4).prop_flat_map(|(n, d)| arb_config(n, d))) {
            prop_assert_eq!(Configuration::unflatten(c.dim(), &c.flatten()).unwrap(), c);
        }

        #[test]
        fn diagonal_distance_scales_linearly(c in arb_config(4, 2), s in 0.1f64..10.0) {
            let scaled = c.map_points(|_, p| geom::scale(p, s)).unwrap();
            let a = c.diagonal_distance().unwrap();
            prop_assert!(a > 0.0);
            prop_assert!((scaled.diagonal_distance().unwrap() - s * a).abs() <= 1e-12 * s * a.max(1.0));
        }

        #[test]
        fn interpolation_samples_stay_valid(
            (c0, c1) in (2usize..4).prop_flat_map(|d| (arb_config(2, d), arb_config(2, d))),
            clearance in 0.01f64..2.0,
        ) {
            let path = interpolate_off_diagonal(&c0, &c1, clearance).unwrap();
            let bound = clearance
                .min(c0.diagonal_distance().unwrap())
                .min(c1.diagonal_distance().unwrap());
            for (_, c) in path.sample(64).unwrap() {
                prop_assert!(c.diagonal_distance().unwrap() >= bound * (1.0 - 1e-9));
            }
            // and exactly on the segment joints
            for w in path.vertices.windows(2) {
                let d0 = geom::sub(w[0].point(1), w[0].point(0));
                let d1 = geom::sub(w[1].point(1), w[1].point(0));
                let m = geom::sub(&d1, &d0);
                let mm = geom::dot(&m, &m);
                let s = if mm > 0.0 { (-geom::dot(&d0, &m) / mm).clamp(0.0, 1.0) } else { 0.0 };
                let closest = geom::norm(&geom::axpy(&d0, s, &m)) / 2f64.sqrt();
                prop_assert!(closest >= bound * (1.0 - 1e-9));
            }
        }
    }
}
