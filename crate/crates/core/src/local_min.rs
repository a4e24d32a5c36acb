//! Straight-line networks for a fixed topology: minimization, the
//! local-minimality checks, direction vectors and the length derivative.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::config_space::Configuration;
use crate::error::{Error, Result};
use crate::geom;
use crate::irls::{SolverOptions, TreeProblem};
use crate::topology::{SteinerTopology, TopologyJson, TypeSignature};

const TWO_THIRDS_PI: f64 = 2.0 * PI / 3.0;

/// A realization of a topology: terminals at the configuration points,
/// interior vertices at `interior`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkJson", into = "NetworkJson")]
pub struct Network {
    topology: SteinerTopology,
    config: Configuration,
    interior: Vec<Vec<f64>>,
    length: f64,
}

#[derive(Serialize, Deserialize)]
struct NetworkJson {
    #[serde(flatten)]
    topology: TopologyJson,
    dim: usize,
    points: Vec<Vec<f64>>,
    interior_positions: Vec<Vec<f64>>,
    #[serde(default)]
    length: Option<f64>,
}

impl TryFrom<NetworkJson> for Network {
    type Error = Error;

    fn try_from(value: NetworkJson) -> Result<Self> {
        let topology = SteinerTopology::try_from(value.topology)?;
        let config = Configuration::new(value.dim, value.points)?;
        Network::new(topology, config, value.interior_positions)
    }
}

impl From<Network> for NetworkJson {
    fn from(value: Network) -> Self {
        NetworkJson {
            dim: value.config.dim(),
            points: value.config.points().map(|p| p.to_vec()).collect(),
            topology: value.topology.into(),
            interior_positions: value.interior,
            length: Some(value.length),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalMinReport {
    /// Interior vertices have degree 3 and terminals degree at most 3.
    pub degree_ok: bool,
    /// Smallest angle between edges at a vertex of degree 3, if any.
    pub angle_min_deg3: Option<f64>,
    /// Smallest angle at a vertex of degree 2, if any.
    pub angle_min_deg2: Option<f64>,
    /// Largest angle defect in radians.
    pub max_violation: f64,
    pub passed: bool,
}

impl Network {
    pub fn new(topology: SteinerTopology, config: Configuration, interior: Vec<Vec<f64>>) -> Result<Self> {
        if topology.n() != config.n() {
            return Err(Error::InvalidTopology(format!(
                "topology has {} terminals but the configuration has {} points",
                topology.n(),
                config.n()
            )));
        }
        if interior.len() != topology.k() {
            return Err(Error::InvalidTopology(format!(
                "expected {} interior positions, got {}",
                topology.k(),
                interior.len()
            )));
        }
        if interior.iter().any(|p| p.len() != config.dim() || p.iter().any(|x| !x.is_finite())) {
            return Err(Error::InvalidConfiguration("bad interior position".into()));
        }
        let mut net = Network { topology, config, interior, length: 0.0 };
        net.length = net.edge_lengths().iter().sum();
        Ok(net)
    }

    pub fn topology(&self) -> &SteinerTopology {
        &self.topology
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn interior_positions(&self) -> &[Vec<f64>] {
        &self.interior
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dim(&self) -> usize {
        self.config.dim()
    }

    pub fn position(&self, v: usize) -> &[f64] {
        let n = self.topology.n();
        if v < n {
            self.config.point(v)
        } else {
            &self.interior[v - n]
        }
    }

    /// Positions of all vertices, terminals first.
    pub fn positions(&self) -> Vec<Vec<f64>> {
        (0..self.topology.num_vertices()).map(|v| self.position(v).to_vec()).collect()
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        self.topology
            .edges()
            .iter()
            .map(|&(a, b)| geom::dist(self.position(a), self.position(b)))
            .collect()
    }

    pub fn shortest_edge(&self) -> f64 {
        self.edge_lengths().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Merges edges shorter than `tol`, yielding the realized (lower) type.
    pub fn contracted(&self, tol: f64) -> Result<Network> {
        let (topology, positions) = self.topology.contract(&self.positions(), tol)?;
        let interior = positions[topology.n()..].to_vec();
        Network::new(topology, self.config.clone(), interior)
    }

    /// Type signature of this realization (planar in the plane).
    pub fn signature(&self) -> TypeSignature {
        self.topology.signature_at(&self.positions())
    }

    fn unit_edges_at(&self, u: usize) -> Result<Vec<Vec<f64>>> {
        let adj = self.topology.adjacency();
        adj[u]
            .iter()
            .map(|&v| geom::unit_towards(self.position(u), self.position(v)).ok_or(Error::DegenerateVertex(u)))
            .collect()
    }

    /// Sum of the unit vectors from `u` along its incident edges.
    pub fn direction_vector(&self, u: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        for e in self.unit_edges_at(u)? {
            for (o, x) in out.iter_mut().zip(e) {
                *o += x;
            }
        }
        Ok(out)
    }

    /// Rate at which the length decreases when every terminal `u` moves
    /// with velocity `motion[u]` and the network stays locally minimal:
    /// `sum_u <motion[u], direction_vector(u)>`.
    pub fn length_derivative(&self, motion: &[Vec<f64>]) -> Result<f64> {
        if motion.len() != self.topology.n() {
            return Err(Error::Precondition(format!(
                "motion has {} vectors for {} terminals",
                motion.len(),
                self.topology.n()
            )));
        }
        let mut total = 0.0;
        for (u, m) in motion.iter().enumerate() {
            total += geom::dot(m, &self.direction_vector(u)?);
        }
        Ok(total)
    }

    /// Checks the degree and angle conditions of a locally minimal network.
    pub fn verify_locally_minimal(&self, angle_tol: f64) -> Result<LocalMinReport> {
        let zero = 1e-12 * self.config.diameter();
        for (e, len) in self.edge_lengths().into_iter().enumerate() {
            if len <= zero {
                return Err(Error::ContractFirst(e));
            }
        }
        let deg = self.topology.degrees();
        let n = self.topology.n();
        let degree_ok = deg.iter().enumerate().all(|(v, &d)| if v < n { (1..=3).contains(&d) } else { d == 3 });
        let mut min3: Option<f64> = None;
        let mut min2: Option<f64> = None;
        let mut violation: f64 = 0.0;
        for u in 0..self.topology.num_vertices() {
            if deg[u] < 2 || deg[u] > 3 {
                continue;
            }
            let units = self.unit_edges_at(u)?;
            let mut angles = Vec::new();
            for i in 0..units.len() {
                for j in i + 1..units.len() {
                    angles.push(geom::angle_between(&units[i], &units[j]));
                }
            }
            let smallest = angles.iter().copied().fold(f64::INFINITY, f64::min);
            if deg[u] == 3 {
                min3 = Some(min3.map_or(smallest, |m| m.min(smallest)));
                for a in &angles {
                    violation = violation.max((a - TWO_THIRDS_PI).abs());
                }
            } else {
                min2 = Some(min2.map_or(smallest, |m| m.min(smallest)));
                violation = violation.max(TWO_THIRDS_PI - smallest);
            }
        }
        Ok(LocalMinReport {
            degree_ok,
            angle_min_deg3: min3,
            angle_min_deg2: min2,
            max_violation: violation,
            passed: degree_ok && violation <= angle_tol,
        })
    }

    /// True when both networks span the same points and, at every terminal,
    /// the incident edge directions agree as sets within `tol`.
    pub fn are_codirected(&self, other: &Network, tol: f64) -> bool {
        if self.config.n() != other.config.n() || self.config.distance_to(&other.config) > tol {
            return false;
        }
        (0..self.topology.n()).all(|u| {
            let (Ok(a), Ok(b)) = (self.unit_edges_at(u), other.unit_edges_at(u)) else {
                return false;
            };
            if a.len() != b.len() {
                return false;
            }
            let mut used = vec![false; b.len()];
            a.iter().all(|x| {
                match (0..b.len()).find(|&j| !used[j] && geom::dist(x, &b[j]) <= tol) {
                    Some(j) => {
                        used[j] = true;
                        true
                    }
                    None => false,
                }
            })
        })
    }
}

fn problem_for(config: &Configuration, topology: &SteinerTopology) -> Result<TreeProblem> {
    if topology.n() != config.n() {
        return Err(Error::InvalidTopology(format!(
            "topology has {} terminals but the configuration has {} points",
            topology.n(),
            config.n()
        )));
    }
    Ok(TreeProblem {
        dim: config.dim(),
        fixed: config.coords().to_vec(),
        n_fixed: config.n(),
        n_free: topology.k(),
        edges: topology.edges().to_vec(),
        scale: config.diameter(),
    })
}

/// Shortest realization of `topology` spanning `config`. Edges may come out
/// with zero length; see [`Network::contracted`].
pub fn minimize_fixed_topology(config: &Configuration, topology: &SteinerTopology, opts: &SolverOptions) -> Result<Network> {
    let problem = problem_for(config, topology)?;
    let init = problem.default_init();
    finish(problem, init, config, topology, opts)
}

/// As [`minimize_fixed_topology`] but starting from the given interior positions.
pub fn minimize_from(
    config: &Configuration,
    topology: &SteinerTopology,
    init: &[Vec<f64>],
    opts: &SolverOptions,
) -> Result<Network> {
    let problem = problem_for(config, topology)?;
    if init.len() != topology.k() || init.iter().any(|p| p.len() != config.dim()) {
        return Err(Error::Precondition("initial positions do not match the topology".into()));
    }
    let flat = init.iter().flatten().copied().collect();
    finish(problem, flat, config, topology, opts)
}

fn finish(
    problem: TreeProblem,
    init: Vec<f64>,
    config: &Configuration,
    topology: &SteinerTopology,
    opts: &SolverOptions,
) -> Result<Network> {
    let solved = problem.solve(init, opts)?;
    let interior = solved.free.chunks(config.dim().max(1)).map(|c| c.to_vec()).collect();
    Network::new(topology.clone(), config.clone(), interior)
}
