use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use steiner_core::fixtures;
use steiner_core::homotopy::{self, PathParams};
use steiner_core::local_min::{minimize_fixed_topology, Network as CoreNetwork};
use steiner_core::melzak;
use steiner_core::moustache::{self, DirectionChoice, Side};
use steiner_core::render::{render_panels, Panel, RenderSpec, Stroke};
use steiner_core::smt::{self, SmtOptions, SmtResult as CoreSmtResult};
use steiner_core::topology::{enumerate_full_topologies, SteinerTopology};
use steiner_core::{Configuration as CoreConfiguration, Error, MoustacheKind, TypeSignature};

create_exception!(steiner_lab, PreconditionError, PyValueError);
create_exception!(steiner_lab, CertificationError, PyRuntimeError);

fn err(e: Error) -> PyErr {
    match e {
        Error::VerificationFailed(_) | Error::EstimationFailed(_) | Error::SearchFailed(_) | Error::SolverFailure { .. } => {
            CertificationError::new_err(e.to_string())
        }
        _ => PreconditionError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn to_json<T: Serialize>(value: &T) -> PyResult<String> {
    serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

fn from_json<T: serde::de::DeserializeOwned>(text: &str) -> PyResult<T> {
    serde_json::from_str(text).map_err(|e| PreconditionError::new_err(e.to_string()))
}

/// Ordered distinct points of equal dimension.
#[pyclass(module = "steiner_lab", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Configuration {
    inner: CoreConfiguration,
}

#[pymethods]
impl Configuration {
    #[new]
    fn new(points: Vec<Vec<f64>>) -> PyResult<Self> {
        let dim = points.first().map_or(0, Vec::len);
        Ok(Configuration { inner: CoreConfiguration::new(dim, points).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Configuration { inner: from_json(text)? })
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn points(&self) -> Vec<Vec<f64>> {
        self.inner.points().map(<[f64]>::to_vec).collect()
    }

    fn diameter(&self) -> f64 {
        self.inner.diameter()
    }

    /// Distance to the nearest plane where two points coincide.
    fn diagonal_distance(&self) -> PyResult<f64> {
        self.inner.diagonal_distance().map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.n()
    }

    fn __repr__(&self) -> String {
        format!("Configuration(n={}, dim={})", self.inner.n(), self.inner.dim())
    }
}

/// Tree with terminals 0..n and interior vertices n..n+k.
#[pyclass(module = "steiner_lab", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Topology {
    inner: SteinerTopology,
}

#[pymethods]
impl Topology {
    #[new]
    fn new(n: usize, k: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        Ok(Topology { inner: SteinerTopology::new(n, k, edges).map_err(err)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().to_vec()
    }

    fn is_full(&self) -> bool {
        self.inner.is_full()
    }

    fn __repr__(&self) -> String {
        format!("Topology(n={}, k={}, edges={:?})", self.inner.n(), self.inner.k(), self.inner.edges())
    }
}

#[pyclass(module = "steiner_lab", frozen, from_py_object)]
#[derive(Clone)]
struct Network {
    inner: CoreNetwork,
}

#[pymethods]
impl Network {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Network { inner: from_json(text)? })
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }

    #[getter]
    fn length(&self) -> f64 {
        self.inner.length()
    }

    #[getter]
    fn signature(&self) -> String {
        self.inner.signature().0
    }

    #[getter]
    fn topology(&self) -> Topology {
        Topology { inner: self.inner.topology().clone() }
    }

    #[getter]
    fn config(&self) -> Configuration {
        Configuration { inner: self.inner.config().clone() }
    }

    #[getter]
    fn interior_positions(&self) -> Vec<Vec<f64>> {
        self.inner.interior_positions().to_vec()
    }

    fn edge_lengths(&self) -> Vec<f64> {
        self.inner.edge_lengths()
    }

    /// Sum of unit vectors from terminal `u` along its edges.
    fn direction_vector(&self, u: usize) -> PyResult<Vec<f64>> {
        self.inner.direction_vector(u).map_err(err)
    }

    /// Rate at which the length decreases when terminal `i` moves along
    /// `motion[i]`.
    fn length_derivative(&self, motion: Vec<Vec<f64>>) -> PyResult<f64> {
        self.inner.length_derivative(&motion).map_err(err)
    }

    #[pyo3(signature = (angle_tol = 1e-6))]
    fn verify_locally_minimal<'py>(&self, py: Python<'py>, angle_tol: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.verify_locally_minimal(angle_tol).map_err(err)?)
    }

    fn __repr__(&self) -> String {
        format!("Network(signature={:?}, length={})", self.inner.signature().0, self.inner.length())
    }
}

#[pyclass(module = "steiner_lab", frozen)]
struct SmtResult {
    inner: CoreSmtResult,
}

#[pymethods]
impl SmtResult {
    #[getter]
    fn minima(&self) -> Vec<Network> {
        self.inner.minima.iter().map(|m| Network { inner: m.network.clone() }).collect()
    }

    #[getter]
    fn signatures(&self) -> Vec<String> {
        self.inner.minima.iter().map(|m| m.signature.0.clone()).collect()
    }

    #[getter]
    fn min_length(&self) -> f64 {
        self.inner.min_length
    }

    #[getter]
    fn ambiguous(&self) -> bool {
        self.inner.ambiguous
    }

    #[getter]
    fn fragile(&self) -> bool {
        self.inner.fragile
    }

    #[getter]
    fn runner_up(&self) -> Option<Network> {
        self.inner.runner_up.as_ref().map(|m| Network { inner: m.network.clone() })
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("SmtResult(minima={}, min_length={})", self.inner.minima.len(), self.inner.min_length)
    }
}

#[pyclass(module = "steiner_lab", frozen)]
struct CertifiedPath {
    inner: homotopy::CertifiedPath,
}

#[pymethods]
impl CertifiedPath {
    #[getter]
    fn passed(&self) -> bool {
        self.inner.passed
    }

    #[getter]
    fn target_type(&self) -> String {
        self.inner.target_type.0.clone()
    }

    #[getter]
    fn step_bound(&self) -> f64 {
        self.inner.step_bound
    }

    #[getter]
    fn failures(&self) -> Vec<f64> {
        self.inner.failures.clone()
    }

    #[getter]
    fn ts(&self) -> Vec<f64> {
        self.inner.samples.iter().map(|s| s.t).collect()
    }

    fn configurations(&self) -> Vec<Configuration> {
        self.inner.configurations().map(|c| Configuration { inner: c.clone() }).collect()
    }

    fn report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.samples.len()
    }
}

fn smt_options(rel_tol: f64, budget: Option<usize>, prune: bool) -> SmtOptions {
    let mut opts = SmtOptions::with_rel_tol(rel_tol);
    if let Some(b) = budget {
        opts.budget = b;
    }
    opts.prune = prune;
    opts
}

#[pyfunction]
#[pyo3(signature = (config, rel_tol = 1e-9, budget = None, prune = true))]
fn steiner_minimal_trees(py: Python<'_>, config: &Configuration, rel_tol: f64, budget: Option<usize>, prune: bool) -> PyResult<SmtResult> {
    let opts = smt_options(rel_tol, budget, prune);
    let inner = py.detach(|| smt::steiner_minimal_trees(&config.inner, &opts)).map_err(err)?;
    Ok(SmtResult { inner })
}

/// Type of the shortest network of three planar points.
#[pyfunction]
fn classify3(config: &Configuration) -> PyResult<String> {
    Ok(smt::classify3(&config.inner).map_err(err)?.to_string())
}

#[pyfunction]
fn full_topologies(n: usize) -> PyResult<Vec<Topology>> {
    Ok(enumerate_full_topologies(n, n.max(3)).map_err(err)?.into_iter().map(|inner| Topology { inner }).collect())
}

/// Shortest realization of a topology, with collapsed edges contracted.
#[pyfunction]
fn minimize(config: &Configuration, topology: &Topology) -> PyResult<Network> {
    let net = minimize_fixed_topology(&config.inner, &topology.inner, &Default::default()).map_err(err)?;
    Ok(Network { inner: net })
}

/// Planar construction of a full topology; `None` when it has no
/// realization without collapsed edges.
#[pyfunction]
fn melzak_solve(config: &Configuration, topology: &Topology) -> PyResult<Option<Network>> {
    Ok(melzak::melzak_solve(&config.inner, &topology.inner).map_err(err)?.map(|inner| Network { inner }))
}

#[pyfunction]
fn trim(net: &Network, terminal: usize, t: f64) -> PyResult<(Configuration, Network)> {
    let (c, n) = moustache::trim(&net.inner, terminal, t).map_err(err)?;
    Ok((Configuration { inner: c }, Network { inner: n }))
}

fn frame(
    net: &Network,
    terminal: usize,
    r: f64,
    kind: &str,
    side: Option<&str>,
    normal: Option<Vec<f64>>,
    direction: Option<Vec<f64>>,
) -> PyResult<moustache::GrowthFrame> {
    let kind = match kind {
        "one-sided" => MoustacheKind::OneSided,
        "two-sided" => MoustacheKind::TwoSided,
        other => return Err(PreconditionError::new_err(format!("unknown moustache kind {other:?}"))),
    };
    let choice = match (side, normal, direction) {
        (Some("left"), _, _) => DirectionChoice::Side(Side::Left),
        (Some("right"), _, _) => DirectionChoice::Side(Side::Right),
        (Some(other), _, _) => return Err(PreconditionError::new_err(format!("unknown side {other:?}"))),
        (None, Some(n), _) => DirectionChoice::Normal(n),
        (None, None, Some(d)) => DirectionChoice::Direction(d),
        (None, None, None) => DirectionChoice::Default,
    };
    moustache::make_growth_frame(&net.inner, terminal, kind, &choice, r).map_err(err)
}

/// Grows a moustache of length `r` at a degree-1 terminal. Returns the new
/// configuration, the grown network and the labels of the new leaves.
#[pyfunction]
#[pyo3(signature = (net, terminal, r, kind = "one-sided", side = None, normal = None, direction = None, keep_anchor = false))]
#[allow(clippy::too_many_arguments)]
fn grow(
    net: &Network,
    terminal: usize,
    r: f64,
    kind: &str,
    side: Option<&str>,
    normal: Option<Vec<f64>>,
    direction: Option<Vec<f64>>,
    keep_anchor: bool,
) -> PyResult<(Configuration, Network, Vec<usize>)> {
    let f = frame(net, terminal, r, kind, side, normal, direction)?;
    let g = moustache::grow(&net.inner, &f, None, keep_anchor).map_err(err)?;
    Ok((Configuration { inner: g.config }, Network { inner: g.network }, g.leaf_labels))
}

#[pyfunction]
#[pyo3(signature = (net, terminal, kind = "one-sided", side = None, normal = None, r_max = 1.0, keep_anchor = false))]
#[allow(clippy::too_many_arguments)]
fn estimate_r1<'py>(
    py: Python<'py>,
    net: &Network,
    terminal: usize,
    kind: &str,
    side: Option<&str>,
    normal: Option<Vec<f64>>,
    r_max: f64,
    keep_anchor: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let f = frame(net, terminal, r_max, kind, side, normal, None)?;
    let est = py
        .detach(|| moustache::estimate_r1(&net.inner, &f, None, keep_anchor, r_max, &SmtOptions::default()))
        .map_err(err)?;
    to_py(py, &est)
}

fn target(s0: &CoreConfiguration, signature: Option<String>) -> PyResult<TypeSignature> {
    match signature {
        Some(s) => Ok(TypeSignature(s)),
        None => {
            let r = smt::steiner_minimal_trees(s0, &SmtOptions::default()).map_err(err)?;
            r.unique_type().cloned().ok_or_else(|| PreconditionError::new_err("first endpoint is ambiguous; pass a signature"))
        }
    }
}

/// Path from `s0` to `s1` along which the shortest network stays unique and
/// of one type. The result reports whether every sample was certified.
#[pyfunction]
#[pyo3(signature = (s0, s1, signature = None, samples = 200, cell = false))]
fn connect(py: Python<'_>, s0: &Configuration, s1: &Configuration, signature: Option<String>, samples: usize, cell: bool) -> PyResult<CertifiedPath> {
    let g = target(&s0.inner, signature)?;
    let params = PathParams { samples, ..Default::default() };
    let inner = py
        .detach(|| {
            if cell {
                homotopy::connect_cell(&s0.inner, &s1.inner, &g, &params)
            } else {
                homotopy::connect_unambiguous(&s0.inner, &s1.inner, &g, &params)
            }
        })
        .map_err(err)?;
    Ok(CertifiedPath { inner })
}

/// Moves an ambiguous planar configuration to one where `signature` is the
/// only shortest type.
#[pyfunction]
fn escape_ambiguity<'py>(py: Python<'py>, config: &Configuration, signature: String) -> PyResult<(Configuration, Bound<'py, PyAny>)> {
    let mv = py
        .detach(|| homotopy::escape_ambiguity(&config.inner, &TypeSignature(signature), &SmtOptions::default()))
        .map_err(err)?;
    Ok((Configuration { inner: mv.config.clone() }, to_py(py, &mv)?))
}

/// Configurations of a bundled example, keyed by file suffix.
#[pyfunction]
fn fixture(name: &str) -> PyResult<Vec<(String, Configuration)>> {
    let f = fixtures::fixture(name).map_err(err)?;
    Ok(f.configs.into_iter().map(|(s, inner)| (s, Configuration { inner })).collect())
}

/// SVG of planar networks drawn over one configuration, the first solid
/// and the rest dashed.
#[pyfunction]
#[pyo3(signature = (config, networks = Vec::new(), width = 480, height = 480, labels = true))]
fn render_svg(config: &Configuration, networks: Vec<Network>, width: u32, height: u32, labels: bool) -> PyResult<String> {
    let panel = networks.into_iter().enumerate().fold(Panel::new(config.inner.clone()), |p, (i, n)| {
        p.with_network(n.inner, if i == 0 { Stroke::Solid } else { Stroke::Dashed })
    });
    let spec = RenderSpec { width, height, labels, ..Default::default() };
    render_panels(&[panel], &spec).map_err(err)
}

#[pymodule]
fn steiner_lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("PreconditionError", m.py().get_type::<PreconditionError>())?;
    m.add("CertificationError", m.py().get_type::<CertificationError>())?;
    m.add_class::<Configuration>()?;
    m.add_class::<Topology>()?;
    m.add_class::<Network>()?;
    m.add_class::<SmtResult>()?;
    m.add_class::<CertifiedPath>()?;
    m.add_function(wrap_pyfunction!(steiner_minimal_trees, m)?)?;
    m.add_function(wrap_pyfunction!(classify3, m)?)?;
    m.add_function(wrap_pyfunction!(full_topologies, m)?)?;
    m.add_function(wrap_pyfunction!(minimize, m)?)?;
    m.add_function(wrap_pyfunction!(melzak_solve, m)?)?;
    m.add_function(wrap_pyfunction!(trim, m)?)?;
    m.add_function(wrap_pyfunction!(grow, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_r1, m)?)?;
    m.add_function(wrap_pyfunction!(connect, m)?)?;
    m.add_function(wrap_pyfunction!(escape_ambiguity, m)?)?;
    m.add_function(wrap_pyfunction!(fixture, m)?)?;
    m.add_function(wrap_pyfunction!(render_svg, m)?)?;
    Ok(())
}
