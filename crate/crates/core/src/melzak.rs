//! Melzak construction of the full Steiner tree for a planar configuration.
//!
//! Root the tree at the first terminal. Bottom-up, every interior vertex is
//! replaced by an equilateral point of the points standing in for its two
//! children; both orientations are tried for every interior vertex. The
//! tree is then traced back from the root: each interior vertex is the
//! second intersection of the segment from its parent with the circle
//! through its children's points and its own equilateral point.

use crate::config_space::Configuration;
use crate::error::{Error, Result};
use crate::geom;
use crate::local_min::Network;
use crate::topology::SteinerTopology;

type P = [f64; 2];

fn sub(a: P, b: P) -> P {
    [a[0] - b[0], a[1] - b[1]]
}

fn orient(a: P, b: P, c: P) -> f64 {
    geom::orient2(&a, &b, &c)
}

/// Apex of the equilateral triangle on `a, b`, to the left of `a -> b` when
/// `left` is set.
fn equilateral(a: P, b: P, left: bool) -> P {
    let d = sub(b, a);
    let s = if left { 1.0 } else { -1.0 } * 3f64.sqrt() / 2.0;
    [a[0] + 0.5 * d[0] - s * d[1], a[1] + 0.5 * d[1] + s * d[0]]
}

struct Rooted {
    /// Steiner vertices in an order where children come before parents.
    postorder: Vec<usize>,
    children: Vec<Vec<usize>>,
    root_child: usize,
}

fn root_at_first_terminal(topology: &SteinerTopology) -> Rooted {
    let adj = topology.adjacency();
    let mut children = vec![Vec::new(); topology.num_vertices()];
    let mut order = Vec::new();
    let mut stack = vec![(adj[0][0], 0usize)];
    while let Some((u, parent)) = stack.pop() {
        order.push(u);
        for &w in &adj[u] {
            if w != parent {
                children[u].push(w);
                stack.push((w, u));
            }
        }
    }
    let postorder = order.into_iter().rev().filter(|&u| !topology.is_terminal(u)).collect();
    Rooted { postorder, children, root_child: adj[0][0] }
}

/// The shortest realization of a full topology in the plane without
/// collapsed edges, or `None` when no such realization exists.
pub fn melzak_solve(config: &Configuration, topology: &SteinerTopology) -> Result<Option<Network>> {
    if config.dim() != 2 {
        return Err(Error::Precondition("construction needs planar points".into()));
    }
    if !topology.is_full() {
        return Err(Error::Precondition("construction needs a full topology".into()));
    }
    if topology.n() != config.n() {
        return Err(Error::InvalidTopology("terminal count does not match the configuration".into()));
    }
    let n = topology.n();
    if topology.k() == 0 {
        return Network::new(topology.clone(), config.clone(), vec![]).map(Some);
    }
    let tree = root_at_first_terminal(topology);
    let v = topology.num_vertices();
    let k = topology.k();
    let pt = |i: usize| -> P { [config.point(i)[0], config.point(i)[1]] };
    let slack = 1e-12 * config.diameter() * config.diameter();
    let mut best: Option<Network> = None;
    for mask in 0u64..(1u64 << k) {
        let mut eq = vec![[0.0; 2]; v];
        for t in 0..n {
            eq[t] = pt(t);
        }
        for &s in &tree.postorder {
            let [a, b] = [tree.children[s][0], tree.children[s][1]];
            eq[s] = equilateral(eq[a], eq[b], (mask >> (s - n)) & 1 == 1);
        }
        let mut pos = eq.clone();
        let mut feasible = true;
        let mut stack = vec![(tree.root_child, pt(0))];
        while let Some((s, x)) = stack.pop() {
            if topology.is_terminal(s) {
                continue;
            }
            let [a, b] = [tree.children[s][0], tree.children[s][1]];
            let (pa, pb, e) = (eq[a], eq[b], eq[s]);
            let center = [(pa[0] + pb[0] + e[0]) / 3.0, (pa[1] + pb[1] + e[1]) / 3.0];
            let r2 = geom::dist(&pa, &pb).powi(2) / 3.0;
            let ex = geom::dist(&e, &x).powi(2);
            if ex <= 0.0 {
                feasible = false;
                break;
            }
            let t = (geom::dist(&x, &center).powi(2) - r2) / ex;
            let p = [x[0] + t * (e[0] - x[0]), x[1] + t * (e[1] - x[1])];
            let side_e = orient(pa, pb, e);
            let side_p = orient(pa, pb, p);
            if !(t > 0.0 && t < 1.0) || side_e * side_p >= 0.0 || side_p.abs() <= slack {
                feasible = false;
                break;
            }
            pos[s] = p;
            stack.push((a, p));
            stack.push((b, p));
        }
        if !feasible {
            continue;
        }
        let interior = (n..v).map(|s| pos[s].to_vec()).collect();
        let net = Network::new(topology.clone(), config.clone(), interior)?;
        if best.as_ref().is_none_or(|b| net.length() < b.length()) {
            best = Some(net);
        }
    }
    Ok(best)
}

/// Length of the Simpson line from the root terminal: equal to the network
/// length whenever the construction is feasible.
pub fn simpson_length(net: &Network) -> f64 {
    let tree = root_at_first_terminal(net.topology());
    let n = net.topology().n();
    let v = net.topology().num_vertices();
    let mut eq = vec![[0.0; 2]; v];
    for (t, e) in eq.iter_mut().enumerate().take(n) {
        *e = [net.position(t)[0], net.position(t)[1]];
    }
    for &s in &tree.postorder {
        let [a, b] = [tree.children[s][0], tree.children[s][1]];
        // The apex lies on the far side of the children from the vertex itself.
        let here = [net.position(s)[0], net.position(s)[1]];
        let left = orient(eq[a], eq[b], here) < 0.0;
        eq[s] = equilateral(eq[a], eq[b], left);
    }
    geom::dist(net.position(0), &eq[tree.root_child])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::irls::SolverOptions;
    use crate::local_min::minimize_fixed_topology;
    use crate::topology::enumerate_full_topologies;
    use rand::{Rng, SeedableRng};

    fn cfg(points: &[[f64; 2]]) -> Configuration {
        Configuration::new(2, points.iter().map(|p| p.to_vec()).collect()).unwrap()
    }

    fn pairing(a: usize, b: usize, c: usize, d: usize) -> SteinerTopology {
        SteinerTopology::new(4, 2, vec![(a, 4), (b, 4), (4, 5), (c, 5), (d, 5)]).unwrap()
    }

    #[test]
    fn equilateral_triangle() {
        let c = cfg(&[[0.0, 0.0], [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]]);
        let g = SteinerTopology::new(3, 1, vec![(0, 3), (1, 3), (2, 3)]).unwrap();
        let net = melzak_solve(&c, &g).unwrap().unwrap();
        assert!((net.length() - 3f64.sqrt()).abs() < 1e-12);
        let numeric = minimize_fixed_topology(&c, &g, &SolverOptions::default()).unwrap();
        assert!((net.length() - numeric.length()).abs() < 1e-9);
        assert!((simpson_length(&net) - net.length()).abs() < 1e-12);
    }

    #[test]
    fn square_pairing() {
        let c = cfg(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        let net = melzak_solve(&c, &pairing(0, 1, 2, 3)).unwrap().unwrap();
        assert!((net.length() - (1.0 + 3f64.sqrt())).abs() < 1e-12);
        assert!(net.verify_locally_minimal(1e-9).unwrap().passed);
    }

    #[test]
    fn nearly_collinear_crossing_pairing_is_infeasible() {
        let c = cfg(&[[0.0, 0.0], [1.0, 0.01], [2.0, 0.0], [3.0, 0.01]]);
        let g = pairing(0, 2, 1, 3);
        assert!(melzak_solve(&c, &g).unwrap().is_none());
        let numeric = minimize_fixed_topology(&c, &g, &SolverOptions::default()).unwrap();
        assert!(numeric.shortest_edge() < 1e-9);
    }

    #[test]
    fn agrees_with_numeric_solver() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let mut feasible_seen = 0;
        for _ in 0..30 {
            let n = rng.random_range(3..=6);
            let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.random(), rng.random()]).collect();
            let c = cfg(&pts);
            let diam = c.diameter();
            for g in enumerate_full_topologies(n, 9).unwrap() {
                let numeric = minimize_fixed_topology(&c, &g, &SolverOptions::default()).unwrap();
                let shortest = numeric.shortest_edge();
                match melzak_solve(&c, &g).unwrap() {
                    Some(net) => {
                        feasible_seen += 1;
                        assert!((net.length() - numeric.length()).abs() <= 1e-7 * diam);
                    }
                    None => assert!(shortest < 1e-6 * diam, "numeric shortest edge {shortest}"),
                }
            }
        }
        assert!(feasible_seen > 10, "{feasible_seen}");
    }
}
