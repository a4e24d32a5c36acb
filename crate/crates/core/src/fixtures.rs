//! Bundled example configurations.

use std::f64::consts::PI;

use crate::config_space::Configuration;
use crate::error::{Error, Result};
use crate::homotopy::ambiguous4_demo;
use crate::local_min::Network;
use crate::melzak::melzak_solve;
use crate::moustache::{grow, make_growth_frame, DirectionChoice, Grown};
use crate::smt::{steiner_minimal_trees, SmtOptions, SmtResult};
use crate::topology::{MoustacheKind, SteinerTopology};

pub const FIXTURE_NAMES: [&str; 5] = ["square", "octagon", "ambiguous4", "triangle-fan", "fig3"];

/// Named configurations with a note on where the coordinates come from.
#[derive(Clone, Debug, PartialEq)]
pub struct Fixture {
    pub name: String,
    pub note: String,
    /// File stem suffix and configuration.
    pub configs: Vec<(String, Configuration)>,
}

fn planar(points: &[[f64; 2]]) -> Configuration {
    Configuration::new(2, points.iter().map(|p| p.to_vec()).collect()).expect("fixture points are distinct")
}

pub fn square() -> Configuration {
    planar(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
}

/// Corners of the regular octagon with circumradius 1, counterclockwise.
pub fn octagon() -> Configuration {
    let pts: Vec<[f64; 2]> = (0..8).map(|k| {
        let a = k as f64 * PI / 4.0;
        [a.cos(), a.sin()]
    }).collect();
    planar(&pts)
}

/// One triangle for each of the five types of three labeled points:
/// counterclockwise and clockwise equilateral triangles, then a triangle
/// with a 150 degree angle at each terminal in turn.
pub fn triangle_fan() -> Vec<Configuration> {
    let h = 3f64.sqrt() / 2.0;
    let mut out = vec![planar(&[[0.0, 0.0], [1.0, 0.0], [0.5, h]]), planar(&[[0.0, 0.0], [0.5, h], [1.0, 0.0]])];
    let (s, c) = (5.0 * PI / 6.0).sin_cos();
    let obtuse = [[0.0, 0.0], [1.0, 0.0], [0.8 * c, 0.8 * s]];
    for apex in 0..3 {
        let mut pts = [[0.0; 2]; 3];
        pts[apex] = obtuse[0];
        pts[(apex + 1) % 3] = obtuse[1];
        pts[(apex + 2) % 3] = obtuse[2];
        out.push(planar(&pts));
    }
    out
}

/// The two full topologies of four points: `{1, 2}` paired against
/// `{3, 4}`, and `{2, 3}` against `{4, 1}`.
pub fn quadrilateral_pairings() -> [SteinerTopology; 2] {
    let pairing = |a, b, c, d| SteinerTopology::new(4, 2, vec![(a, 4), (b, 4), (4, 5), (c, 5), (d, 5)]).expect("valid");
    [pairing(0, 1, 2, 3), pairing(1, 2, 3, 0)]
}

/// A rectangle `1 x h` spanned by two locally minimal full networks of
/// clearly different lengths. `h` is the largest value on a grid from 0.95
/// down to 0.5 for which both pairings are realizable and their lengths
/// differ by more than 0.1%. The shorter network comes first.
pub fn fig3() -> Result<(Configuration, [Network; 2])> {
    for i in 0..10 {
        let h = 0.95 - 0.05 * i as f64;
        let c = planar(&[[0.0, 0.0], [1.0, 0.0], [1.0, h], [0.0, h]]);
        let [a, b] = quadrilateral_pairings();
        if let (Some(x), Some(y)) = (melzak_solve(&c, &a)?, melzak_solve(&c, &b)?) {
            if (x.length() - y.length()).abs() > 1e-3 * x.length().min(y.length()) {
                let nets = if x.length() <= y.length() { [x, y] } else { [y, x] };
                return Ok((c, nets));
            }
        }
    }
    Err(Error::SearchFailed("no rectangle with two locally minimal full networks".into()))
}

/// A shortest network of the octagon with a one-sided moustache of length
/// `r` grown at its first degree-1 terminal, pointing away from its
/// neighbor, and the shortest networks of the enlarged point set.
#[derive(Clone, Debug, PartialEq)]
pub struct MoustacheCheck {
    pub tree: Network,
    pub grown: Grown,
    pub smt: SmtResult,
    /// Length of the grown network minus the shortest length.
    pub margin: f64,
}

pub fn octagon_moustache(r: f64, opts: &SmtOptions) -> Result<MoustacheCheck> {
    let result = steiner_minimal_trees(&octagon(), opts)?;
    let tree = result.minima[0].network.clone();
    let deg = tree.topology().degrees();
    let v = (0..tree.topology().n()).find(|&t| deg[t] == 1).ok_or_else(|| Error::SearchFailed("no leaf".into()))?;
    let frame = make_growth_frame(&tree, v, MoustacheKind::OneSided, &DirectionChoice::Default, r)?;
    let grown = grow(&tree, &frame, None, false)?;
    let smt = steiner_minimal_trees(&grown.config, opts)?;
    let margin = grown.network.length() - smt.min_length;
    Ok(MoustacheCheck { tree, grown, smt, margin })
}

pub fn fixture(name: &str) -> Result<Fixture> {
    let single = |note: &str, c: Configuration| Fixture {
        name: name.into(),
        note: note.into(),
        configs: vec![(String::new(), c)],
    };
    Ok(match name {
        "square" => single("corners of the unit square", square()),
        "octagon" => single("corners of the regular octagon with circumradius 1", octagon()),
        "ambiguous4" => {
            let demo = ambiguous4_demo(&SmtOptions::default())?;
            Fixture {
                name: name.into(),
                note: format!(
                    "found by a grid search over (-1,0), (0,1), (0,y), (1,0): y = {}; the two files are the two orderings \
                     whose shared type bends at the third point with angles {:.6} and {:.6}",
                    demo.inner, demo.alpha[0], demo.alpha[1]
                ),
                configs: vec![("-a".into(), demo.configs[0].clone()), ("-b".into(), demo.configs[1].clone())],
            }
        }
        "triangle-fan" => Fixture {
            name: name.into(),
            note: "one triangle per type: full counterclockwise, full clockwise, then a 150 degree angle at terminal 1, 2, 3".into(),
            configs: triangle_fan().into_iter().enumerate().map(|(i, c)| (format!("-{}", i + 1), c)).collect(),
        },
        "fig3" => {
            let (c, nets) = fig3()?;
            single(
                &format!(
                    "rectangle found by a grid search on its height; both pairings are locally minimal, lengths {:.9} and {:.9}",
                    nets[0].length(),
                    nets[1].length()
                ),
                c,
            )
        }
        other => return Err(Error::Precondition(format!("unknown example {other:?}; known: {}", FIXTURE_NAMES.join(", ")))),
    })
}
