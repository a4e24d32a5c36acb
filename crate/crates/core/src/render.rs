//! SVG drawings of planar networks. The y axis points up, every panel is
//! fitted to its contents with a 5% margin, and colors are picked from a
//! fixed palette by a hash of the type signature.

use serde::{Deserialize, Serialize};
use std::fmt::Write;

use crate::config_space::Configuration;
use crate::error::{Error, Result};
use crate::local_min::Network;
use crate::topology::TypeSignature;

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];
const MARGIN: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderSpec {
    pub width: u32,
    pub height: u32,
    pub edge_width: f64,
    pub terminal_radius: f64,
    pub labels: bool,
    /// Sample of a path to draw; all samples when absent.
    pub frame: Option<usize>,
}

impl Default for RenderSpec {
    fn default() -> Self {
        RenderSpec { width: 480, height: 480, edge_width: 2.0, terminal_radius: 4.0, labels: true, frame: None }
    }
}

impl RenderSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Precondition("image dimensions must be positive".into()));
        }
        if !(self.edge_width > 0.0 && self.terminal_radius >= 0.0) {
            return Err(Error::Precondition("stroke sizes must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stroke {
    Solid,
    Dashed,
}

/// One drawing area: its terminals and the networks drawn on top.
#[derive(Clone, Debug, PartialEq)]
pub struct Panel {
    pub title: Option<String>,
    pub config: Configuration,
    pub networks: Vec<(Network, Stroke)>,
}

impl Panel {
    pub fn new(config: Configuration) -> Self {
        Panel { title: None, config, networks: Vec::new() }
    }

    pub fn with_network(mut self, net: Network, stroke: Stroke) -> Self {
        self.networks.push((net, stroke));
        self
    }

    pub fn titled(mut self, title: impl Into<String>) -> Self {
        self.title = Some(title.into());
        self
    }
}

/// FNV-1a, stable across platforms and runs.
fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf29ce484222325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x100000001b3))
}

pub fn type_color(signature: &TypeSignature) -> &'static str {
    PALETTE[(fnv1a(&signature.0) % PALETTE.len() as u64) as usize]
}

struct Frame {
    x0: f64,
    y0: f64,
    scale: f64,
    left: f64,
    top: f64,
    h: f64,
}

impl Frame {
    fn fit(points: &[Vec<f64>], left: f64, top: f64, w: f64, h: f64) -> Frame {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in points {
            for c in 0..2 {
                lo[c] = lo[c].min(p[c]);
                hi[c] = hi[c].max(p[c]);
            }
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
        let usable = (1.0 - 2.0 * MARGIN) * w.min(h);
        let scale = usable / span;
        let cx = 0.5 * (lo[0] + hi[0]);
        let cy = 0.5 * (lo[1] + hi[1]);
        Frame { x0: cx - 0.5 * w / scale, y0: cy - 0.5 * h / scale, scale, left, top, h }
    }

    fn map(&self, p: &[f64]) -> (f64, f64) {
        (self.left + (p[0] - self.x0) * self.scale, self.top + self.h - (p[1] - self.y0) * self.scale)
    }
}

/// Panels side by side in one SVG document.
pub fn render_panels(panels: &[Panel], spec: &RenderSpec) -> Result<String> {
    spec.validate()?;
    if panels.is_empty() {
        return Err(Error::Precondition("nothing to draw".into()));
    }
    if panels.iter().any(|p| p.config.dim() != 2) {
        return Err(Error::Precondition("only planar configurations can be drawn".into()));
    }
    let (w, h) = (f64::from(spec.width), f64::from(spec.height));
    let pw = w / panels.len() as f64;
    let title_h = if panels.iter().any(|p| p.title.is_some()) { 20.0 } else { 0.0 };
    let mut svg = String::new();
    writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#, spec.width, spec.height, spec.width, spec.height).unwrap();
    writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    for (i, panel) in panels.iter().enumerate() {
        let mut pts: Vec<Vec<f64>> = panel.config.points().map(|p| p.to_vec()).collect();
        for (net, _) in &panel.networks {
            pts.extend(net.interior_positions().iter().cloned());
        }
        let frame = Frame::fit(&pts, i as f64 * pw, title_h, pw, h - title_h);
        if let Some(t) = &panel.title {
            writeln!(svg, r#"<text x="{:.2}" y="14" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#, (i as f64 + 0.5) * pw, escape(t)).unwrap();
        }
        for (net, stroke) in &panel.networks {
            let color = type_color(&net.signature());
            let dash = match stroke {
                Stroke::Solid => String::new(),
                Stroke::Dashed => format!(r#" stroke-dasharray="{:.1} {:.1}""#, 3.0 * spec.edge_width, 2.0 * spec.edge_width),
            };
            for &(a, b) in net.topology().edges() {
                let (x1, y1) = frame.map(net.position(a));
                let (x2, y2) = frame.map(net.position(b));
                writeln!(svg, r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{color}" stroke-width="{:.2}"{dash}/>"#, spec.edge_width).unwrap();
            }
            for p in net.interior_positions() {
                let (x, y) = frame.map(p);
                writeln!(svg, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{:.2}" fill="{color}"/>"#, 0.5 * spec.terminal_radius).unwrap();
            }
        }
        for (k, p) in panel.config.points().enumerate() {
            let (x, y) = frame.map(p);
            writeln!(svg, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{:.2}" fill="black"/>"#, spec.terminal_radius).unwrap();
            if spec.labels {
                writeln!(svg, r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11">{}</text>"#, x + spec.terminal_radius + 2.0, y - spec.terminal_radius - 2.0, k + 1).unwrap();
            }
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smt::{steiner_minimal_trees, SmtOptions};

    fn square() -> Configuration {
        Configuration::new(2, vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap()
    }

    #[test]
    fn overlay_is_deterministic_and_y_up() {
        let r = steiner_minimal_trees(&square(), &SmtOptions::default()).unwrap();
        let panel = Panel::new(square())
            .with_network(r.minima[0].network.clone(), Stroke::Solid)
            .with_network(r.minima[1].network.clone(), Stroke::Dashed);
        let spec = RenderSpec::default();
        let a = render_panels(std::slice::from_ref(&panel), &spec).unwrap();
        let b = render_panels(&[panel], &spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.matches("<line").count(), 10);
        assert!(a.contains("stroke-dasharray"));
        // Terminal 1 at the origin sits at the bottom left: 5% margin of 480.
        assert!(a.contains(r#"cx="24.00" cy="456.00""#), "{a}");
    }

    #[test]
    fn rejects_bad_input() {
        let spec = RenderSpec { width: 0, ..Default::default() };
        assert!(render_panels(&[Panel::new(square())], &spec).is_err());
        let cube = Configuration::new(3, vec![vec![0.0; 3], vec![1.0, 0.0, 0.0]]).unwrap();
        assert!(render_panels(&[Panel::new(cube)], &RenderSpec::default()).is_err());
    }

    #[test]
    fn palette_is_stable() {
        let s = TypeSignature("P|t1(t2())".into());
        assert_eq!(type_color(&s), type_color(&s.clone()));
        assert_eq!(fnv1a(""), 0xcbf29ce484222325);
    }
}
