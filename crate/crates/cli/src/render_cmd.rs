use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, ValueEnum};
use serde_json::Value;

use steiner_core::fixtures::{fig3, octagon_moustache, square, triangle_fan};
use steiner_core::homotopy::{ambiguous4_demo, CertifiedPath};
use steiner_core::local_min::Network;
use steiner_core::render::{render_panels, Panel, RenderSpec, Stroke};
use steiner_core::smt::{classify3, steiner_minimal_trees, SmtOptions, SmtResult};
use steiner_core::Configuration;

use crate::input::{config_from, read_json};
use crate::usage;

#[derive(Clone, Copy, ValueEnum)]
pub enum Figure {
    /// Both shortest networks of the unit square, one dashed.
    SquareOverlay,
    /// One triangle of each of the five three-point types.
    TriangleFan,
    /// Two locally minimal networks of one rectangle.
    TwoMinima,
    /// Octagon network, the same network with a moustache, and the
    /// shortest network of the enlarged point set.
    OctagonMoustache,
    /// The tied four-point configuration under its two orderings.
    Obstruction,
}

#[derive(Args)]
pub struct RenderArgs {
    /// Configuration, network, search result or path JSON.
    #[arg(required_unless_present = "figure")]
    input: Option<PathBuf>,
    /// Draw a bundled figure instead of an input file.
    #[arg(long, value_enum, conflicts_with = "input")]
    figure: Option<Figure>,
    /// SVG file; a directory when every frame of a path is drawn.
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = 480)]
    width: u32,
    #[arg(long, default_value_t = 480)]
    height: u32,
    #[arg(long, default_value_t = 2.0)]
    edge_width: f64,
    #[arg(long, default_value_t = 4.0)]
    terminal_radius: f64,
    #[arg(long)]
    no_labels: bool,
    /// Single path sample to draw.
    #[arg(long)]
    frame: Option<usize>,
}

impl RenderArgs {
    fn spec(&self) -> RenderSpec {
        RenderSpec {
            width: self.width,
            height: self.height,
            edge_width: self.edge_width,
            terminal_radius: self.terminal_radius,
            labels: !self.no_labels,
            frame: self.frame,
        }
    }
}

pub fn run(args: &RenderArgs) -> anyhow::Result<u8> {
    let spec = args.spec();
    spec.validate().map_err(|e| usage(e.to_string()))?;
    let opts = SmtOptions::default();
    let panels = match (args.figure, &args.input) {
        (Some(fig), _) => figure(fig, &opts)?,
        (None, Some(path)) => {
            let value = unwrap(read_json(path)?);
            if value.get("target_type").is_some() {
                let cp: CertifiedPath = serde_json::from_value(value).with_context(|| format!("{} is not a path", path.display()))?;
                return render_path(&cp, &spec, &args.out, &opts);
            }
            vec![panel_for(value, path)?]
        }
        (None, None) => return Err(usage("give an input file or --figure")),
    };
    if args.frame.is_some() {
        return Err(usage("--frame applies to paths only"));
    }
    write_svg(&args.out, &render_panels(&panels, &spec)?)?;
    Ok(0)
}

/// Strips the wrappers the other subcommands put around their results.
fn unwrap(value: Value) -> Value {
    for key in ["result", "grown", "network"] {
        if let Some(inner) = value.get(key) {
            if inner.is_object() {
                return unwrap(inner.clone());
            }
        }
    }
    value
}

fn panel_for(value: Value, path: &Path) -> anyhow::Result<Panel> {
    if value.get("minima").is_some() {
        let result: SmtResult = serde_json::from_value(value).with_context(|| format!("{} is not a search result", path.display()))?;
        return Ok(overlay(&result));
    }
    if value.get("edges").is_some() {
        let net: Network = serde_json::from_value(value).with_context(|| format!("{} is not a network", path.display()))?;
        return Ok(Panel::new(net.config().clone()).with_network(net, Stroke::Solid));
    }
    Ok(Panel::new(config_from(value, path)?))
}

/// Every shortest network on one panel, the first solid and the rest dashed.
fn overlay(result: &SmtResult) -> Panel {
    let config = result.minima[0].network.config().clone();
    result.minima.iter().enumerate().fold(Panel::new(config), |p, (i, m)| {
        p.with_network(m.network.clone(), if i == 0 { Stroke::Solid } else { Stroke::Dashed })
    })
}

fn solved(config: &Configuration, opts: &SmtOptions) -> anyhow::Result<Panel> {
    Ok(overlay(&steiner_minimal_trees(config, opts)?))
}

fn figure(fig: Figure, opts: &SmtOptions) -> anyhow::Result<Vec<Panel>> {
    Ok(match fig {
        Figure::SquareOverlay => vec![solved(&square(), opts)?],
        Figure::TriangleFan => triangle_fan()
            .iter()
            .map(|c| Ok(solved(c, opts)?.titled(classify3(c)?.to_string())))
            .collect::<anyhow::Result<_>>()?,
        Figure::TwoMinima => {
            let (c, [a, b]) = fig3()?;
            let title = |n: &Network| format!("length {:.4}", n.length());
            vec![
                Panel::new(c.clone()).with_network(a.clone(), Stroke::Solid).titled(title(&a)),
                Panel::new(c).with_network(b.clone(), Stroke::Solid).titled(title(&b)),
            ]
        }
        Figure::OctagonMoustache => {
            let m = octagon_moustache(0.2, opts)?;
            vec![
                Panel::new(m.tree.config().clone()).with_network(m.tree.clone(), Stroke::Solid).titled("shortest"),
                Panel::new(m.grown.config.clone()).with_network(m.grown.network.clone(), Stroke::Solid).titled("grown"),
                overlay(&m.smt).titled("shortest of the new points"),
            ]
        }
        Figure::Obstruction => {
            let demo = ambiguous4_demo(opts)?;
            demo.networks
                .iter()
                .zip(&demo.alpha)
                .map(|(n, a)| Panel::new(n.config().clone()).with_network(n.clone(), Stroke::Solid).titled(format!("angle {a:.4}")))
                .collect()
        }
    })
}

fn path_panel(cp: &CertifiedPath, k: usize, opts: &SmtOptions) -> anyhow::Result<Panel> {
    let sample = &cp.samples[k];
    let result = steiner_minimal_trees(&sample.config, opts)?;
    let mut panel = Panel::new(sample.config.clone()).titled(format!("t = {:.4}", sample.t));
    for m in &result.minima {
        let stroke = if m.signature == cp.target_type { Stroke::Solid } else { Stroke::Dashed };
        panel = panel.with_network(m.network.clone(), stroke);
    }
    Ok(panel)
}

fn render_path(cp: &CertifiedPath, spec: &RenderSpec, out: &Path, opts: &SmtOptions) -> anyhow::Result<u8> {
    if cp.samples.is_empty() {
        return Err(usage("path has no samples"));
    }
    if let Some(k) = spec.frame {
        if k >= cp.samples.len() {
            return Err(usage(format!("frame {k} out of range: the path has {} samples", cp.samples.len())));
        }
        write_svg(out, &render_panels(&[path_panel(cp, k, opts)?], spec)?)?;
        return Ok(0);
    }
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let width = cp.samples.len().to_string().len().max(4);
    for k in 0..cp.samples.len() {
        let file = out.join(format!("frame-{k:0width$}.svg"));
        write_svg(&file, &render_panels(&[path_panel(cp, k, opts)?], spec)?)?;
    }
    Ok(0)
}

fn write_svg(path: &Path, svg: &str) -> anyhow::Result<()> {
    std::fs::write(path, svg).with_context(|| format!("writing {}", path.display()))?;
    println!("{}", path.display());
    Ok(())
}
