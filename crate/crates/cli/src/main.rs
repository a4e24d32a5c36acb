mod input;
mod render_cmd;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use serde_json::json;

use steiner_core::fixtures::{fixture, FIXTURE_NAMES};
use steiner_core::homotopy::{connect_cell, connect_unambiguous, PathParams};
use steiner_core::melzak::melzak_solve;
use steiner_core::moustache::{estimate_r1, grow, make_growth_frame, trim, DirectionChoice, Side};
use steiner_core::smt::{classify3, steiner_minimal_trees, SmtOptions, Type3};
use steiner_core::topology::BUDGET_ENV;
use steiner_core::{Configuration, Error, MoustacheKind, TypeSignature};

use input::{load_config, load_network, write_output};

/// Marks errors caused by the command line itself (exit code 1).
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

/// Shortest networks, certified paths and moustache operations on point
/// configurations. Terminals are numbered from 1 on the command line.
#[derive(Parser)]
#[command(name = "steiner-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SearchArgs {
    /// Relative gap under which two lengths count as tied.
    #[arg(long, default_value_t = 1e-9)]
    rel_tol: f64,
    /// Largest point count for which full topologies are enumerated.
    #[arg(long, env = BUDGET_ENV)]
    budget: Option<usize>,
    /// Solve every full topology instead of pruning by partial length.
    #[arg(long)]
    exhaustive: bool,
}

impl SearchArgs {
    fn options(&self) -> anyhow::Result<SmtOptions> {
        if !(self.rel_tol >= 0.0 && self.rel_tol < 1.0) {
            return Err(usage(format!("--rel-tol {} outside [0, 1)", self.rel_tol)));
        }
        let mut opts = SmtOptions::with_rel_tol(self.rel_tol);
        if let Some(b) = self.budget {
            opts.budget = b;
        }
        opts.prune = !self.exhaustive;
        Ok(opts)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    OneSided,
    TwoSided,
}

impl From<Kind> for MoustacheKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::OneSided => MoustacheKind::OneSided,
            Kind::TwoSided => MoustacheKind::TwoSided,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Left,
    Right,
}

#[derive(Args)]
struct FrameArgs {
    /// Degree-1 terminal the moustache grows from.
    #[arg(long)]
    terminal: usize,
    #[arg(long, value_enum, default_value = "one-sided")]
    kind: Kind,
    /// Planar side of the growth direction.
    #[arg(long, value_enum, conflicts_with_all = ["normal", "direction"])]
    side: Option<SideArg>,
    /// Comma-separated vector fixing the plane of a two-sided moustache.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "direction")]
    normal: Option<Vec<f64>>,
    /// Comma-separated growth direction.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    direction: Option<Vec<f64>>,
    /// Keep the anchor of a two-sided moustache as a terminal.
    #[arg(long)]
    keep_anchor: bool,
    /// Labels of the new leaves, the first direction's leaf first.
    #[arg(long, value_delimiter = ',')]
    labels: Option<Vec<usize>>,
}

impl FrameArgs {
    fn choice(&self) -> DirectionChoice {
        match (&self.side, &self.normal, &self.direction) {
            (Some(SideArg::Left), _, _) => DirectionChoice::Side(Side::Left),
            (Some(SideArg::Right), _, _) => DirectionChoice::Side(Side::Right),
            (_, Some(n), _) => DirectionChoice::Normal(n.clone()),
            (_, _, Some(d)) => DirectionChoice::Direction(d.clone()),
            _ => DirectionChoice::Default,
        }
    }

    fn labels(&self) -> anyhow::Result<Option<Vec<usize>>> {
        self.labels.as_ref().map(|l| l.iter().map(|&x| zero_based(x)).collect()).transpose()
    }
}

fn zero_based(label: usize) -> anyhow::Result<usize> {
    label.checked_sub(1).ok_or_else(|| usage("terminals are numbered from 1"))
}

#[derive(Subcommand)]
enum Command {
    /// Shortest networks of a configuration.
    Solve {
        /// Configuration JSON file, `-` for stdin.
        input: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
        /// Recompute every full minimum with the planar construction.
        #[arg(long)]
        melzak_check: bool,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Closed-form type of three labeled points, compared with the search.
    Classify3 {
        /// Configuration JSON file, `-` for stdin. Omit with --random.
        input: Option<PathBuf>,
        /// Classify this many random triangles instead.
        #[arg(long, conflicts_with = "input")]
        random: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Certified path between two configurations.
    Path {
        s0: PathBuf,
        s1: PathBuf,
        /// Target type; defaults to the unique type of the first endpoint.
        #[arg(long = "type")]
        target: Option<String>,
        /// Samples per path segment.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0.5)]
        safety: f64,
        /// Stay in the closure of the type's cell (planar, full types).
        #[arg(long)]
        cell_mode: bool,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Brackets the largest admissible moustache radius.
    R1 {
        /// Network JSON, or a configuration with a unique shortest network.
        input: PathBuf,
        #[command(flatten)]
        frame: FrameArgs,
        #[arg(long, default_value_t = 1.0)]
        r_max: f64,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Moves a degree-1 terminal along its edge.
    Trim {
        /// Network JSON, or a configuration with a unique shortest network.
        input: PathBuf,
        #[arg(long)]
        terminal: usize,
        /// Fraction of the edge to remove, in [0, 1).
        #[arg(long)]
        t: f64,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Grows a moustache of length `r` at a degree-1 terminal.
    Grow {
        /// Network JSON, or a configuration with a unique shortest network.
        input: PathBuf,
        #[command(flatten)]
        frame: FrameArgs,
        #[arg(long)]
        r: f64,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// SVG drawings of configurations, networks, search results and paths.
    Render(render_cmd::RenderArgs),
    /// Writes a bundled example configuration.
    Examples {
        /// One of square, octagon, ambiguous4, triangle-fan, fig3.
        name: String,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Usage>().is_some() {
        return 1;
    }
    match e.downcast_ref::<Error>() {
        Some(Error::Json(_)) => 1,
        Some(
            Error::VerificationFailed(_) | Error::EstimationFailed(_) | Error::SearchFailed(_) | Error::SolverFailure { .. },
        ) => 3,
        Some(_) => 2,
        None if e.downcast_ref::<serde_json::Error>().is_some() || e.downcast_ref::<std::io::Error>().is_some() => 1,
        None => 2,
    }
}

fn run(command: Command) -> anyhow::Result<u8> {
    match command {
        Command::Solve { input, search, melzak_check, out } => {
            let config = load_config(&input)?;
            let result = steiner_minimal_trees(&config, &search.options()?)?;
            let value = if melzak_check {
                if config.dim() != 2 {
                    return Err(usage("--melzak-check needs planar points"));
                }
                let mut checks = Vec::new();
                for m in &result.minima {
                    let g = m.network.topology();
                    let entry = if g.is_full() {
                        match melzak_solve(&config, g)? {
                            Some(net) => json!({ "signature": m.signature, "length": net.length(), "delta": net.length() - m.length }),
                            None => json!({ "signature": m.signature, "length": null, "delta": null }),
                        }
                    } else {
                        json!({ "signature": m.signature, "skipped": "not full" })
                    };
                    checks.push(entry);
                }
                json!({ "result": result, "melzak_check": checks })
            } else {
                serde_json::to_value(&result)?
            };
            write_output(out.as_deref(), &value)?;
            Ok(0)
        }
        Command::Classify3 { input, random, seed } => classify3_cmd(input.as_deref(), random, seed),
        Command::Path { s0, s1, target, samples, safety, cell_mode, search, out } => {
            let (a, b) = (load_config(&s0)?, load_config(&s1)?);
            if a.n() != b.n() || a.dim() != b.dim() {
                return Err(usage(format!(
                    "endpoints differ: {} points in dimension {} against {} points in dimension {}",
                    a.n(),
                    a.dim(),
                    b.n(),
                    b.dim()
                )));
            }
            if samples < 2 {
                return Err(usage("--samples must be at least 2"));
            }
            let smt = search.options()?;
            let g = match target {
                Some(s) => TypeSignature(s),
                None => {
                    let r = steiner_minimal_trees(&a, &smt)?;
                    r.unique_type()
                        .cloned()
                        .ok_or_else(|| usage("the first endpoint is ambiguous; choose a type with --type"))?
                }
            };
            let params = PathParams { samples, safety_factor: safety, smt, ..Default::default() };
            let path = if cell_mode { connect_cell(&a, &b, &g, &params)? } else { connect_unambiguous(&a, &b, &g, &params)? };
            write_output(out.as_deref(), &path)?;
            if !path.passed {
                eprintln!("certification failed at {} samples", path.failures.len());
                return Ok(3);
            }
            Ok(0)
        }
        Command::R1 { input, frame, r_max, search } => {
            let opts = search.options()?;
            let net = load_network(&input, &opts)?;
            let v = zero_based(frame.terminal)?;
            let growth = make_growth_frame(&net, v, frame.kind.into(), &frame.choice(), r_max)?;
            let labels = frame.labels()?;
            let est = estimate_r1(&net, &growth, labels.as_deref(), frame.keep_anchor, r_max, &opts)?;
            write_output(None, &json!({ "frame": growth, "estimate": est }))?;
            Ok(0)
        }
        Command::Trim { input, terminal, t, search } => {
            let net = load_network(&input, &search.options()?)?;
            let (config, trimmed) = trim(&net, zero_based(terminal)?, t)?;
            write_output(None, &json!({ "config": config, "network": trimmed }))?;
            Ok(0)
        }
        Command::Grow { input, frame, r, search } => {
            let net = load_network(&input, &search.options()?)?;
            let growth = make_growth_frame(&net, zero_based(frame.terminal)?, frame.kind.into(), &frame.choice(), r)?;
            let labels = frame.labels()?;
            let grown = grow(&net, &growth, labels.as_deref(), frame.keep_anchor)?;
            write_output(None, &json!({ "frame": growth, "grown": grown }))?;
            Ok(0)
        }
        Command::Render(args) => render_cmd::run(&args),
        Command::Examples { name, out_dir } => examples_cmd(&name, &out_dir),
    }
}

fn classify3_cmd(input: Option<&Path>, random: Option<usize>, seed: u64) -> anyhow::Result<u8> {
    let opts = SmtOptions::default();
    let compare = |c: &Configuration| -> anyhow::Result<(Type3, Type3)> {
        let closed = classify3(c)?;
        let result = steiner_minimal_trees(c, &opts)?;
        let searched = Type3::of_network(&result.minima[0].network)?;
        Ok((closed, searched))
    };
    match (input, random) {
        (Some(path), _) => {
            let (closed, searched) = compare(&load_config(path)?)?;
            write_output(None, &json!({ "type": closed, "search": searched, "agree": closed == searched }))?;
            Ok(if closed == searched { 0 } else { 3 })
        }
        (None, Some(count)) => {
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let mut counts = std::collections::BTreeMap::<String, usize>::new();
            let mut disagreements = Vec::new();
            for _ in 0..count {
                let pts: Vec<Vec<f64>> = (0..3).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
                let c = Configuration::new(2, pts)?;
                let (closed, searched) = compare(&c)?;
                *counts.entry(closed.to_string()).or_default() += 1;
                if closed != searched {
                    disagreements.push(json!({ "config": c, "type": closed, "search": searched }));
                }
            }
            let ok = disagreements.is_empty();
            write_output(None, &json!({ "seed": seed, "count": count, "types": counts, "disagreements": disagreements }))?;
            Ok(if ok { 0 } else { 3 })
        }
        (None, None) => Err(usage("give a configuration file or --random N")),
    }
}

fn examples_cmd(name: &str, out_dir: &Path) -> anyhow::Result<u8> {
    if !FIXTURE_NAMES.contains(&name) {
        bail!(Usage(format!("unknown example {name:?}; known: {}", FIXTURE_NAMES.join(", "))));
    }
    let f = fixture(name)?;
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    for (suffix, config) in &f.configs {
        let mut value = serde_json::to_value(config)?;
        value
            .as_object_mut()
            .ok_or_else(|| anyhow!("configuration did not serialize to an object"))?
            .insert("note".into(), json!(f.note));
        let path = out_dir.join(format!("{}{}.json", f.name, suffix));
        std::fs::write(&path, serde_json::to_string_pretty(&value)? + "\n").with_context(|| format!("writing {}", path.display()))?;
        println!("{}", path.display());
    }
    Ok(0)
}
