//! Command-line front end.
//!
//! Spheres are given as splitting-data JSON, for example
//! `{"type":"non-separating","rank":3,"factor":["x1","x2"],"stable":"x3"}`,
//! or as the shorthand `std:i` for the standard sphere dual to `x_i`.
//! Bases are lists of words separated by commas, such as `"x1 x2, x2"`.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;
use sha2::{Digest, Sha256};

use freesplit::farey::{adjacent, distance as farey_distance, Slope};
use freesplit::growth::{
    descend, growth_detect, iota_roses, rank2_sg_distance, DescentPolicy, GrowthParams, RoseVertex, StopRule,
};
use freesplit::io::{self, cache, report_hash, ExperimentSpec, Suite};
use freesplit::projections::{project, ComplementChart};
use freesplit::splittings::{build_local_ball, Ball, BallBounds, GraphKind, LinkTemplate, NonSepSphere, Sphere, SplittingData};
use freesplit::word::{Basis, Word};

#[derive(Parser)]
#[command(name = "freesplit", version, about = "Experiments on sphere graphs of free groups")]
struct Cli {
    /// Rank of the free group.
    #[arg(long, global = true)]
    rank: Option<usize>,
    /// Seed of all random streams.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Ball radius; suites compare this radius with the one below it.
    #[arg(long, global = true)]
    radius: Option<usize>,
    /// Truncation bounds as `SIZE` or `SIZE:SEPARATING_SIZE`.
    #[arg(long, global = true)]
    bounds: Option<String>,
    /// Print JSON instead of plain text.
    #[arg(long, global = true)]
    json: bool,
    /// Store measured constants in the cache directory.
    #[arg(long, global = true)]
    calibrate: bool,
    /// Cache directory for balls and calibrated constants.
    #[arg(long, global = true, env = "FREESPLIT_CACHE")]
    cache: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Canonical key of a sphere.
    Canonicalize { sphere: String },
    /// Sphere-graph distance; exact in rank two, inside a ball otherwise.
    Distance { a: String, b: String },
    /// Projection into the complement of the standard sphere (rank three).
    Project { sphere: String },
    /// Descend from a rose toward a target basis and classify the growth.
    Growth {
        /// Target basis.
        target: String,
        /// Starting basis (standard by default).
        #[arg(long)]
        start: Option<String>,
        #[arg(long, default_value_t = 2)]
        budget: usize,
        #[arg(long, default_value_t = 0.9)]
        a: f64,
        #[arg(long, default_value_t = 4)]
        k: usize,
    },
    /// Farey graph adjacency and distance of two slopes `p/q`.
    Farey { s: String, t: String },
    /// Projection-complex suites: axioms, pairgraph or delta.
    Pcx {
        suite: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run a suite: growth, farey, bgi, axioms, pairgraph, delta or example43.
    Run {
        suite: String,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// Override a sample count, as `key=value`; may repeat.
    #[arg(long = "sample")]
    samples: Vec<String>,
    /// Write the JSON report here.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_bounds(s: &str) -> Result<BallBounds> {
    let (h, sep) = match s.split_once(':') {
        Some((h, sep)) => (h, Some(sep)),
        None => (s, None),
    };
    let b = BallBounds::new(h.trim().parse().context("bounds size")?);
    Ok(match sep {
        Some(sep) => b.with_separating(sep.trim().parse().context("separating bound")?),
        None => b,
    })
}

fn parse_sphere(s: &str, rank: usize) -> Result<Sphere> {
    if let Some(i) = s.strip_prefix("std:") {
        let i: usize = i.parse().context("standard sphere index")?;
        if i == 0 || i > rank {
            bail!("standard sphere index {} outside 1..={}", i, rank);
        }
        return Ok(Sphere::NonSep(NonSepSphere::standard(rank, i)));
    }
    let data: SplittingData = serde_json::from_str(s).context("splitting data")?;
    Ok(data.to_sphere()?)
}

fn parse_basis(s: &str) -> Result<Basis> {
    let words = s.split(',').map(|w| w.parse::<Word>()).collect::<freesplit::Result<Vec<_>>>()?;
    Ok(Basis::new(words)?)
}

fn bounds_or(cli: &Cli, default: BallBounds) -> Result<BallBounds> {
    cli.bounds.as_deref().map(parse_bounds).transpose().map(|b| b.unwrap_or(default))
}

/// A sphere-graph ball, read from the cache when one matches.
fn ball_around(cli: &Cli, center: &Sphere, radius: usize, bounds: BallBounds) -> Result<Ball> {
    let rank = center.rank();
    let file = cli.cache.as_ref().map(|d| d.join(format!("ball-sg-r{}-{}.json", radius, short_hash(&center.key().to_string()))));
    if let Some(f) = &file {
        if f.exists() {
            return Ok(cache::load_ball(f, rank, &bounds)?);
        }
    }
    let tpl = LinkTemplate::new(rank, GraphKind::Sg, bounds, None)?;
    let ball = build_local_ball(center, radius, &tpl, 500_000)?;
    if let Some(f) = &file {
        std::fs::create_dir_all(f.parent().unwrap())?;
        cache::save_ball(f, &ball, &bounds)?;
    }
    Ok(ball)
}

fn short_hash(s: &str) -> String {
    Sha256::digest(s.as_bytes()).iter().take(8).map(|b| format!("{:02x}", b)).collect()
}

fn print(cli: &Cli, value: serde_json::Value, text: String) -> Result<()> {
    if cli.json {
        println!("{}", serde_json::to_string_pretty(&value)?);
    } else {
        println!("{}", text);
    }
    Ok(())
}

fn run_suite(cli: &Cli, suite: Suite, args: &RunArgs) -> Result<bool> {
    let mut spec = ExperimentSpec::new(suite).with_seed(cli.seed);
    if let Some(r) = cli.rank {
        spec.rank = r;
    }
    if let Some(r) = cli.radius {
        if r < 2 {
            bail!("suites compare two radii, so --radius must be at least 2");
        }
        spec.radii = vec![r - 1, r];
    }
    spec.bounds = bounds_or(cli, spec.bounds)?;
    for kv in &args.samples {
        let (k, v) = kv.split_once('=').ok_or_else(|| anyhow!("sample override {} is not key=value", kv))?;
        spec.samples.insert(k.to_string(), v.parse().with_context(|| format!("sample {}", k))?);
    }
    spec.output = args.output.clone();
    spec.calibrate = cli.calibrate;
    let report = io::run_and_persist(&spec, cli.cache.as_deref())?;
    if cli.json {
        println!("{}", report.to_json()?);
    } else {
        print!("{}", report.summary());
        println!("report hash {}", report_hash(&report)?);
    }
    Ok(report.pass)
}

fn execute(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Canonicalize { sphere } => {
            let s = parse_sphere(sphere, cli.rank.unwrap_or(3))?;
            let data = cache::splitting_data(&s);
            print(cli, json!({ "key": s.key(), "separating": s.is_separating(), "canonical": data }), s.key().to_string())?;
        }
        Command::Distance { a, b } => {
            let rank = cli.rank.unwrap_or(3);
            let (x, y) = (parse_sphere(a, rank)?, parse_sphere(b, rank)?);
            if x.rank() != y.rank() {
                bail!("spheres of ranks {} and {}", x.rank(), y.rank());
            }
            let (d, how) = if x.rank() == 2 {
                (rank2_sg_distance(&x, &y)?, "exact".to_string())
            } else {
                let radius = cli.radius.unwrap_or(3);
                let ball = ball_around(cli, &x, radius, bounds_or(cli, BallBounds::new(3).with_separating(4))?)?;
                let j = ball.find(&y).ok_or_else(|| anyhow!("second sphere is not within radius {} of the first under these bounds", radius))?;
                (ball.dist[j], format!("ball of radius {} with {} vertices", radius, ball.len()))
            };
            print(cli, json!({ "distance": d, "method": how }), format!("{} ({})", d, how))?;
        }
        Command::Project { sphere } => {
            let s = parse_sphere(sphere, 3)?;
            let p = project(&s, &ComplementChart::standard(3))?;
            let keys: Vec<String> = p.keys().iter().map(ToString::to_string).collect();
            print(
                cli,
                json!({ "spheres": p.keys(), "diameter_bound": p.diameter_bound }),
                format!("{} spheres, diameter ≤ {}\n{}", keys.len(), p.diameter_bound, keys.join("\n")),
            )?;
        }
        Command::Growth { target, start, budget, a, k } => {
            let target = RoseVertex::new(parse_basis(target)?)?;
            let start = match start {
                Some(s) => RoseVertex::new(parse_basis(s)?)?,
                None => RoseVertex::standard(target.basis().rank()),
            };
            let seq = descend(&start, &target, DescentPolicy::greedy_full(*budget).with_stop(StopRule::Reached))?;
            let v = growth_detect(&seq, GrowthParams::new(*a, *k)?);
            let iotas: Vec<usize> = seq.states.iter().map(|r| iota_roses(&target, r)).collect();
            print(
                cli,
                json!({ "length": seq.len(), "outcome": seq.outcome, "steps": seq.steps, "iota": iotas, "verdict": v }),
                format!(
                    "{} states, outcome {:?}, exponential {} (degenerate {}), ι {:?}",
                    seq.len(), seq.outcome, v.exponential, v.degenerate, iotas
                ),
            )?;
        }
        Command::Farey { s, t } => {
            let (s, t): (Slope, Slope) = (s.parse()?, t.parse()?);
            let (adj, d) = (adjacent(&s, &t)?, farey_distance(&s, &t));
            print(cli, json!({ "adjacent": adj, "distance": d }), format!("adjacent {}, distance {}", adj, d))?;
        }
        Command::Pcx { suite, run } => {
            let s: Suite = suite.parse()?;
            if !matches!(s, Suite::Axioms | Suite::Pairgraph | Suite::Delta) {
                bail!("pcx runs axioms, pairgraph or delta, not {}", s);
            }
            return run_suite(cli, s, run);
        }
        Command::Run { suite, run } => return run_suite(cli, suite.parse()?, run),
    }
    Ok(true)
}

fn main() {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => {}
        Ok(false) => std::process::exit(1),
        Err(e) => {
            eprintln!("error: {:#}", e);
            std::process::exit(2);
        }
    }
}
