//! Command-line front end: configure a space and a surface list, run the
//! residual verification suites, dump pointwise fields, and run the
//! congruence pipeline over families.
//!
//! Exit codes: 0 success, 1 verification or congruence failure, 2
//! configuration error.

mod commands;
mod config;
mod report;

use clap::{Parser, Subcommand};
use config::{parse_tier_override, RunConfig};
use std::path::PathBuf;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<ektau::error::GeomError> for CliError {
    fn from(e: ektau::error::GeomError) -> Self {
        match e {
            ektau::error::GeomError::InvalidConfig { what } => CliError::Config(what),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "ektau",
    version,
    about = "Surface geometry toolkit for the twisted homogeneous 3-spaces"
)]
struct Cli {
    /// Configuration file; omitted fields inherit the shipped defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Random seed (overrides the config).
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Tolerance tier override, repeatable: --tolerance-tier algebraic=1e-9
    #[arg(long = "tolerance-tier", global = true, value_name = "TIER=VALUE")]
    tolerance_tier: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every residual suite over the configured spaces and surfaces.
    Verify,
    /// Dump pointwise fields for one surface as CSV.
    Analyze {
        /// Surface name from the config (default: the first one).
        surface: Option<String>,
    },
    /// Run the congruence pipeline over a family and write a JSON verdict.
    Rigidity {
        /// Reference surface name (default: from the config).
        reference: Option<String>,
        /// Family kind: "isometric" or "perturbed".
        #[arg(long)]
        family: Option<String>,
        /// Exactly three explicit curve seeds: "u1,v1;u2,v2;u3,v3".
        #[arg(long, value_name = "POINTS")]
        points: Option<String>,
    },
    /// List the example surfaces with their convexity reports.
    Examples,
}

fn parse_points(text: &str) -> Result<Vec<[f64; 2]>, CliError> {
    let bad = |m: String| CliError::Config(m);
    let mut out = Vec::new();
    for pair in text.split(';') {
        let (u, v) = pair
            .split_once(',')
            .ok_or_else(|| bad(format!("point {pair:?} must look like u,v")))?;
        let u: f64 = u.trim().parse().map_err(|e| bad(format!("bad u in {pair:?}: {e}")))?;
        let v: f64 = v.trim().parse().map_err(|e| bad(format!("bad v in {pair:?}: {e}")))?;
        out.push([u, v]);
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(out) = &cli.out {
        cfg.output_dir = out.to_string_lossy().into_owned();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    for arg in &cli.tolerance_tier {
        let (name, value) = parse_tier_override(arg)?;
        cfg.tolerances.set(&name, value)?;
    }
    if let Command::Rigidity { reference, family, points } = &cli.command {
        if let Some(r) = reference {
            cfg.rigidity.reference = r.clone();
        }
        if let Some(f) = family {
            cfg.rigidity.family = f.clone();
        }
        if let Some(p) = points {
            cfg.rigidity.points = Some(parse_points(p)?);
        }
    }
    cfg.validate()?;

    let out_dir = PathBuf::from(&cfg.output_dir);
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out_dir.display())))?;

    match cli.command {
        Command::Verify => commands::cmd_verify(&cfg, &out_dir),
        Command::Analyze { surface } => commands::cmd_analyze(&cfg, surface.as_deref(), &out_dir),
        Command::Rigidity { .. } => commands::cmd_rigidity(&cfg, &out_dir),
        Command::Examples => commands::cmd_examples(&cfg, &out_dir),
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(CliError::Config(m)) => {
            eprintln!("config error: {m}");
            std::process::exit(2);
        }
        Err(CliError::Runtime(m)) => {
            eprintln!("error: {m}");
            std::process::exit(1);
        }
    }
}
