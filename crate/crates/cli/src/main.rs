//! `hybrid-qf`: validate, evolve and sample hybrid quasi-free models from a
//! TOML experiment file.
//!
//! Exit codes: 0 success, 1 invalid model or state, 2 malformed
//! configuration or usage, 3 runtime failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{CommandKind, Options};

#[derive(Parser)]
#[command(name = "hybrid-qf", version, about = "Hybrid quantum-classical quasi-free dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check positivity, the Lévy measure and the initial state; write a certificate.
    Validate(Flags),
    /// Propagate moments, characteristic-function samples and optional Wigner grids.
    Evolve(Flags),
    /// Multi-time characteristic functions of the classical signal.
    Correlate(Flags),
    /// Monte Carlo paths of the classical coordinates with a moment comparison.
    Sample(Flags),
    /// Characteristic function and Wigner density on a grid.
    Wigner(Flags),
}

#[derive(Args)]
struct Flags {
    /// Experiment file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Positivity tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Monte Carlo seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated times.
    #[arg(long, value_delimiter = ',')]
    times: Option<Vec<f64>>,
    /// Uniform grid as HALF_WIDTH:POINTS.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(f64, usize)>,
    /// Run even when validation fails.
    #[arg(long)]
    force: bool,
}

fn parse_grid(s: &str) -> Result<(f64, usize), String> {
    let (h, p) = s
        .split_once(':')
        .ok_or_else(|| format!("expected HALF_WIDTH:POINTS, got `{s}`"))?;
    let h: f64 = h.parse().map_err(|_| format!("bad half width `{h}`"))?;
    let p: usize = p.parse().map_err(|_| format!("bad point count `{p}`"))?;
    Ok((h, p))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, flags) = match cli.command {
        Command::Validate(f) => (CommandKind::Validate, f),
        Command::Evolve(f) => (CommandKind::Evolve, f),
        Command::Correlate(f) => (CommandKind::Correlate, f),
        Command::Sample(f) => (CommandKind::Sample, f),
        Command::Wigner(f) => (CommandKind::Wigner, f),
    };
    let opts = Options {
        config: flags.config,
        out: flags.out,
        tol: flags.tol,
        seed: flags.seed,
        times: flags.times,
        grid: flags.grid,
        force: flags.force,
    };
    match commands::run(kind, opts) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
