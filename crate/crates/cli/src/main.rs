//! `ruin`: solves the minimum-probability-of-lifetime-ruin problem and its
//! dual controller-and-stopper game, cross-checks the two through the
//! Legendre transform and Monte Carlo, and emits machine-readable
//! artifacts. Exit status is 0 only when every requested check passed.

mod artifacts;
mod commands;
mod config;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Overrides;

#[derive(Parser)]
#[command(name = "ruin", version, about = "Lifetime-ruin and dual-game numerics driver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory override.
    #[arg(long)]
    outdir: Option<PathBuf>,
    /// RNG seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo path-count override.
    #[arg(long)]
    paths: Option<u64>,
    /// Euler step override (years).
    #[arg(long)]
    dt: Option<f64>,
    /// Grid-size override (node count).
    #[arg(long)]
    grid: Option<usize>,
    /// Barrier override (M).
    #[arg(long)]
    barrier: Option<f64>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            outdir: self.outdir.clone(),
            seed: self.seed,
            paths: self.paths,
            dt: self.dt,
            grid: self.grid,
            barrier: self.barrier,
        }
    }

    fn resolve(&self) -> anyhow::Result<config::Resolved> {
        config::load(&self.config, &self.overrides())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve the barrier problem; writes primal.csv, residual.csv, convexity.json.
    SolvePrimal(Common),
    /// Shoot the dual free boundary; writes dual.csv, boundary.json.
    SolveDual(Common),
    /// Transform the dual solution back to the primal domain; writes
    /// transform.csv, duality.json.
    Legendre(Common),
    /// Monte Carlo ruin estimate against the solved curve; writes
    /// simulate.json (and paths.csv with --dump-paths).
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Start ratio wealth/consumption.
        #[arg(long, default_value_t = 10.0)]
        z0: f64,
        /// Also write per-path outcomes to paths.csv.
        #[arg(long)]
        dump_paths: bool,
    },
    /// Game-value saddle battery; writes saddle.json.
    Saddle {
        #[command(flatten)]
        common: Common,
        /// Start point inside the continuation region (default: midpoint).
        #[arg(long)]
        y0: Option<f64>,
    },
    /// Full cross-verification; writes verification.json.
    Verify(Common),
    /// Barrier-doubling ladder; writes sweep.csv, sweep.json.
    Sweep(Common),
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::SolvePrimal(c) => commands::solve_primal_cmd(&c.resolve()?).map(|()| true),
        Command::SolveDual(c) => commands::solve_dual_cmd(&c.resolve()?).map(|()| true),
        Command::Legendre(c) => commands::legendre_cmd(&c.resolve()?).map(|()| true),
        Command::Simulate { common, z0, dump_paths } => {
            commands::simulate_cmd(&common.resolve()?, z0, dump_paths).map(|()| true)
        }
        Command::Saddle { common, y0 } => commands::saddle_cmd(&common.resolve()?, y0),
        Command::Verify(c) => verify::verify_cmd(&c.resolve()?),
        Command::Sweep(c) => commands::sweep_cmd(&c.resolve()?).map(|()| true),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed; see the written report for the failing checks");
            ExitCode::FAILURE
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
