//! `radpoisson`: config-driven experiments on model manifolds.
//!
//! Exit status: 0 success, 2 config error, 3 numerical failure,
//! 4 a report check failed.

mod commands;
mod config;
mod error;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::error::{CliError, EXIT_VERIFICATION};
use crate::report::{write_file, write_timing};

#[derive(Parser, Debug)]
#[command(name = "radpoisson", version, about = "Poisson equation experiments on rotationally symmetric manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Geometry and Green's function diagnostics with CSV r,omega,rho,G.
    Analyze(Common),
    /// Admissibility series for the configured source.
    Criterion(Common),
    /// Radial solution of Δu = f with CSV r,u,u_prime,residual.
    Solve(Common),
    /// Solvability across the decay threshold of each curvature family.
    Sharpness(Common),
    /// The full invariant check suite.
    Verify(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides numerics.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress the summary on stdout.
    #[arg(long)]
    quiet: bool,
}

type CommandFn = fn(&ExperimentConfig) -> Result<commands::Outcome, CliError>;

fn run(cli: Cli) -> Result<bool, CliError> {
    let (name, common, command): (&str, Common, CommandFn) = match cli.command {
        Command::Analyze(c) => ("analyze", c, commands::analyze),
        Command::Criterion(c) => ("criterion", c, commands::criterion),
        Command::Solve(c) => ("solve", c, commands::solve),
        Command::Sharpness(c) => ("sharpness", c, commands::sharpness),
        Command::Verify(c) => ("verify", c, commands::verify),
    };
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.numerics.seed = seed;
    }
    let start = Instant::now();
    let outcome = command(&cfg)?;
    let seconds = start.elapsed().as_secs_f64();

    std::fs::create_dir_all(&common.out).map_err(|source| CliError::Io {
        path: common.out.display().to_string(),
        source,
    })?;
    outcome.report.write(&common.out)?;
    for (file, text) in &outcome.tables {
        write_file(&common.out.join(file), text)?;
    }
    write_timing(&common.out, name, seconds)?;
    if !common.quiet {
        for line in &outcome.summary {
            println!("{line}");
        }
        for c in outcome.report.checks.iter().filter(|c| !c.pass) {
            println!("check failed: {} = {} (expected {} ± {})", c.name, c.value, c.expected, c.tolerance);
        }
        println!("report: {}", common.out.join(format!("report.{name}.json")).display());
    }
    Ok(outcome.report.pass)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VERIFICATION as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
