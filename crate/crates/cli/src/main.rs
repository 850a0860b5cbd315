//! `csi-market`: solve, verify, simulate and sweep the secondary spectrum
//! market with costly competitor-state information.
//!
//! Exit status: 0 on success, 1 for bad input, 2 when a verification bound
//! is exceeded, 3 for file errors.

mod commands;
mod config;
mod number;

use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Settings;

#[derive(Debug, Parser)]
#[command(name = "csi-market", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Equilibrium summary as JSON; with --out, a directory of JSON and CDF tables.
    Solve(Settings),
    /// Replay the equilibrium and report statistics as CSV.
    Simulate(Settings),
    /// Search for profitable deviations; exit 2 if one beats --eps.
    Verify(Settings),
    /// Equilibrium quantities along one parameter axis as CSV.
    Sweep(Settings),
    /// Equilibrium price distributions as (x, F) tables.
    Dist(Settings),
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Invalid(csi_market::Error),
    Verify(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Invalid(_) => 1,
            Failure::Verify(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "{m}"),
            Failure::Invalid(e) => write!(f, "invalid parameters: {e}"),
            Failure::Verify(m) => write!(f, "verification failed: {m}"),
            Failure::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<csi_market::Error> for Failure {
    fn from(e: csi_market::Error) -> Self {
        Failure::Invalid(e)
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Solve(s) => commands::solve_cmd(&s.resolve()?),
        Command::Simulate(s) => commands::simulate_cmd(&s.resolve()?),
        Command::Verify(s) => commands::verify_cmd(&s.resolve()?),
        Command::Sweep(s) => commands::sweep_cmd(&s.resolve()?),
        Command::Dist(s) => commands::dist_cmd(&s.resolve()?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("csi-market: {e}");
            ExitCode::from(e.code())
        }
    }
}
