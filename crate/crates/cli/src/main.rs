//! Batch runner: builds the sets and the vector, runs the checks, and writes
//! CSV tables and JSON reports into the output directory.
//!
//! Exit status is 0 when every enabled check passes, 1 when a check fails and
//! 2 on a usage or configuration error.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Fact0Args;
use config::{Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "irregular-orbits", version, about = "Finite-horizon evidence for an irregularly visiting orbit of 2B")]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the geometric sums S(a, b) against their limits.
    Fact0 {
        #[arg(long, default_value_t = 5)]
        a_min: u32,
        #[arg(long, default_value_t = 5)]
        a_max: u32,
        #[arg(long, default_value_t = 65)]
        b_max: u32,
    },
    /// Prefix densities of the level sets at the checkpoints.
    Sets,
    /// Separation, counting and density checks on the level sets.
    Verify,
    /// Build the vector and check its approximation and sign-pattern bounds.
    Vector,
    /// Density experiment on the return set, with the numeric cross-check.
    Orbit,
    /// Every command above, plus a summary.
    All {
        #[arg(long, default_value_t = 5)]
        a_min: u32,
        #[arg(long, default_value_t = 5)]
        a_max: u32,
        #[arg(long, default_value_t = 65)]
        b_max: u32,
    },
}

fn run(cli: &Cli) -> anyhow::Result<commands::Outcome> {
    let cfg = RunConfig::resolve(&cli.overrides)?;
    match cli.command {
        Command::Fact0 { a_min, a_max, b_max } => commands::fact0(&cfg, &Fact0Args { a_min, a_max, b_max }),
        Command::Sets => commands::sets(&cfg),
        Command::Verify => commands::verify(&cfg),
        Command::Vector => commands::vector(&cfg),
        Command::Orbit => commands::orbit(&cfg),
        Command::All { a_min, a_max, b_max } => commands::all(&cfg, &Fact0Args { a_min, a_max, b_max }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            println!("{}: {}", outcome.name, if outcome.pass { "pass" } else { "FAIL" });
            if outcome.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
