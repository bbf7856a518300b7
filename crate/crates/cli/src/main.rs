//! `dmiwall`: command-line experiments on one-dimensional chiral domain walls.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::Config;
use crate::error::CliError;
use crate::output::OutputDir;

#[derive(Parser)]
#[command(name = "dmiwall", version, about = "Domain-wall experiments with DMI")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Configuration file with `section.key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, taking precedence over `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// `key=value` override applied after the file; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Closed-form wall profile and its identities.
    Wall,
    /// Integrate the LLG flow from the configured initial state.
    Simulate,
    /// Perturb a wall, integrate and fit the decay back to the orbit.
    Stability,
    /// Low-lying spectrum of the linearised operator.
    Spectrum,
    /// Energy descent to a wall followed by a gauge fit.
    Relax,
    /// Cartesian parameter sweep of stability runs.
    Sweep,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::defaults(),
    };
    for o in &cli.overrides {
        cfg.apply_override(o)?;
    }
    let dir = match cli.out {
        Some(d) => d,
        None => cfg.resolve(cfg.raw("output.dir")),
    };
    let mut out = OutputDir::create(&dir)?;
    match cli.command {
        Command::Wall => commands::wall(&cfg, &mut out)?,
        Command::Simulate => commands::simulate(&cfg, &mut out)?,
        Command::Stability => commands::stability(&cfg, &mut out)?,
        Command::Spectrum => commands::spectrum(&cfg, &mut out)?,
        Command::Relax => commands::relax(&cfg, &mut out)?,
        Command::Sweep => commands::sweep(&cfg, &mut out)?,
    }
    let mut hashed = cfg.clone();
    hashed.set("output.dir", "")?;
    out.finish(&hashed.canonical())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
