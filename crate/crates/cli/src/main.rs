//! `contest`: solve, design, compare and verify rank-order contests from
//! scenario files.

mod commands;
mod error;
mod output;
mod scenario;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::RunOptions;
use error::CliError;
use output::Format;
use scenario::Scenario;

#[derive(Debug, Parser)]
#[command(
    name = "contest",
    version,
    about = "Two-group rank-order contest toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Equilibrium strategies of both groups.
    Equilibrium(Args),
    /// Optimal prize schedule for the target group.
    Design(Args),
    /// Single general prize vs single group prize over a grid of mu.
    Compare(Args),
    /// Monte Carlo and first-order-condition checks of the equilibrium.
    Verify(Args),
}

#[derive(Debug, clap::Args)]
struct Args {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    grid_size: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Format of tabular output.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

type Handler = fn(&Scenario, &std::path::Path, &RunOptions) -> Result<serde_json::Value, CliError>;

fn run(cli: Cli) -> Result<serde_json::Value, CliError> {
    let (args, which): (&Args, Handler) = match &cli.command {
        Command::Equilibrium(a) => (a, commands::cmd_equilibrium),
        Command::Design(a) => (a, commands::cmd_design),
        Command::Compare(a) => (a, commands::cmd_compare),
        Command::Verify(a) => (a, commands::cmd_verify),
    };
    if args.grid_size == Some(0) || args.samples == Some(0) {
        return Err(CliError::Config(
            "--grid-size and --samples must be positive".into(),
        ));
    }
    let scenario = Scenario::load(&args.scenario)?;
    std::fs::create_dir_all(&args.out)?;
    let opts = RunOptions {
        grid_size: args.grid_size,
        samples: args.samples,
        seed: args.seed,
        format: args.format,
    };
    which(&scenario, &args.out, &opts)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(summary) => {
            let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
            // The files are already written; a closed stdout pipe is not an error.
            let _ = writeln!(std::io::stdout(), "{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
