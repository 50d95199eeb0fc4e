//! Command-line front end: configure and run the fixed-point experiments,
//! export their data files, and run the verification suite.
//!
//! Exit codes: 0 on success, 1 when a verification check fails, 2 on
//! configuration or runtime errors.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{resolve, OperatorKind, Overrides};

#[derive(Parser)]
#[command(
    name = "cosmiclab",
    about = "Fixed-point iteration laboratory for non-expansive operators without fixed points",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Iterate the planar prox operator; export trajectory, levels,
    /// cosmic report and ball-mapped snapshots.
    Run2d(Overrides),
    /// Iterate the truncated sequence-space operator; export snapshots,
    /// the normalized-coordinate trend and the sandwich-bound audit.
    Runseq(Overrides),
    /// Run the verification check suite for the selected operator.
    Verify(Overrides),
    /// Write the configured operator definition as JSON.
    Export(Overrides),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run2d(over) => resolve(over, Some(OperatorKind::Paper2d))
            .and_then(|cfg| commands::run2d(&cfg))
            .map(|()| ExitCode::SUCCESS),
        Command::Runseq(over) => resolve(over, Some(OperatorKind::Seqspace))
            .and_then(|cfg| commands::runseq(&cfg))
            .map(|()| ExitCode::SUCCESS),
        Command::Verify(over) => resolve(over, None)
            .and_then(|cfg| commands::verify(&cfg))
            .map(|all_pass| {
                if all_pass {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }),
        Command::Export(over) => resolve(over, None)
            .and_then(|cfg| commands::export(&cfg))
            .map(|()| ExitCode::SUCCESS),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
