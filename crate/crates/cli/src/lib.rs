//! Command-line front end: argument parsing, the subcommands and their
//! CSV/JSON outputs.

pub mod commands;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{Angles, ExperimentArgs, ProtocolArgs, SweepArgs, TomographyArgs};
use crate::error::CliError;
use crate::output::{emit, encode_csv, write_atomic, Format};

#[derive(Debug, Parser)]
#[command(name = "qfeedback", version, about = "Weak-measurement feedback control of a qubit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file; defaults to $QFEEDBACK_OUTPUT_DIR/<command>.<ext>, else stdout
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Read every angle argument in degrees
    #[arg(long, global = true)]
    pub degrees: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fidelities and output states of one control scheme
    Protocol(ProtocolArgs),
    /// Optimal strength and improvement over a (theta, p) grid
    Sweep(SweepArgs),
    /// Optical model with imperfect beamsplitter reflectivities
    ExperimentModel(ExperimentArgs),
    /// Simulated tomography with Poissonian counts and bootstrap errors
    Tomography(TomographyArgs),
}

/// Runs a parsed command line. Returns the output path, if any.
pub fn run(cli: &Cli) -> Result<Option<PathBuf>, CliError> {
    let angles = Angles {
        degrees: cli.degrees,
    };
    let out = cli.output.as_deref();
    match &cli.command {
        Command::Protocol(a) => emit(&commands::protocol(a, angles)?, cli.format, out),
        Command::Sweep(a) => emit(&commands::sweep_cmd(a, angles)?, cli.format, out),
        Command::ExperimentModel(a) => emit(&commands::experiment_model(a, angles)?, cli.format, out),
        Command::Tomography(a) => {
            let t = commands::tomography(a, angles)?;
            if let Some(path) = &a.counts_output {
                write_atomic(path, &encode_csv(&t.counts)?)?;
            }
            emit(&t.report, cli.format, out)
        }
    }
}
