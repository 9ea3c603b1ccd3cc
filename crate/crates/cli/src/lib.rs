//! Command-line front end: CSV ingestion, dispatch to the library and
//! machine-readable reports.

pub mod args;
mod commands;
pub mod ingest;
pub mod output;
pub mod schema;

use serde_json::Value;
use thiserror::Error;

pub use args::Cli;
use args::Command;
use mdl_core::MdlError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("input: {0}")]
    Ingest(String),
    #[error(transparent)]
    Compute(#[from] MdlError),
    #[error("output: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Ingest(_) => 2,
            CliError::Compute(_) | CliError::Io(_) => 1,
        }
    }
}

/// Runs one subcommand and returns its report as a JSON value in nats.
pub fn execute(cli: &Cli) -> Result<Value, CliError> {
    let seed = cli.global.seed;
    match &cli.command {
        Command::Complexity(a) => commands::complexity(a),
        Command::Select(a) => commands::select(a),
        Command::Varsel(a) => commands::varsel(a),
        Command::Markov(a) => commands::markov(a),
        Command::Bn(a) => commands::bn(a, seed),
        Command::Preq(a) => commands::preq(a),
        Command::Test(a) => commands::test(a, seed),
        Command::Schema(a) => Ok(schema::schema(a.subcommand)),
    }
}

/// Runs a subcommand and renders the report in the requested units and format.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let mut report = execute(cli)?;
    if cli.global.bits && !matches!(cli.command, Command::Schema(_)) {
        report = output::to_bits(report);
    }
    Ok(output::render(&report, cli.global.format))
}
