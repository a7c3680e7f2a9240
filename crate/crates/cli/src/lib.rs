//! Command-line surface of the `cic` library: CSV ingestion, run
//! configuration and the estimate, simulate, validate and coverage drivers.

pub mod args;
pub mod config;
pub mod error;
pub mod ingest;
pub mod output;
pub mod run;

pub use config::RunConfig;
pub use error::CliError;
pub use ingest::{ingest_csv, parse_csv, write_csv};
pub use run::run;

use args::Cli;

/// Parses process arguments into a checked-later configuration.
pub fn config_from_cli(cli: &Cli) -> Result<RunConfig, CliError> {
    let base = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    base.apply(cli.command.as_ref())
}
