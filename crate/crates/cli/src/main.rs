use std::process::ExitCode;

use clap::Parser;
use cic_cli::args::Cli;
use cic_cli::{config_from_cli, run};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = config_from_cli(&cli).and_then(|cfg| run(&cfg, &mut std::io::stdout().lock()));
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("cic: validation failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("cic: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
