use std::process::ExitCode;

use clap::Parser;
use drscert_cli::commands::{run, INPUT_ERROR_CODE};
use drscert_cli::config::{Cli, RunConfig};

fn main() -> ExitCode {
    let cfg = match RunConfig::try_from(Cli::parse()) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(INPUT_ERROR_CODE);
        }
    };
    match run(&cfg) {
        Ok(outcome) => ExitCode::from(outcome.exit_code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(INPUT_ERROR_CODE)
        }
    }
}
