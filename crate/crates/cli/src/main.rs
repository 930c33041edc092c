//! `gsd`: command-line front end.
//!
//! Exit status is 0 on success, 1 on a usage error and 2 on a data error.

mod cli;
mod commands;
mod input;
mod report;

use std::process::ExitCode;

use clap::Parser;

use crate::cli::Cli;
use crate::commands::UsageError;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            // Help and version requests are printed to stdout and succeed.
            return ExitCode::from(if err.use_stderr() { 1 } else { 0 });
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(if err.is::<UsageError>() { 1 } else { 2 })
        }
    }
}
