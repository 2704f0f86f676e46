//! `cdcert`: solve sparse penalized least squares by coordinate descent and
//! certify the convergence conditions along the way.
//!
//! Exit codes, stable across releases:
//! - 0: success (`fit`: converged; `diagnose`: no violations)
//! - 1: input, flag or i/o errors
//! - 2: completed with findings (`fit`/`path`: sweep budget exhausted,
//!   result still written; `diagnose`: violations found, report written)
//!
//! stdout carries machine-parseable JSON/CSV only; human logs go to stderr.

use clap::error::ErrorKind;
use clap::Parser;
use std::process::ExitCode;

mod commands;

fn main() -> ExitCode {
    let cli = match commands::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match commands::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}
