//! Command-line front end: outlier detection, attribution, score
//! distributions, method comparison and closed-form oracle queries.

mod args;
mod commands;
mod setup;

use std::ffi::OsString;

use clap::Parser;
use gpa_core::Error as CoreError;

pub use args::{Cli, Command};

pub const EXIT_OK: i32 = 0;
/// Runtime failure inside an algorithm (divergence, non-finite model output).
pub const EXIT_FAILURE: i32 = 1;
/// Usage or configuration error.
pub const EXIT_CONFIG: i32 = 2;
/// The model adapter failed to deliver a prediction.
pub const EXIT_TRANSPORT: i32 = 3;

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match commands::dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

/// Maps an error chain to the exit-code contract.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(core) = cause.downcast_ref::<CoreError>() {
            return match core {
                CoreError::Transport(_) => EXIT_TRANSPORT,
                CoreError::Divergence(_) | CoreError::NonFinite { .. } | CoreError::EmptyDistribution(_) => {
                    EXIT_FAILURE
                }
                _ => EXIT_CONFIG,
            };
        }
    }
    EXIT_CONFIG
}
