//! Command-line front end for `causal-tradeoff`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod config;
pub mod contour;
pub mod error;
pub mod ingest;
pub mod output;
pub mod plot;

pub use args::{Cli, Command};
pub use error::{CliError, CliResult};

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "CAUSAL_TRADEOFF_THREADS";

pub fn run(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::ClosedForm(a) => commands::cmd_closed_form(a),
        Command::Simulate(a) => commands::cmd_simulate(a),
        Command::Sensitivity(a) => commands::cmd_sensitivity(a, false),
        Command::Analyze(a) => commands::cmd_sensitivity(a, true),
        Command::Contour(a) => commands::cmd_contour(a),
    }
}

/// Sizes the global worker pool from `CAUSAL_TRADEOFF_THREADS`.
#[cfg(feature = "parallel")]
pub fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV}={value} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

#[cfg(not(feature = "parallel"))]
pub fn configure_threads() -> CliResult<()> {
    Ok(())
}
