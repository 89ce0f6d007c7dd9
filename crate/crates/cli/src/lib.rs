//! `shutter-sim`: characterization, sweeps and calibration of the shutter
//! from a bench file.
//!
//! Exit codes: 0 success, 2 input or validation error, 3 simulation error,
//! 4 calibration did not reach its targets.

pub mod args;
pub mod commands;
pub mod format;
pub mod output;

use std::ffi::OsString;
use std::fmt;

use clap::Parser;

pub use args::{Cli, Command};

/// Failure classes mapped to process exit codes.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    Input(String),
    Simulation(String),
    Calibration(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) => 2,
            Failure::Simulation(_) => 3,
            Failure::Calibration(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) | Failure::Simulation(m) | Failure::Calibration(m) => f.write_str(m),
        }
    }
}

pub const THREADS_VAR: &str = "SHUTTER_SIM_THREADS";

fn configure_threads() -> Result<Option<usize>, Failure> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| Failure::Input(format!("{THREADS_VAR} must be a positive integer, got `{raw}`")))?;
    // A second call in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(Some(n))
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to standard error.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = configure_threads().and_then(|threads| commands::dispatch(&cli.command, threads));
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}
