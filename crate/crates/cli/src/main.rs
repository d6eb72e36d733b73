//! `trendcast` command-line driver.
//!
//! Exit codes: 0 success, 2 missing input file, 3 invalid parameters or
//! input, 4 internal error. Failures print exactly one line on stderr:
//!
//! ```text
//! error code=3 kind=invalid-parameter msg="..."
//! ```

mod args;
mod commands;

use std::ffi::OsString;
use std::fmt;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use crate::args::Cli;

#[derive(Debug)]
pub enum CliError {
    MissingFile(String),
    Invalid(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::MissingFile(_) => 2,
            CliError::Invalid(_) => 3,
            CliError::Internal(_) => 4,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::MissingFile(_) => "missing-file",
            CliError::Invalid(_) => "invalid-parameter",
            CliError::Internal(_) => "internal",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::MissingFile(m) | CliError::Invalid(m) | CliError::Internal(m) => m,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg: String = self
            .message()
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ")
            .replace('\\', "\\\\")
            .replace('"', "\\\"");
        write!(
            f,
            "error code={} kind={} msg=\"{msg}\"",
            self.code(),
            self.kind()
        )
    }
}

impl From<trendcast_core::Error> for CliError {
    fn from(e: trendcast_core::Error) -> Self {
        use trendcast_core::Error as E;
        match e {
            E::DomainMismatch => CliError::Internal(e.to_string()),
            E::Io(ref io) if io.kind() == std::io::ErrorKind::NotFound => {
                CliError::MissingFile(e.to_string())
            }
            E::Io(_) => CliError::Internal(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(raw: Vec<OsString>) -> CliResult<()> {
    configure_threads()?;
    let argv = args::merge_config(raw)?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => {
            let text = e.render().to_string();
            let first = text.lines().next().unwrap_or("bad arguments");
            return Err(CliError::Invalid(
                first.trim_start_matches("error: ").to_string(),
            ));
        }
    };
    commands::dispatch(cli)
}

/// `TRENDCAST_THREADS` caps the worker pool; unset or 0 lets rayon decide.
fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("TRENDCAST_THREADS") else {
        return Ok(());
    };
    let threads: usize = value.trim().parse().map_err(|_| {
        CliError::Invalid(format!(
            "TRENDCAST_THREADS must be a non-negative integer, got '{value}'"
        ))
    })?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    Ok(())
}
