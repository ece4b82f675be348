//! Library side of the `im-lab` tool: argument types, report assembly and
//! one module per subcommand. `main.rs` only parses, executes and writes.

pub mod args;
pub mod commands;
pub mod report;

use std::path::PathBuf;

pub use args::Cli;
pub use report::{Report, Status, Verdict};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] im_lab_core::Error),
}

impl CliError {
    /// 2 for bad input, 3 for resource-guard refusals.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_resource_guard() => 3,
            _ => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// A finished run: the report plus any files to write alongside it.
#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    /// Where the report goes; stdout when `None`.
    pub report_path: Option<PathBuf>,
    pub files: Vec<(PathBuf, Vec<u8>)>,
}

/// Runs the parsed command. Nothing is written here.
pub fn execute(cli: &Cli) -> CliResult<Outcome> {
    commands::run(cli)
}

/// Writes side files first, then the report.
pub fn write_outcome(outcome: &Outcome) -> CliResult<()> {
    for (path, bytes) in &outcome.files {
        std::fs::write(path, bytes).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
    }
    let json = outcome.report.to_json();
    match &outcome.report_path {
        Some(path) => std::fs::write(path, json).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        }),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}
