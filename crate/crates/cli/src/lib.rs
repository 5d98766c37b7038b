//! `mmwf` command-line front end.
//!
//! Every run writes a `manifest.json` holding the fully resolved
//! configuration; `mmwf replay` re-executes it and reproduces the outputs
//! byte for byte, whatever `--jobs` is.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 acceptance failure.

pub mod args;
pub mod config;
pub mod output;
pub mod pipeline;

use std::io::Write;
use std::path::Path;

use clap::error::ErrorKind;
use clap::Parser;
use mmwf_core::{AnalysisError, ChannelError, PersistenceError, SynthesisError};
use thiserror::Error;

use args::{Cli, Command};
use config::{resolve_analyze, resolve_roundtrip, resolve_simulate, RunConfig, RunManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_ACCEPTANCE: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Data(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

macro_rules! data_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Data(e.to_string())
            }
        }
    )*};
}

data_error!(AnalysisError, ChannelError, PersistenceError, SynthesisError, std::io::Error);

fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Data(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Runs a resolved configuration; `Ok(false)` means a round trip failed its checks.
pub fn execute(config: &RunConfig, out_dir: Option<&Path>, jobs: usize, out: &mut (dyn Write + Send)) -> Result<bool, CliError> {
    let need_dir = || out_dir.ok_or_else(|| CliError::Usage("an output directory is required".into()));
    with_jobs(jobs, || match config {
        RunConfig::Simulate(c) => pipeline::simulate(c, need_dir()?, out).map(|_| true),
        RunConfig::Analyze(c) => pipeline::analyze(c, need_dir()?, out).map(|_| true),
        RunConfig::Roundtrip(c) => pipeline::roundtrip(c, out_dir, out),
    })?
}

fn dispatch(cli: Cli, out: &mut (dyn Write + Send), err: &mut dyn Write) -> Result<bool, CliError> {
    match cli.command {
        Command::Simulate(a) => {
            let c = resolve_simulate(&a)?;
            execute(&RunConfig::Simulate(c), Some(&a.out_dir), a.jobs, out)
        }
        Command::Analyze(a) => {
            let c = resolve_analyze(&a)?;
            execute(&RunConfig::Analyze(c), Some(&a.out_dir), a.jobs, out)
        }
        Command::Roundtrip(a) => {
            let c = resolve_roundtrip(&a)?;
            execute(&RunConfig::Roundtrip(c), a.out_dir.as_deref(), a.jobs, out)
        }
        Command::Replay(a) => {
            let m = RunManifest::load(&a.manifest)?;
            if m.tool_version != env!("CARGO_PKG_VERSION") {
                writeln!(
                    err,
                    "warning: manifest written by version {}, replaying with {}",
                    m.tool_version,
                    env!("CARGO_PKG_VERSION")
                )?;
            }
            execute(&m.config, Some(&a.out_dir), a.jobs, out)
        }
    }
}

/// Parses `args` (program name first) and runs the subcommand, returning the exit code.
pub fn run<I, T>(args: I, out: &mut (dyn Write + Send), err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli, out, err) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_ACCEPTANCE,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
