//! The `rsh-lab` command-line runner. Every subcommand writes its results
//! into `--out` and prints a short summary; the exit code says how it went.

pub mod args;
mod commands;
mod reproduce;

use std::process::ExitCode;

pub use args::{Cli, Command};

/// Outcome of a subcommand that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    /// The chain does not meet a precondition of the requested analysis,
    /// or a reproduction row failed.
    PreconditionFailed,
    /// A drift hypothesis does not hold.
    Denied,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Success => 0,
            Status::PreconditionFailed => 2,
            Status::Denied => 3,
        }
    }
}

/// Exit code for bad input: unreadable files, invalid flags or values.
pub const INPUT_ERROR: u8 = 1;

/// Environment variable capping the worker threads (0 = one per core).
pub const THREADS_ENV: &str = "RSH_LAB_THREADS";

pub fn run(cli: Cli) -> anyhow::Result<Status> {
    match cli.command {
        Command::Analyze(a) => commands::analyze(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Drift(a) => commands::drift(&a),
        Command::Reproduce(a) => reproduce::run(&a),
    }
}

/// Reads [`THREADS_ENV`] and sizes the global pool accordingly.
pub fn configure_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| anyhow::anyhow!("{THREADS_ENV}: expected a thread count, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()?;
    Ok(())
}

/// Parses the arguments, runs the command and maps the result to an exit
/// code. Usage errors exit with [`INPUT_ERROR`] rather than clap's default.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    use clap::Parser;
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { INPUT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = configure_threads().and_then(|()| run(cli));
    match result {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(INPUT_ERROR)
        }
    }
}
