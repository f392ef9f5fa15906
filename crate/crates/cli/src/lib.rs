//! Command-line front end for `mvdist-core`.
//!
//! One subcommand per operation (`pmvnormal`, `invmvt`, `rtmvnormal`, …)
//! plus two table emitters, `density-grid` and `truncation-curve`. Output
//! is text, JSON or CSV; exit codes are 0 (ok), 1 (usage), 2 (validation)
//! and 3 (numerical failure).

pub mod args;
pub mod cache;
pub mod commands;
pub mod output;
pub mod parse;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

use crate::args::Cli;
use crate::cache::NormalizerCache;
use crate::commands::{execute, CliError};

/// What a process invocation prints and returns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn failure(e: &CliError) -> Self {
        Outcome {
            code: e.exit_code(),
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        }
    }
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Outcome {
                    code: 0,
                    stdout: text,
                    stderr: String::new(),
                },
                _ => Outcome {
                    code: 1,
                    stdout: String::new(),
                    stderr: text,
                },
            };
        }
    };
    let cache = NormalizerCache::new();
    let report = match cli.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(&cli, &cache)),
            Err(e) => Err(CliError::Usage(format!("--threads: {e}"))),
        },
        None => execute(&cli, &cache),
    };
    match report {
        Ok(r) => Outcome {
            code: 0,
            stdout: r.render(cli.format),
            stderr: String::new(),
        },
        Err(e) => Outcome::failure(&e),
    }
}
