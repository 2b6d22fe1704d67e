//! The `mfgsim` command line.
//!
//! [`run`] parses an argument vector, writes data to `out` and diagnostics
//! to `err`, and returns the exit code:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | diagnostics reported (parse errors, violations, flagged gaps, ...) |
//! | 2 | usage error |
//! | 3 | internal error |

mod args;
mod commands;

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};

use clap::error::ErrorKind;
use clap::Parser;

pub use args::{parse_duration, parse_seeds};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DIAGNOSTICS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

/// A command that stopped early. `message` is `None` when the diagnostics
/// were already written.
#[derive(Debug)]
pub(crate) struct Failure {
    code: i32,
    message: Option<String>,
}

impl Failure {
    pub(crate) fn usage(msg: impl fmt::Display) -> Failure {
        Failure {
            code: EXIT_USAGE,
            message: Some(msg.to_string()),
        }
    }

    pub(crate) fn diag(msg: impl fmt::Display) -> Failure {
        Failure {
            code: EXIT_DIAGNOSTICS,
            message: Some(msg.to_string()),
        }
    }

    pub(crate) fn internal(msg: impl fmt::Display) -> Failure {
        Failure {
            code: EXIT_INTERNAL,
            message: Some(msg.to_string()),
        }
    }

    pub(crate) fn reported() -> Failure {
        Failure {
            code: EXIT_DIAGNOSTICS,
            message: None,
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure::internal(format!("i/o error: {e}"))
    }
}

/// Keeps clap's error line and the usage line, drops the rest.
fn usage_hint(rendered: &str) -> String {
    let mut lines = rendered.lines().map(str::trim).filter(|l| !l.is_empty());
    let mut out = lines.next().unwrap_or("error: invalid arguments").to_string();
    if let Some(usage) = lines.find(|l| l.starts_with("Usage:")) {
        out.push('\n');
        out.push_str(usage);
    }
    out
}

pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match args::Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
                _ => {
                    let _ = writeln!(err, "{}", usage_hint(&e.render().to_string()));
                    EXIT_USAGE
                }
            };
        }
    };
    let result = catch_unwind(AssertUnwindSafe(|| commands::dispatch(cli, out, err)));
    let code = match result {
        Ok(Ok(())) => EXIT_OK,
        Ok(Err(f)) => {
            if let Some(m) = f.message {
                let _ = writeln!(err, "error: {m}");
            }
            f.code
        }
        Err(_) => {
            let _ = writeln!(err, "error: internal failure");
            EXIT_INTERNAL
        }
    };
    let _ = out.flush();
    let _ = err.flush();
    code
}
