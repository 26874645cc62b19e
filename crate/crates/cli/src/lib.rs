//! The `gasketlab` command line.
//!
//! [`run`] is the whole program; the binary only forwards `argv` and the exit
//! code. Standard output carries results as sorted JSON, standard error
//! carries failures as a single JSON object `{"code": .., "message": ..}`.

mod args;
mod commands;
mod config;
mod reproduce;

use std::ffi::OsString;
use std::fmt;
use std::io::Write;

use clap::Parser;
use serde_json::json;

pub use args::Cli;
pub use reproduce::{reproduce, ReproduceOptions};

/// Exit status of a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit status of a domain failure (infeasible interval, junction
/// inconsistency, evaluation failure, ...).
pub const EXIT_DOMAIN: i32 = 1;
/// Exit status of a malformed invocation.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
    pub exit: i32,
}

impl CliError {
    pub fn usage(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            exit: EXIT_USAGE,
        }
    }

    pub fn domain(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            exit: EXIT_DOMAIN,
        }
    }

    pub fn to_json(&self) -> String {
        json!({ "code": self.code, "message": self.message }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for CliError {}

impl From<gasketlab::Error> for CliError {
    fn from(e: gasketlab::Error) -> Self {
        use gasketlab::geometry::GeometryError;
        let exit = match &e {
            gasketlab::Error::Parse(_) => EXIT_USAGE,
            gasketlab::Error::Geometry(GeometryError::LevelTooLarge { .. }) => EXIT_USAGE,
            _ => EXIT_DOMAIN,
        };
        Self {
            code: e.code(),
            message: e.to_string(),
            exit,
        }
    }
}

macro_rules! from_core {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                gasketlab::Error::from(e).into()
            }
        }
    )*};
}

from_core!(
    gasketlab::geometry::GeometryError,
    gasketlab::geometry::SampleError,
    gasketlab::expr::ParseError,
    gasketlab::energy::EnergyError,
    gasketlab::fractal::FractalError,
    gasketlab::constraints::ConstraintError,
    gasketlab::approx::ApproxError,
    gasketlab::dimension::DimensionError,
    std::io::Error,
    serde_json::Error
);

pub type CliResult<T> = Result<T, CliError>;

/// Runs the program on `argv` (including the program name), writing to the
/// process's standard streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run`] with explicit output streams.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    match execute(argv, out) {
        Ok(()) => EXIT_OK,
        Err(Outcome::Clap(e)) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                EXIT_OK
            } else {
                let e = CliError::usage("usage", e.to_string().trim_end());
                let _ = writeln!(err, "{}", e.to_json());
                e.exit
            }
        }
        Err(Outcome::Failed(e)) => {
            let _ = writeln!(err, "{}", e.to_json());
            e.exit
        }
    }
}

enum Outcome {
    Clap(clap::Error),
    Failed(CliError),
}

impl From<CliError> for Outcome {
    fn from(e: CliError) -> Self {
        Outcome::Failed(e)
    }
}

fn execute(argv: Vec<OsString>, out: &mut dyn Write) -> Result<(), Outcome> {
    let argv = config::expand(argv)?;
    let cli = Cli::try_parse_from(argv).map_err(Outcome::Clap)?;
    match cli.threads {
        Some(0) => Err(CliError::usage("usage", "--threads must be at least 1").into()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::usage("usage", e.to_string()))?;
            let mut buf = Vec::new();
            pool.install(|| commands::dispatch(&cli.command, &mut buf))?;
            out.write_all(&buf).map_err(CliError::from)?;
            Ok(())
        }
        None => Ok(commands::dispatch(&cli.command, out)?),
    }
}
