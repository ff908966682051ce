//! `bregsel` command-line tool.
//!
//! Subcommands:
//!
//! * `fit`      - fit the Gamma and log-normal candidates to a dataset
//! * `select`   - run the pairwise divergence selection test
//! * `gof`      - parametric-bootstrap goodness-of-fit test for one family
//! * `simulate` - Monte Carlo campaign over mixture data-generating processes
//! * `plotdata` - histogram and fitted-curve coordinates for external plotting
//!
//! Exit codes follow the sysexits convention for failures (64 usage, 65 bad
//! data, 66 missing input, 70 internal). `select` and `gof` additionally
//! encode their verdict in the exit code; see the subcommand help text.

mod args;
mod commands;
mod dataset;
mod report;

use std::process::ExitCode;

pub const EX_USAGE: u8 = 64;
pub const EX_DATAERR: u8 = 65;
pub const EX_NOINPUT: u8 = 66;
pub const EX_SOFTWARE: u8 = 70;

/// Failure modes that terminate the process with a message on stderr.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad config keys, out-of-range options.
    Usage(String),
    /// The input was read but could not be turned into a usable dataset.
    Data(String),
    /// The input file (or config file) does not exist or cannot be read.
    NoInput(String),
    /// An estimation-layer error that the CLI cannot recover from.
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EX_USAGE,
            CliError::Data(_) => EX_DATAERR,
            CliError::NoInput(_) => EX_NOINPUT,
            CliError::Internal(_) => EX_SOFTWARE,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m)
            | CliError::Data(m)
            | CliError::NoInput(m)
            | CliError::Internal(m) => m,
        }
    }
}

/// Estimation errors split by blame: data-shaped problems exit 65, numeric
/// or configuration failures inside the pipeline exit 70.
pub fn module_error(err: bregsel::Error) -> CliError {
    use bregsel::Error::*;
    match err {
        Domain(_) | SampleTooSmall { .. } | DegenerateFit(_) => CliError::Data(err.to_string()),
        StepFailure(_)
        | QuadratureNonConvergence { .. }
        | DegenerateEstimate
        | DegenerateVariance(_)
        | UnsupportedFit(_) => CliError::Internal(err.to_string()),
    }
}

fn main() -> ExitCode {
    let parsed = args::parse();
    let cli = match parsed {
        Ok(cli) => cli,
        Err(code) => return ExitCode::from(code),
    };
    match commands::dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("bregsel: error: {}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}
