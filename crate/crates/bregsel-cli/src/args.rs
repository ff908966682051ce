//! Flag parsing and config-file merging.
//!
//! Every option can come from three places with strict precedence: a command
//! line flag beats a `key = value` line in the `--config` file, which beats
//! the built-in default. Flags and config keys share names (`--gamma-n` is
//! `gamma-n` in the file).

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::{CliError, EX_USAGE};

#[derive(Parser)]
#[command(
    name = "bregsel",
    version,
    about = "Divergence-based fitting and selection for Gamma / log-normal candidates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit both candidate families and report the parameter estimates
    Fit(FitArgs),
    /// Pairwise selection test; exit 0 prefers model A, 1 model B, 2 is indecisive
    Select(SelectArgs),
    /// Goodness-of-fit test for one family; exit 0 keeps it, 1 rejects it
    Gof(GofArgs),
    /// Monte Carlo selection campaign over a Gamma / log-normal mixture
    Simulate(SimulateArgs),
    /// Histogram and fitted-density coordinates as CSV sections
    Plotdata(PlotdataArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Dataset path, or '-' for stdin
    #[arg(long, value_name = "PATH")]
    input: Option<String>,
    /// Output format: text, json, or csv
    #[arg(long, value_name = "FMT")]
    format: Option<String>,
    /// Seed for every random draw this invocation makes
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Exponent of the power generator
    #[arg(long, value_name = "REAL")]
    beta: Option<f64>,
    /// Leading coefficient of the generator
    #[arg(long, value_name = "REAL")]
    c1: Option<f64>,
    /// Two-sided test level
    #[arg(long, value_name = "REAL")]
    level: Option<f64>,
    /// Bootstrap replicates for the variance estimate
    #[arg(long, value_name = "INT")]
    bootstrap: Option<usize>,
    /// Truncation constant c; densities below c/n are zeroed
    #[arg(long = "gamma-n", value_name = "REAL")]
    gamma_n: Option<f64>,
    /// Write the report to this path (atomic rename) instead of stdout
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Config file with `key = value` lines; flags win over file values
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct GofArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Family under test: gamma or lognormal
    #[arg(long, value_name = "NAME")]
    family: Option<String>,
    /// Parametric bootstrap replications for the null distribution
    #[arg(long = "M", value_name = "INT")]
    m: Option<usize>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Preset campaign number (1-5); mutually exclusive with --pi
    #[arg(long, value_name = "INT")]
    table: Option<u8>,
    /// Mixture weight of the Gamma component; mutually exclusive with --table
    #[arg(long, value_name = "REAL")]
    pi: Option<f64>,
    /// Comma-separated sample sizes, each at least 10
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    /// Replications per sample size
    #[arg(long, value_name = "INT")]
    reps: Option<usize>,
}

#[derive(Args)]
struct PlotdataArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Histogram bin count, at least 2
    #[arg(long, value_name = "INT")]
    bins: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Format {
    Text,
    Json,
    Csv,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Format::Text => "text",
            Format::Json => "json",
            Format::Csv => "csv",
        };
        f.write_str(name)
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(Format::Text),
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format '{other}' (expected text, json, or csv)")),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FamilyChoice {
    Gamma,
    LogNormal,
}

impl fmt::Display for FamilyChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            FamilyChoice::Gamma => "gamma",
            FamilyChoice::LogNormal => "lognormal",
        };
        f.write_str(name)
    }
}

impl FromStr for FamilyChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gamma" => Ok(FamilyChoice::Gamma),
            "lognormal" | "log-normal" => Ok(FamilyChoice::LogNormal),
            other => Err(format!(
                "unknown family '{other}' (expected gamma or lognormal)"
            )),
        }
    }
}

/// Fully merged options shared by every subcommand.
#[derive(Clone, Debug)]
pub struct CommonOpts {
    pub input: Option<String>,
    pub format: Format,
    pub seed: u64,
    pub beta: f64,
    pub c1: f64,
    pub level: f64,
    pub bootstrap: usize,
    pub gamma_n: f64,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct SimulatePlan {
    pub table: Option<u8>,
    pub pi: Option<f64>,
    pub sizes: Option<Vec<usize>>,
    pub reps: usize,
}

pub enum Resolved {
    Fit(CommonOpts),
    Select(CommonOpts),
    Gof {
        common: CommonOpts,
        family: FamilyChoice,
        replications: usize,
    },
    Simulate {
        common: CommonOpts,
        plan: SimulatePlan,
    },
    Plotdata {
        common: CommonOpts,
        bins: usize,
    },
}

/// Parse argv, returning the exit code directly for clap-level outcomes
/// (0 for --help/--version, 64 for bad flags).
pub fn parse() -> Result<Resolved, u8> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{err}");
                    Err(0)
                }
                _ => {
                    eprint!("{err}");
                    Err(EX_USAGE)
                }
            };
        }
    };
    resolve(cli).map_err(|err| {
        eprintln!("bregsel: error: {}", err.message());
        err.exit_code()
    })
}

fn resolve(cli: Cli) -> Result<Resolved, CliError> {
    match cli.command {
        Command::Fit(a) => {
            let file = FileConfig::load(a.common.config.as_deref())?;
            Ok(Resolved::Fit(resolve_common(&a.common, &file, 200)?))
        }
        Command::Select(a) => {
            let file = FileConfig::load(a.common.config.as_deref())?;
            let common = resolve_common(&a.common, &file, 200)?;
            if common.bootstrap < 50 {
                return Err(CliError::Usage(format!(
                    "--bootstrap must be at least 50, got {}",
                    common.bootstrap
                )));
            }
            Ok(Resolved::Select(common))
        }
        Command::Gof(a) => {
            let file = FileConfig::load(a.common.config.as_deref())?;
            let common = resolve_common(&a.common, &file, 200)?;
            let family = merge(a.family.as_deref(), &file, "family")?
                .map(|s: String| s.parse::<FamilyChoice>().map_err(CliError::Usage))
                .transpose()?
                .unwrap_or(FamilyChoice::Gamma);
            let replications = merge(a.m.map(|v| v.to_string()).as_deref(), &file, "M")?
                .map(|s: String| parse_value::<usize>("M", &s))
                .transpose()?
                .unwrap_or(500);
            if replications == 0 {
                return Err(CliError::Usage("--M must be at least 1".into()));
            }
            Ok(Resolved::Gof {
                common,
                family,
                replications,
            })
        }
        Command::Simulate(a) => {
            let file = FileConfig::load(a.common.config.as_deref())?;
            let common = resolve_common(&a.common, &file, 100)?;
            if common.bootstrap < 50 {
                return Err(CliError::Usage(format!(
                    "--bootstrap must be at least 50, got {}",
                    common.bootstrap
                )));
            }
            let table = merge(a.table.map(|v| v.to_string()).as_deref(), &file, "table")?
                .map(|s: String| parse_value::<u8>("table", &s))
                .transpose()?;
            let pi = merge(a.pi.map(|v| v.to_string()).as_deref(), &file, "pi")?
                .map(|s: String| parse_value::<f64>("pi", &s))
                .transpose()?;
            let sizes = match a.sizes {
                Some(v) => Some(v),
                None => file
                    .raw("sizes")?
                    .map(|s| {
                        s.split(',')
                            .map(|tok| parse_value::<usize>("sizes", tok.trim()))
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .transpose()?,
            };
            let reps = merge(a.reps.map(|v| v.to_string()).as_deref(), &file, "reps")?
                .map(|s: String| parse_value::<usize>("reps", &s))
                .transpose()?
                .unwrap_or(1000);
            match (table, pi) {
                (Some(_), Some(_)) => {
                    return Err(CliError::Usage(
                        "--table and --pi are mutually exclusive".into(),
                    ))
                }
                (None, None) => {
                    return Err(CliError::Usage(
                        "one of --table or --pi is required".into(),
                    ))
                }
                _ => {}
            }
            if let Some(t) = table {
                if !(1..=5).contains(&t) {
                    return Err(CliError::Usage(format!(
                        "--table must be between 1 and 5, got {t}"
                    )));
                }
            }
            if let Some(p) = pi {
                if !(0.0..=1.0).contains(&p) {
                    return Err(CliError::Usage(format!(
                        "--pi must lie in [0, 1], got {p}"
                    )));
                }
            }
            if let Some(sz) = &sizes {
                if sz.is_empty() {
                    return Err(CliError::Usage("--sizes must not be empty".into()));
                }
                if let Some(bad) = sz.iter().find(|&&n| n < 10) {
                    return Err(CliError::Usage(format!(
                        "--sizes entries must be at least 10, got {bad}"
                    )));
                }
            }
            if reps == 0 {
                return Err(CliError::Usage("--reps must be at least 1".into()));
            }
            Ok(Resolved::Simulate {
                common,
                plan: SimulatePlan {
                    table,
                    pi,
                    sizes,
                    reps,
                },
            })
        }
        Command::Plotdata(a) => {
            let file = FileConfig::load(a.common.config.as_deref())?;
            let common = resolve_common(&a.common, &file, 200)?;
            let bins = merge(a.bins.map(|v| v.to_string()).as_deref(), &file, "bins")?
                .map(|s: String| parse_value::<usize>("bins", &s))
                .transpose()?
                .unwrap_or(10);
            if bins < 2 {
                return Err(CliError::Usage(format!(
                    "--bins must be at least 2, got {bins}"
                )));
            }
            Ok(Resolved::Plotdata { common, bins })
        }
    }
}

fn resolve_common(
    args: &CommonArgs,
    file: &FileConfig,
    default_bootstrap: usize,
) -> Result<CommonOpts, CliError> {
    let input = merge(args.input.as_deref(), file, "input")?;
    let format = merge(args.format.as_deref(), file, "format")?
        .map(|s: String| s.parse::<Format>().map_err(CliError::Usage))
        .transpose()?
        .unwrap_or(Format::Text);
    let seed = merge(args.seed.map(|v| v.to_string()).as_deref(), file, "seed")?
        .map(|s: String| parse_value::<u64>("seed", &s))
        .transpose()?
        .unwrap_or(0);
    let beta = merge(args.beta.map(|v| v.to_string()).as_deref(), file, "beta")?
        .map(|s: String| parse_value::<f64>("beta", &s))
        .transpose()?
        .unwrap_or(3.0);
    let c1 = merge(args.c1.map(|v| v.to_string()).as_deref(), file, "c1")?
        .map(|s: String| parse_value::<f64>("c1", &s))
        .transpose()?
        .unwrap_or(1.0);
    let level = merge(args.level.map(|v| v.to_string()).as_deref(), file, "level")?
        .map(|s: String| parse_value::<f64>("level", &s))
        .transpose()?
        .unwrap_or(0.05);
    let bootstrap = merge(
        args.bootstrap.map(|v| v.to_string()).as_deref(),
        file,
        "bootstrap",
    )?
    .map(|s: String| parse_value::<usize>("bootstrap", &s))
    .transpose()?
    .unwrap_or(default_bootstrap);
    let gamma_n = merge(
        args.gamma_n.map(|v| v.to_string()).as_deref(),
        file,
        "gamma-n",
    )?
    .map(|s: String| parse_value::<f64>("gamma-n", &s))
    .transpose()?
    .unwrap_or(0.01);
    let out = match &args.out {
        Some(p) => Some(p.clone()),
        None => file.raw("out")?.map(PathBuf::from),
    };

    if !beta.is_finite() {
        return Err(CliError::Usage(format!("--beta must be finite, got {beta}")));
    }
    if !(c1.is_finite() && c1 > 0.0) {
        return Err(CliError::Usage(format!(
            "--c1 must be positive and finite, got {c1}"
        )));
    }
    if !(level.is_finite() && 0.0 < level && level < 1.0) {
        return Err(CliError::Usage(format!(
            "--level must lie strictly between 0 and 1, got {level}"
        )));
    }
    if !(gamma_n.is_finite() && gamma_n > 0.0) {
        return Err(CliError::Usage(format!(
            "--gamma-n must be positive and finite, got {gamma_n}"
        )));
    }

    Ok(CommonOpts {
        input,
        format,
        seed,
        beta,
        c1,
        level,
        bootstrap,
        gamma_n,
        out,
    })
}

/// Flag value if present, else the config-file value, else `None`.
fn merge(flag: Option<&str>, file: &FileConfig, key: &str) -> Result<Option<String>, CliError> {
    if let Some(v) = flag {
        return Ok(Some(v.to_string()));
    }
    file.raw(key)
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T, CliError> {
    raw.parse::<T>()
        .map_err(|_| CliError::Usage(format!("invalid value for '{key}': '{raw}'")))
}

const KNOWN_KEYS: &[&str] = &[
    "input",
    "format",
    "seed",
    "beta",
    "c1",
    "level",
    "bootstrap",
    "gamma-n",
    "out",
    "family",
    "M",
    "table",
    "pi",
    "sizes",
    "reps",
    "bins",
];

/// Parsed `--config` file: `key = value` lines, `#` comments, later lines
/// overriding earlier ones. Keys irrelevant to the current subcommand are
/// allowed so one file can serve several commands.
struct FileConfig {
    values: HashMap<String, String>,
}

impl FileConfig {
    fn load(path: Option<&std::path::Path>) -> Result<Self, CliError> {
        let mut values = HashMap::new();
        let Some(path) = path else {
            return Ok(FileConfig { values });
        };
        let text = std::fs::read_to_string(path).map_err(|err| {
            CliError::NoInput(format!("config file '{}': {err}", path.display()))
        })?;
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "config file '{}' line {}: expected `key = value`",
                    path.display(),
                    idx + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(CliError::Usage(format!(
                    "config file '{}' line {}: unknown key '{}'",
                    path.display(),
                    idx + 1,
                    key
                )));
            }
            if value.is_empty() {
                return Err(CliError::Usage(format!(
                    "config file '{}' line {}: empty value for '{}'",
                    path.display(),
                    idx + 1,
                    key
                )));
            }
            values.insert(key.to_string(), value.to_string());
        }
        Ok(FileConfig { values })
    }

    fn raw(&self, key: &str) -> Result<Option<String>, CliError> {
        Ok(self.values.get(key).cloned())
    }
}
