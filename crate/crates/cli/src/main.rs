mod commands;
mod config;
mod fit;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::Config;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Cap(String),
    #[error("{0}")]
    Io(String),
}

impl From<kwgauss::Error> for CliError {
    fn from(e: kwgauss::Error) -> Self {
        match e {
            kwgauss::Error::ResourceCap { .. } => CliError::Cap(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Cap(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

/// Integer list item: `4` or an inclusive range `2..8`.
#[derive(Clone, Debug)]
pub struct Span(Vec<u32>);

impl FromStr for Span {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let int = |t: &str| t.trim().parse::<u32>().map_err(|_| format!("not an integer: {t:?}"));
        match s.split_once("..") {
            Some((lo, hi)) => {
                let (lo, hi) = (int(lo)?, int(hi.trim_start_matches('='))?);
                if lo > hi {
                    return Err(format!("empty range {s:?}"));
                }
                Ok(Span((lo..=hi).collect()))
            }
            None => Ok(Span(vec![int(s)?])),
        }
    }
}

pub fn flatten(spans: &[Span]) -> Vec<u32> {
    spans.iter().flat_map(|s| s.0.iter().copied()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Parser, Debug)]
#[command(
    name = "kwgauss",
    version,
    about = "Gaussian state preparation circuits: gate counts, fidelities and exports"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// key = value file with threshold_lo, threshold_hi, qubit_cap, prune_floor, strict.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Largest register simulated; overrides the config file.
    #[arg(long, global = true, env = "KWGAUSS_QUBIT_CAP")]
    pub qubit_cap: Option<usize>,
    /// Fail with exit code 3 instead of dropping to counts above the cap.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Skip all simulation.
    #[arg(long, global = true)]
    pub count_only: bool,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct Prep1dArgs {
    /// Qubits, e.g. `4` or `2..8,10`.
    #[arg(long, value_delimiter = ',', required = true)]
    pub k: Vec<Span>,
    /// Angle bits.
    #[arg(long, value_delimiter = ',', default_value = "6")]
    pub b: Vec<Span>,
    /// Width in lattice units, or the prefactor of 2^(k/2) with --physical-scaling.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub sigma: Vec<f64>,
    /// Only -0.5, the symmetric lattice centre, is supported by the circuit.
    #[arg(long, default_value_t = -0.5, allow_negative_numbers = true)]
    pub mu: f64,
    #[arg(long)]
    pub physical_scaling: bool,
    #[arg(long)]
    pub threshold_lo: Option<f64>,
    #[arg(long)]
    pub threshold_hi: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct ShearArgs {
    /// Lattice sites of the scalar field.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub n_dims: Vec<Span>,
    #[arg(long, value_delimiter = ',', default_value = "3")]
    pub k: Vec<Span>,
    #[arg(long, default_value_t = 1.0)]
    pub mass: f64,
    /// Width scale of the field covariance in lattice units.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub scale: Vec<f64>,
    /// Whitespace-separated covariance matrix, one row per line; replaces the scalar field.
    #[arg(long)]
    pub covariance: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum ExportKind {
    /// The 1D preparation circuit.
    Prep1d(Prep1dArgs),
    /// The coordinate shear circuit.
    Shear(ShearArgs),
}

#[derive(Subcommand, Debug)]
enum Command {
    /// 1D preparation: gate counts per level and fidelity to the exact state.
    Prep1d(Prep1dArgs),
    /// N-dimensional shear: gate counts, bound, fidelity and fidelity-law fit.
    Shear(ShearArgs),
    /// Write a circuit in the text interchange format.
    Export {
        #[command(subcommand)]
        kind: ExportKind,
    },
    /// 1D preparation counts next to the exponential baselines, without simulation.
    Counts(Prep1dArgs),
}

fn settings(common: &Common) -> Result<commands::Settings, CliError> {
    let mut cfg = match &common.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(cap) = common.qubit_cap {
        cfg.qubit_cap = cap;
    }
    cfg.strict |= common.strict;
    Ok(commands::Settings { config: cfg, count_only: common.count_only })
}

fn run(cli: Cli) -> Result<(), CliError> {
    let s = settings(&cli.common)?;
    let text = match &cli.command {
        Command::Prep1d(a) => output::render(&commands::prep1d(a, &s)?, cli.common.format)?,
        Command::Counts(a) => output::render(&commands::counts(a, &s)?, cli.common.format)?,
        Command::Shear(a) => output::render(&commands::shear(a, &s)?, cli.common.format)?,
        Command::Export { kind: ExportKind::Prep1d(a) } => commands::export_prep1d(a, &s)?,
        Command::Export { kind: ExportKind::Shear(a) } => commands::export_shear(a)?,
    };
    output::write(cli.common.out.as_deref(), &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spans_expand() {
        let s: Vec<Span> = ["2..4", "7", "9..=10"].iter().map(|t| t.parse().unwrap()).collect();
        assert_eq!(flatten(&s), vec![2, 3, 4, 7, 9, 10]);
        assert!("5..3".parse::<Span>().is_err());
        assert!("x".parse::<Span>().is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
