//! Command-line front end: JSON configuration plus flag overrides, six
//! subcommands and CSV or JSON reports.

pub mod commands;
pub mod config;
pub mod table;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub use commands::{
    cmd_exponents, cmd_figure2, cmd_mismatched, cmd_sensitivity, cmd_stein, cmd_worst_case,
};
pub use config::{ConfigError, ExperimentConfig, GammaSpec, OutputFormat, RawConfig};
pub use table::{Cell, Table};

use crate::error::Error;

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NONCONVERGENCE: u8 = 3;
pub const EXIT_INFEASIBLE: u8 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "mlrt",
    version,
    about = "Error exponents of mismatched likelihood ratio tests"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Matched exponents of (p1, p2): primal, dual and achievers.
    Exponents(CommonArgs),
    /// Exponents of the test (phat1, phat2, gamma) under (p1, p2).
    Mismatched(CommonArgs),
    /// Stein-regime thresholds and exponent, with optional Monte Carlo check.
    Stein(CommonArgs),
    /// Worst-case exponents over relative-entropy balls around the test distributions.
    WorstCase(CommonArgs),
    /// Sensitivity coefficients, threshold scan and quadratic model.
    Sensitivity(CommonArgs),
    /// Exact and first-order worst-case Bayes exponent against the radius.
    Figure2(CommonArgs),
}

impl Command {
    fn args(&self) -> &CommonArgs {
        match self {
            Command::Exponents(a)
            | Command::Mismatched(a)
            | Command::Stein(a)
            | Command::WorstCase(a)
            | Command::Sensitivity(a)
            | Command::Figure2(a) => a,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON configuration file, or `-` for stdin.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub p1: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub p2: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub phat1: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub phat2: Option<Vec<f64>>,
    /// Threshold: a number, `auto_bayes` or `auto_stein`.
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<GammaSpec>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub radii: Option<Vec<f64>>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Block lengths.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<u64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo trials per block length (0 disables simulation).
    #[arg(long)]
    pub trials: Option<u64>,
    /// Points in the sensitivity threshold scan.
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl CommonArgs {
    fn overrides(&self) -> RawConfig {
        RawConfig {
            p1: self.p1.clone(),
            p2: self.p2.clone(),
            p_hat1: self.phat1.clone(),
            p_hat2: self.phat2.clone(),
            gamma: self.gamma,
            radii: self.radii.clone(),
            epsilon: self.epsilon,
            n_list: self.n.clone(),
            seed: self.seed,
            trials: self.trials,
            grid_points: self.grid_points,
            output_format: self.format,
        }
    }

    pub fn resolve(&self) -> Result<ExperimentConfig, ConfigError> {
        let base = match &self.config {
            Some(path) => RawConfig::load(path)?,
            None => RawConfig::default(),
        };
        ExperimentConfig::resolve(base.overridden_by(self.overrides()))
    }
}

/// Failure of a CLI invocation, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Solver(Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
            CliError::Solver(e) => match e {
                Error::NonConvergence { .. } | Error::Cancelled => EXIT_NONCONVERGENCE,
                Error::Unbounded { .. } | Error::Infeasible(_) => EXIT_INFEASIBLE,
                _ => EXIT_CONFIG,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "config error: {e}"),
            CliError::Solver(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Solver(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

/// Computes the report of a subcommand.
pub fn report(command: &Command, cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let t = match command {
        Command::Exponents(_) => cmd_exponents(cfg)?,
        Command::Mismatched(_) => cmd_mismatched(cfg)?,
        Command::Stein(_) => cmd_stein(cfg)?,
        Command::WorstCase(_) => cmd_worst_case(cfg)?,
        Command::Sensitivity(_) => cmd_sensitivity(cfg)?,
        Command::Figure2(_) => cmd_figure2(cfg)?,
    };
    Ok(t)
}

pub fn render(table: &Table, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => table.to_csv_string(),
        OutputFormat::Json => table.to_json_string(),
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let args = cli.command.args();
    let cfg = args.resolve()?;
    let table = report(&cli.command, &cfg)?;
    let text = render(&table, cfg.output_format);
    match &args.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mlrt: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
