//! The `fracspec` command line.
//!
//! Every subcommand runs exactly one pipeline. Failures print a single line
//! `error[<Class>]: <message>` on stderr and exit with:
//!
//! | code | meaning                                   |
//! |------|-------------------------------------------|
//! | 0    | success                                   |
//! | 1    | `validate` ran and at least one check failed |
//! | 2    | usage error or a parameter violating a precondition |
//! | 3    | input data rejected                       |
//! | 4    | I/O failure                               |

mod commands;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::Error;

pub use commands::execute;

/// Version of the JSON / CSV output layouts.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "fracspec",
    version,
    about = "Haar scale-spectrum analysis of price series"
)]
pub struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, env = "FRACSPEC_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Simulate fractional Brownian motion and write it as a price CSV.
    Synth(SynthArgs),
    /// Scale spectrum of a whole series.
    Spectrum(SpectrumArgs),
    /// Rolling (or global) Hurst exponent and volatility estimates.
    Estimate(EstimateArgs),
    /// Split a series into regimes by minimizing the spectral residual.
    Segment(SegmentArgs),
    /// Scale-by-scale correlations between several assets.
    Xcorr(XcorrArgs),
    /// Replace log-price increments by moment-matched Gaussian scores.
    Regularize(RegularizeArgs),
    /// Monte Carlo self-check of the estimators on synthetic data.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    #[default]
    Auto,
    Exact,
    Circulant,
}

#[derive(Debug, Args, Serialize)]
pub struct InputArgs {
    /// Price CSV (`-` for stdin).
    pub input: PathBuf,
    /// Date column name or 0-based index.
    #[arg(long, default_value = "date")]
    pub date_col: String,
    /// Price column name or 0-based index.
    #[arg(long, default_value = "price")]
    pub price_col: String,
    /// Forward-fill runs of up to 3 missing days.
    #[arg(long)]
    pub fill_gaps: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct RangeArgs {
    /// First scale of the inertial range.
    #[arg(long)]
    pub first: Option<usize>,
    /// Last scale of the inertial range (default: half the window).
    #[arg(long)]
    pub last: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct OutputArgs {
    /// Output file (default: stdout).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long)]
    pub hurst: f64,
    /// Volatility per sampling interval.
    #[arg(long)]
    pub vol: f64,
    /// Number of samples.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Emit the point-sampled path instead of interval-averaged observations.
    #[arg(long)]
    pub raw_path: bool,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    pub method: MethodArg,
    #[arg(long, default_value = "1970-01-01")]
    pub start: String,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub range: RangeArgs,
    /// Extra moment orders, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub q: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Window length in samples.
    #[arg(long, default_value_t = 365)]
    pub window: usize,
    #[arg(long, default_value_t = 1)]
    pub step: usize,
    /// Fit the whole series as one window.
    #[arg(long)]
    pub global: bool,
    #[command(flatten)]
    pub range: RangeArgs,
    /// Generalized Hurst moment orders, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub q: Vec<f64>,
    /// Horizon (samples) for the rescaled volatility column.
    #[arg(long, default_value_t = 365.0)]
    pub horizon: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct SegmentArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Number of segments.
    #[arg(long = "q", default_value_t = 4)]
    pub segments: usize,
    #[arg(long, default_value_t = 183)]
    pub coarse: usize,
    #[arg(long, default_value_t = 5)]
    pub fine: usize,
    #[arg(long, default_value_t = 30)]
    pub min_len: usize,
    #[arg(long, default_value_t = 365.0)]
    pub horizon: f64,
    /// Directory receiving one spectrum CSV per segment.
    #[arg(long)]
    pub emit_spectra: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct XcorrArgs {
    /// Two or more price CSVs.
    #[arg(required = true, num_args = 2..)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value = "date")]
    pub date_col: String,
    #[arg(long, default_value = "price")]
    pub price_col: String,
    #[arg(long)]
    pub fill_gaps: bool,
    /// Calendar years to analyse (default: every year in the common range).
    #[arg(long, value_delimiter = ',')]
    pub periods: Vec<i32>,
    /// Use spans 1,2,4,8 for difference coefficients instead of 1,2,3,4.
    #[arg(long)]
    pub dyadic: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct RegularizeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Monte Carlo paths per check.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// Errors surfaced by the CLI: library errors plus argument parsing.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(Error),
    ChecksFailed(usize),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    pub fn class(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "Usage",
            CliError::Lib(e) => e.class(),
            CliError::ChecksFailed(_) => "ValidationFailed",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::ChecksFailed(_) => 1,
            CliError::Lib(e) => match e {
                Error::Io { .. } => 4,
                Error::InvalidParameter { .. }
                | Error::ScaleOutOfRange { .. }
                | Error::InvalidRange { .. }
                | Error::InvalidMomentOrder(_)
                | Error::WindowExceedsSeries { .. }
                | Error::InfeasibleSegmentation(_)
                | Error::SegmentTooShort { .. }
                | Error::SeriesTooLong { .. }
                | Error::HurstOutOfRange { .. }
                | Error::VolatilityOutOfRange { .. } => 2,
                _ => 3,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Lib(e) => e.to_string(),
            CliError::ChecksFailed(n) => format!("{n} check(s) failed"),
        }
    }
}

/// Parses `argv` (including the program name), runs one pipeline and returns
/// the exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let text = e.to_string();
            let line = text
                .lines()
                .next()
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ")
                .to_string();
            return report(&CliError::Usage(line), stderr);
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => report(&e, stderr),
    }
}

fn report(e: &CliError, stderr: &mut dyn Write) -> i32 {
    let msg = e.message().replace('\n', " ");
    let _ = writeln!(stderr, "error[{}]: {}", e.class(), msg);
    e.exit_code()
}

/// Entry point for the binary.
pub fn main_with_env() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let mut out = stdout.lock();
    let mut err = stderr.lock();
    let code = run(std::env::args_os(), &mut out, &mut err);
    let _ = out.flush();
    code
}
