//! Command-line front-end: argument parsing, data loading and JSON reports.

pub mod dataset;
pub mod design;
pub mod formula;
pub mod simulate;

mod commands;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;

pub use commands::{parse_zeta_grid, ExitCode, REPORT_SCHEMA_VERSION};

#[derive(Debug, Parser)]
#[command(name = "bcsreg", version, about = "Box-Cox symmetric and zero-adjusted regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a BCS model (two-part formula) or a ZABCS model (three-part formula).
    Fit(FitArgs),
    /// Residuals, simulated envelopes and local influence of a fit.
    Diagnose(DiagnoseArgs),
    /// Choose the extra parameter zeta over a grid by the Upsilon statistic.
    SelectZeta(FitArgs),
    /// Simulate data from known coefficients or a fit report, or run a recovery study.
    Simulate(SimulateArgs),
    /// Write the bundled synthetic dataset.
    GenData(GenDataArgs),
}

/// Data and model flags shared by the fitting commands.
#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Field delimiter of the CSV file.
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    /// Responses at or below this value are treated as zeros.
    #[arg(long, default_value_t = 0.0)]
    pub zero_threshold: f64,
    /// Model formula, e.g. "y ~ age + sex | 1 | age".
    #[arg(long)]
    pub formula: Option<String>,
    /// Generator family: BCNO, BCT, BCPE, BCLOI, BCLOII, BCHP, BCSL or BCSN.
    #[arg(long)]
    pub family: Option<String>,
    /// Fixed value of the extra parameter zeta.
    #[arg(long)]
    pub zeta: Option<f64>,
    /// Grid for zeta selection, "lo:hi:step" or a comma-separated list.
    #[arg(long)]
    pub zeta_grid: Option<String>,
    /// Fix lambda at this value instead of estimating it.
    #[arg(long, allow_hyphen_values = true)]
    pub fix_lambda: Option<f64>,
    #[arg(long, default_value = "log")]
    pub link_mu: String,
    #[arg(long, default_value = "log")]
    pub link_sigma: String,
    #[arg(long, default_value = "logit")]
    pub link_alpha: String,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Seed for any randomness (recorded in the report).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DiagnoseArgs {
    /// A fit report to diagnose; otherwise the model flags are fitted first.
    #[arg(long)]
    pub fit: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of simulated replicates for the envelope (0 = none).
    #[arg(long, default_value_t = 0)]
    pub envelope: usize,
    /// Coverage level of the envelope bands.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Skip refitting envelope replicates.
    #[arg(long)]
    pub fast_envelope: bool,
    /// Compute case-weight local influence.
    #[arg(long)]
    pub influence: bool,
    /// Residual kind: quantile, randomized, pearson or all.
    #[arg(long, default_value = "quantile")]
    pub residuals: String,
    /// Realizations of randomized quantile residuals.
    #[arg(long, default_value_t = crate::diagnostics::DEFAULT_REALIZATIONS)]
    pub realizations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the tables as CSV files into this directory.
    #[arg(long)]
    pub csv_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Fit report used as the generator (coefficients and covariates).
    #[arg(long)]
    pub fit: Option<PathBuf>,
    /// Data file overriding the one named in the fit report.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub zeta: Option<f64>,
    /// Mu coefficients: intercept, or intercept and slope on x ~ U(-1, 1).
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    /// Sigma coefficients, same layout as --beta.
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Option<String>,
    /// Alpha coefficients; their presence makes the model zero-adjusted.
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<String>,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub lambda: f64,
    #[arg(long, default_value = "log")]
    pub link_mu: String,
    #[arg(long, default_value = "log")]
    pub link_sigma: String,
    #[arg(long, default_value = "logit")]
    pub link_alpha: String,
    /// Sample size, or a comma-separated list of sizes for a study.
    #[arg(long)]
    pub n: String,
    /// Monte Carlo replicates; 0 writes one simulated dataset as CSV.
    #[arg(long, default_value_t = 0)]
    pub replicates: usize,
    /// Nominal coverage of the Wald intervals in a study.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GenDataArgs {
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
    /// CSV output path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the generating coefficients as JSON here.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

/// Exit code for an error raised while running a command.
pub fn exit_code_of(e: &Error) -> ExitCode {
    match e {
        Error::Convergence(_) | Error::Separation { .. } | Error::Singular(_) | Error::Quadrature { .. } => {
            ExitCode::Convergence
        }
        _ => ExitCode::Usage,
    }
}

/// Parses `argv` (program name first), runs the command and returns the process exit code.
pub fn run<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            let _ = stdout.flush();
            return e.exit_code();
        }
    };
    let result = match &cli.command {
        Command::Fit(a) => commands::fit(a, &argv, stdout),
        Command::Diagnose(a) => commands::diagnose(a, &argv, stdout),
        Command::SelectZeta(a) => commands::select_zeta(a, &argv, stdout),
        Command::Simulate(a) => commands::simulate(a, &argv, stdout),
        Command::GenData(a) => commands::gen_data(a, &argv, stdout),
    };
    match result {
        Ok(code) => code as i32,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code_of(&e) as i32
        }
    }
}
