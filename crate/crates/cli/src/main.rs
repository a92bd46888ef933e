//! `fractal-mra`: validate system files and run the wavelet, Fourier and
//! conjugacy pipelines, writing JSON reports or two-column CSV.
//!
//! Exit codes: 0 success, 1 mathematical-property failure, 2 numeric-tolerance
//! failure, 3 input error.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use output::EXIT_INPUT;

#[derive(Debug, Parser)]
#[command(name = "fractal-mra", version, about = "Wavelet and Fourier bases on fractal measures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a system file, gap fill it if asked, and check the structural conditions.
    Validate(ValidateArgs),
    /// The scaling map σ.
    #[command(subcommand)]
    Scaling(ScalingCommand),
    /// Wavelet basis checks.
    #[command(subcommand)]
    Wavelet(WaveletCommand),
    /// Spectral checks for homogeneous linear Cantor measures.
    #[command(subcommand)]
    Fourier(FourierCommand),
    /// The homeomorphism between two systems with the same number of branches.
    #[command(subcommand)]
    Conjugacy(ConjugacyCommand),
}

#[derive(Debug, Subcommand)]
enum ScalingCommand {
    /// CSV of `x,sigma` at uniform sample points.
    PlotData(ScalingPlotArgs),
}

#[derive(Debug, Subcommand)]
enum WaveletCommand {
    /// Gram identity, operator identities and scaling equation over a window.
    Report(WaveletArgs),
}

#[derive(Debug, Subcommand)]
enum FourierCommand {
    /// Dual sets, Gram window, completeness sums, cycles and a verdict.
    Report(FourierArgs),
}

#[derive(Debug, Subcommand)]
enum ConjugacyCommand {
    /// φ and φ⁻¹ at given points, with error bounds.
    Eval(ConjugacyEvalArgs),
    /// CSV of `x,phi` at uniform sample points.
    PlotData(ConjugacyPlotArgs),
    /// Gram matrix of the transported exponentials over the target measure.
    Gram(ConjugacyGramArgs),
}

#[derive(Debug, Args)]
pub struct Output {
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct ScalingPlotArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// Sampled interval as `LO,HI`.
    #[arg(long, default_value = "0,1", value_parser = parse_range, allow_hyphen_values = true)]
    pub range: (f64, f64),
    #[arg(long, default_value_t = 1001)]
    pub samples: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct WaveletArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// Dilation levels `|n| ≤ levels`.
    #[arg(long, default_value_t = 3)]
    pub levels: u32,
    /// Translations `|k| ≤ shifts`.
    #[arg(long, default_value_t = 8)]
    pub shifts: u32,
    #[arg(long, default_value_t = 1e-10, value_parser = positive)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct FourierArgs {
    /// Base `N`.
    #[arg(short = 'N', long = "N")]
    pub n: i64,
    /// Digit set `A`, comma separated.
    #[arg(short = 'A', long = "A", value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub a: Vec<i64>,
    /// Dual set `L` as comma-separated rationals, or `auto`.
    #[arg(short = 'L', long = "L", default_value = "auto", allow_hyphen_values = true)]
    pub l: String,
    #[arg(long, default_value_t = 12)]
    pub kmax: usize,
    /// Truncation tolerance for `μ̂`.
    #[arg(long, default_value_t = 1e-12, value_parser = positive)]
    pub tol: f64,
    #[arg(long, default_value_t = 64)]
    pub gram_size: usize,
    #[arg(long, default_value_t = 21)]
    pub q_points: usize,
    #[arg(long, default_value_t = 4)]
    pub cycle_length: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct Pair {
    /// System file of the source, whose measure carries the exponentials.
    #[arg(long)]
    pub source: PathBuf,
    /// System file of the target.
    #[arg(long)]
    pub target: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConjugacyEvalArgs {
    #[command(flatten)]
    pub pair: Pair,
    /// Digit depth of φ and φ⁻¹.
    #[arg(long, default_value_t = 40)]
    pub depth: usize,
    /// Points, comma separated; decimals or fractions such as `3/4`.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub x: Vec<String>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct ConjugacyPlotArgs {
    #[command(flatten)]
    pub pair: Pair,
    /// Digit depth of φ and φ⁻¹.
    #[arg(long, default_value_t = 40)]
    pub depth: usize,
    #[arg(long, default_value = "0,1", value_parser = parse_range, allow_hyphen_values = true)]
    pub range: (f64, f64),
    #[arg(long, default_value_t = 1024)]
    pub samples: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct ConjugacyGramArgs {
    #[command(flatten)]
    pub pair: Pair,
    /// Base `N` of the spectral pair; read off the source core maps when omitted.
    #[arg(short = 'N', long = "N")]
    pub n: Option<i64>,
    /// Digit set `A`; read off the source core maps when omitted.
    #[arg(short = 'A', long = "A", value_delimiter = ',')]
    pub a: Option<Vec<i64>>,
    #[arg(short = 'L', long = "L", default_value = "auto")]
    pub l: String,
    /// Number of smallest elements of the spectrum.
    #[arg(long, default_value_t = 8)]
    pub count: usize,
    /// Quadrature depth: the target measure is sampled at `p^depth` nodes.
    #[arg(long, default_value_t = 12)]
    pub depth: usize,
    #[arg(long, default_value_t = 2e-3, value_parser = positive)]
    pub tol: f64,
    #[command(flatten)]
    pub output: Output,
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{s} is not a positive finite number"))
    }
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or("expected LO,HI")?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("{e}"))?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(format!("{s} is not a nonempty finite range"));
    }
    Ok((lo, hi))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_INPUT),
            };
        }
    };
    let outcome = match cli.command {
        Command::Validate(args) => commands::validate(&args),
        Command::Scaling(ScalingCommand::PlotData(args)) => commands::scaling_plot(&args),
        Command::Wavelet(WaveletCommand::Report(args)) => commands::wavelet_report(&args),
        Command::Fourier(FourierCommand::Report(args)) => commands::fourier_report(&args),
        Command::Conjugacy(ConjugacyCommand::Eval(args)) => commands::conjugacy_eval(&args),
        Command::Conjugacy(ConjugacyCommand::PlotData(args)) => commands::conjugacy_plot(&args),
        Command::Conjugacy(ConjugacyCommand::Gram(args)) => commands::conjugacy_gram(&args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code)
        }
    }
}
