//! `nmdep`: generalized Spearman correlation for non-monotonic dependence.

mod commands;
mod error;
mod io;
mod svg;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

use nmdep::basis::BasisKind;
use nmdep::estimate::{Estimator, TiePolicy};
use nmdep::population::Extremum;

#[derive(Parser, Debug)]
#[command(
    name = "nmdep",
    version,
    about = "Generalized Spearman correlation for non-monotonic dependence"
)]
struct Cli {
    /// Increase log verbosity on stderr.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rank-based estimates of generalized Spearman correlations from data.
    Estimate(EstimateArgs),
    /// Sharp bounds of a basis correlation, or full max/min matrices.
    Bounds(BoundsArgs),
    /// Support set of the copula attaining a bound.
    Support(SupportArgs),
    /// Population basis-correlation matrix of a copula.
    Matrix(MatrixArgs),
    /// Transformations maximizing the approximate correlation.
    Maximize(MaximizeArgs),
    /// Seeded sample from a copula, inverted-copula model or extremal copula.
    Sample(SampleArgs),
    /// Maximum-likelihood fit of an inverted-copula model.
    Fit(FitArgs),
    /// Simulation study comparing the estimators.
    Study(StudyArgs),
    /// Data from the motivating non-monotonic models.
    DemoData(DemoArgs),
}

#[derive(Args, Debug)]
pub struct OutputArgs {
    /// Output file; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Overwrite existing output files.
    #[arg(long)]
    pub force: bool,
    /// Also write an SVG figure.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct InputArgs {
    /// Two-column numeric CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// The first line of the input is a header.
    #[arg(long)]
    pub header: bool,
    #[arg(long, value_enum, default_value_t = Ties::Midrank)]
    pub ties: Ties,
}

#[derive(Args, Debug)]
pub struct BasisArgs {
    /// legendre, cosine or fourier.
    #[arg(long, default_value = "legendre")]
    pub basis: BasisKind,
    #[arg(long, default_value_t = 6)]
    pub order: usize,
}

#[derive(Args, Debug)]
pub struct PairArgs {
    /// Index of the basis function for the first variable.
    #[arg(long)]
    pub j: Option<usize>,
    /// Index of the basis function for the second variable.
    #[arg(long)]
    pub k: Option<usize>,
}

/// A copula given inline or as an inverted-copula model file.
#[derive(Args, Debug)]
pub struct ModelArgs {
    /// Copula as `family[:p1[,p2]]` (e.g. `gaussian:0.5`, `t:0.7,2`,
    /// `clayton:2,90`) or an extremal copula: jointly_symmetric_44,
    /// prohibition_sign, generic_max, generic_min (the latter two use
    /// --basis, --j and --k).
    #[arg(long)]
    pub model: Option<String>,
    /// JSON inverted-copula model.
    #[arg(long)]
    pub model_spec: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Ties {
    Reject,
    Midrank,
}

impl From<Ties> for TiePolicy {
    fn from(t: Ties) -> Self {
        match t {
            Ties::Reject => TiePolicy::Reject,
            Ties::Midrank => TiePolicy::MidrankWarn,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
pub enum MethodArg {
    /// Quadrature of the Hardy–Krause form.
    Hk,
    /// Monte Carlo.
    Mc,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ExtremumArg {
    Max,
    Min,
}

impl From<ExtremumArg> for Extremum {
    fn from(e: ExtremumArg) -> Self {
        match e {
            ExtremumArg::Max => Extremum::Max,
            ExtremumArg::Min => Extremum::Min,
        }
    }
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub basis: BasisArgs,
    #[command(flatten)]
    pub pair: PairArgs,
    /// Estimator t0..t5.
    #[arg(long = "type", default_value = "t1")]
    pub estimator: Estimator,
    /// Also write the matrix as CSV.
    #[arg(long)]
    pub matrix_csv: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub basis: BasisArgs,
    #[command(flatten)]
    pub pair: PairArgs,
    /// Matrix drawn by --svg.
    #[arg(long, value_enum, default_value_t = ExtremumArg::Max)]
    pub extremum: ExtremumArg,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct SupportArgs {
    #[arg(long, default_value = "legendre")]
    pub basis: BasisKind,
    #[command(flatten)]
    pub pair: PairArgs,
    #[arg(long, value_enum, default_value_t = ExtremumArg::Max)]
    pub extremum: ExtremumArg,
    /// Number of grid values of u.
    #[arg(long, default_value_t = 400)]
    pub resolution: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct MatrixArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub basis: BasisArgs,
    #[command(flatten)]
    pub pair: PairArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::Hk)]
    pub method: MethodArg,
    /// Quadrature nodes per axis.
    #[arg(long, default_value_t = 128)]
    pub nodes: usize,
    /// Monte Carlo sample size.
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub matrix_csv: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct MaximizeArgs {
    /// Data to estimate the matrix from; otherwise --model or --model-spec.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub header: bool,
    #[arg(long, value_enum, default_value_t = Ties::Midrank)]
    pub ties: Ties,
    #[arg(long = "type", default_value = "t1")]
    pub estimator: Estimator,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub basis: BasisArgs,
    #[command(flatten)]
    pub pair: PairArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::Hk)]
    pub method: MethodArg,
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Points at which the curves are sampled.
    #[arg(long, default_value_t = 101)]
    pub points: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = "legendre")]
    pub basis: BasisKind,
    #[command(flatten)]
    pub pair: PairArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// JSON inverted-copula model with starting values.
    #[arg(long)]
    pub model_spec: PathBuf,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct StudyArgs {
    /// JSON study configuration; the defaults reproduce the full study.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub reps: Option<usize>,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Also write the table as CSV.
    #[arg(long)]
    pub table_csv: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct DemoArgs {
    /// 1: parabola, 2: sideways parabola, 3: circle.
    #[arg(long)]
    pub model: u8,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    let result = match cli.command {
        Command::Estimate(a) => commands::estimate(a),
        Command::Bounds(a) => commands::bounds(a),
        Command::Support(a) => commands::support(a),
        Command::Matrix(a) => commands::matrix(a),
        Command::Maximize(a) => commands::maximize(a),
        Command::Sample(a) => commands::sample(a),
        Command::Fit(a) => commands::fit(a),
        Command::Study(a) => commands::study(a),
        Command::DemoData(a) => commands::demo_data(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nmdep: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
