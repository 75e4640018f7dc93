//! Command implementations behind the `fadjoint` binary.
//!
//! Exit codes: 0 success, 1 a comparison or check failed, 2 usage or data error.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fadjoint_core::{ActivationKind, Architecture, BiasMode, InitScheme, LossKind};

pub mod demo;
pub mod fsym;
pub mod gradcheck;
pub mod json;
pub mod train;

#[derive(Debug, Parser)]
#[command(name = "fadjoint", version, about = "Two-step adjoint backpropagation engine: demos, gradient checks, training")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the forward record, adjoint record and weight gradients of a worked example
    Demo(DemoArgs),
    /// Compare adjoint gradients with the delta-rule and finite-difference oracles
    Gradcheck(GradcheckArgs),
    /// Train a network on a CSV dataset with per-sample gradient descent
    Train(TrainArgs),
    /// Sweep the forward/adjoint deviation of orthogonal identity stacks under perturbation
    Fsym(FsymArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DemoNet {
    A111,
    A121,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    /// Which worked example to run
    #[arg(value_enum)]
    pub which: DemoNet,
    /// Scalar input; defaults to 0.5 for a111 and 1 for a121
    #[arg(long, allow_negative_numbers = true)]
    pub x: Option<f64>,
    /// Target used to report J = X^L - y (does not affect gradients)
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub y: f64,
    /// Model file with replacement weights
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Activation; defaults to identity, or the model file's activation with --weights
    #[arg(long, value_parser = parse_activation)]
    pub activation: Option<ActivationKind>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Genuine layer sizes, e.g. 2-3-1
    #[arg(long, value_parser = parse_arch)]
    pub arch: ArchSizes,
    #[arg(long, default_value = "sigmoid", value_parser = parse_activation)]
    pub activation: ActivationKind,
    #[arg(long, default_value = "augmented", value_parser = parse_bias)]
    pub bias: BiasMode,
    #[arg(long, env = "FADJOINT_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, default_value = "mse", value_parser = parse_loss)]
    pub loss: LossKind,
    #[arg(long, default_value_t = fadjoint_core::gradcheck::DEFAULT_STEP)]
    pub step: f64,
    #[arg(long, default_value_t = fadjoint_core::gradcheck::DEFAULT_ATOL)]
    pub atol: f64,
    #[arg(long, default_value_t = fadjoint_core::gradcheck::DEFAULT_RTOL)]
    pub rtol: f64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// CSV file: input columns followed by target columns
    pub data: PathBuf,
    #[arg(long, value_parser = parse_arch)]
    pub arch: ArchSizes,
    #[arg(long, default_value = "sigmoid", value_parser = parse_activation)]
    pub activation: ActivationKind,
    #[arg(long, default_value = "augmented", value_parser = parse_bias)]
    pub bias: BiasMode,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    #[arg(long, default_value_t = 1000)]
    pub epochs: usize,
    /// Seed for initialization and sample shuffling
    #[arg(long, env = "FADJOINT_SEED", default_value_t = 0)]
    pub seed: u64,
    /// xavier | zeros | uniform:<r>
    #[arg(long, default_value = "xavier", value_parser = parse_init)]
    pub init: InitScheme,
    #[arg(long, default_value = "mse", value_parser = parse_loss)]
    pub loss: LossKind,
    #[arg(long, default_value_t = 100)]
    pub log_every: usize,
    /// Visit samples in file order instead of a seeded shuffle
    #[arg(long)]
    pub no_shuffle: bool,
    /// Where to write the trained model
    #[arg(long, default_value = "model.txt")]
    pub out: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct FsymArgs {
    #[arg(long, default_value_t = 4)]
    pub width: usize,
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    #[arg(long, env = "FADJOINT_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated perturbation sizes
    #[arg(long, default_value = "0", value_parser = parse_grid)]
    pub eps: Grid,
    #[arg(long)]
    pub json: bool,
}

/// Dash-separated genuine layer sizes, e.g. `2-3-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchSizes(pub Vec<usize>);

#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

fn parse_arch(s: &str) -> Result<ArchSizes, String> {
    Architecture::parse_sizes(s).map(ArchSizes).map_err(|e| e.to_string())
}

fn parse_activation(s: &str) -> Result<ActivationKind, String> {
    s.parse().map_err(|e: fadjoint_core::Error| e.to_string())
}

fn parse_bias(s: &str) -> Result<BiasMode, String> {
    s.parse().map_err(|e: fadjoint_core::Error| e.to_string())
}

fn parse_loss(s: &str) -> Result<LossKind, String> {
    s.parse().map_err(|e: fadjoint_core::Error| e.to_string())
}

fn parse_init(s: &str) -> Result<InitScheme, String> {
    s.parse().map_err(|e: fadjoint_core::Error| e.to_string())
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let values = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad perturbation size '{t}'")))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(format!("perturbation sizes must be finite and >= 0, got {v}"));
    }
    Ok(Grid(values))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    CheckFailed,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::CheckFailed => 1,
        }
    }
}

/// Usage and data errors; all map to exit code 2.
#[derive(Debug)]
pub struct CliError(pub String);

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CliError {}

impl From<fadjoint_core::Error> for CliError {
    fn from(e: fadjoint_core::Error) -> Self {
        CliError(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError(format!("io error: {e}"))
    }
}

pub const USAGE_EXIT: i32 = 2;

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<Status, CliError> {
    match cli.command {
        Command::Demo(args) => demo::run(&args, out),
        Command::Gradcheck(args) => gradcheck::run(&args, out),
        Command::Train(args) => train::run(&args, out),
        Command::Fsym(args) => fsym::run(&args, out),
    }
}

/// Parses `args` (including the program name) and runs the command, writing
/// to `out`. Returns the process exit code.
pub fn run_from_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return USAGE_EXIT;
            }
            let _ = write!(out, "{}", e.render());
            return 0;
        }
    };
    match run(cli, out) {
        Ok(status) => status.code(),
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            USAGE_EXIT
        }
    }
}
