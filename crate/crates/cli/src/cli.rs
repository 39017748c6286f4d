use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "qprecision", version, about = "Attainable precision bounds for quantum state estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// SLD, RLD, Holevo and nuisance bounds at one point (JSON).
    Bounds(BoundsArgs),
    /// Bound ladder over a 1-D or 2-D parameter grid (CSV or JSON).
    Sweep(SweepArgs),
    /// Seeded one-parameter attainability simulation.
    Simulate(SimulateArgs),
    /// Minimal tail probability of a qudit or Gaussian model.
    Tail(TailArgs),
    /// Canonical form, D-invariance and optimal measurement covariance of a Gaussian model.
    Gaussian(GaussianArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Default)]
pub struct ModelArgs {
    /// two_observables, amplitude_damping, multiphase, qudit_full,
    /// classical_diagonal, bernoulli or qubit_phase.
    #[arg(long)]
    pub model: Option<String>,
    /// JSON `{name, constants, point}`; flags given alongside override it.
    #[arg(long)]
    pub model_file: Option<PathBuf>,
    /// Model constants, `k=v,...`; values may be JSON (`a=[1,0,0]`).
    #[arg(long)]
    pub constants: Option<String>,
    /// Parameter point `v1,v2,...`. For multiphase the d phases alone suffice.
    #[arg(long, allow_hyphen_values = true)]
    pub point: Option<String>,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// `identity`, `diag:w1,...` or `file:path`.
    #[arg(long, default_value = "identity")]
    pub weight: String,
    /// Number of trailing nuisance parameters (default: the model's own).
    #[arg(long)]
    pub nuisance: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// `param:lo:hi:steps`, by name or index; repeat for a 2-D grid.
    #[arg(long, required = true)]
    pub grid: Vec<String>,
    #[arg(long, default_value = "identity")]
    pub weight: String,
    #[arg(long)]
    pub nuisance: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Copies `n` per trial.
    #[arg(long)]
    pub copies: u64,
    /// Point of the local measurement (default: the true value).
    #[arg(long, allow_hyphen_values = true)]
    pub t0: Option<f64>,
    /// Localize by tomography first instead of measuring at a known t0.
    #[arg(long)]
    pub two_step: bool,
    /// Localization exponent for --two-step.
    #[arg(long, default_value_t = 0.1)]
    pub x: f64,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TailArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Gaussian model JSON instead of a qudit model; the weight is then in
    /// canonical coordinates.
    #[arg(long)]
    pub gaussian: Option<PathBuf>,
    #[arg(long)]
    pub seed: u64,
    /// Threshold on the weighted squared error.
    #[arg(long)]
    pub c: f64,
    #[arg(long, default_value_t = qprecision::sampling::DEFAULT_SAMPLES)]
    pub samples: usize,
    #[arg(long, default_value = "identity")]
    pub weight: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GaussianArgs {
    /// JSON `{dC, dQ, Gamma_re, Gamma_im, T}`.
    #[arg(long)]
    pub file: PathBuf,
    /// Weight on the parameters (columns of T).
    #[arg(long, default_value = "identity")]
    pub weight: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
