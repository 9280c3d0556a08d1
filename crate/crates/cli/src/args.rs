use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "normsol",
    version,
    about = "Ground states, linearized profiles and mass predictors for coupled NLS systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Shoot the positive radial ground state of -ΔU + U = U^p
    Ground(GroundArgs),
    /// Tabulate p -> ∫ U S r^{N-1} dr into integ_UW_N{N}.dat
    AlphaSweep(SweepArgs),
    /// Synchronized state and nondegeneracy verdict for a coupling matrix
    SyncCheck(SyncArgs),
    /// Leading-order frequency and concentration scale for a given mass
    Predict(PredictArgs),
    /// Write the eight sweep files of the figure plus a summary
    ReproduceFigure(FigureArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GroundArgs {
    #[arg(short = 'N', long = "dim")]
    #[serde(rename = "N")]
    pub dim: usize,
    #[arg(short, long)]
    pub p: f64,
    /// Width of the final u0 bracket
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Radial step
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(short = 'N', long = "dim")]
    #[serde(rename = "N")]
    pub dim: usize,
    #[arg(long)]
    pub p_min: f64,
    #[arg(long)]
    pub p_max: f64,
    /// Number of equally spaced exponents
    #[arg(short, long)]
    pub n: usize,
    /// Directory receiving the data file
    #[arg(short, long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumMode {
    Compute,
    Skip,
}

#[derive(Debug, Args, Serialize)]
pub struct MatrixArgs {
    /// Symmetric coupling matrix, rows separated by ';' and entries by ','
    #[arg(long, conflicts_with = "matrix_file", required_unless_present = "matrix_file", allow_hyphen_values = true)]
    pub matrix: Option<String>,
    /// File with one matrix row per line
    #[arg(long)]
    pub matrix_file: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SyncArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub matrix: MatrixArgs,
    /// Source of the weighted spectrum for the spectral test
    #[arg(long, value_enum, default_value_t = SpectrumMode::Compute)]
    pub spectrum: SpectrumMode,
    /// Dimension of the ground state whose spectrum is used
    #[arg(long, default_value_t = 2)]
    pub spectrum_dim: usize,
    #[arg(long, default_value_t = 4)]
    pub sector_max: usize,
    #[arg(long, default_value_t = 10.0)]
    pub lambda_max: f64,
}

#[derive(Debug, Args, Serialize)]
#[command(group(ArgGroup::new("coupling").args(["matrix", "matrix_file"])))]
pub struct PredictArgs {
    /// 1 and 3 use the mass expansion away from the critical dimension, 2 the critical one
    #[arg(short = 'N', long = "dim")]
    #[serde(rename = "N")]
    pub dim: usize,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: f64,
    /// Limit mass; computed as γ Σσ_i² from the coupling matrix when absent
    #[arg(long, required_unless_present_any = ["matrix", "matrix_file"])]
    pub mu0: Option<f64>,
    #[arg(long, conflicts_with = "matrix_file", allow_hyphen_values = true)]
    pub matrix: Option<String>,
    #[arg(long)]
    pub matrix_file: Option<PathBuf>,
    /// Product α ΔΓ(ξ0) for N=2, when no model is given
    #[arg(long, allow_hyphen_values = true, conflicts_with = "model")]
    pub alpha_delta_gamma: Option<f64>,
    /// Potential model (TOML) for N=2; requires the coupling matrix
    #[arg(long, requires = "coupling")]
    pub model: Option<PathBuf>,
    /// Start point of the critical-point search, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub xi_start: Option<Vec<f64>>,
}

#[derive(Debug, Args, Serialize)]
pub struct FigureArgs {
    #[arg(short, long, default_value = "figure")]
    pub out_dir: PathBuf,
    /// Exponents per panel
    #[arg(short, long, default_value_t = 40)]
    pub n: usize,
}
