//! `qnet`: spectra, eigenvalue derivatives, extremality certificates,
//! geodesic nets and eigenvalue optimization on quantum graphs.
//!
//! Every subcommand prints one JSON report on standard output. With
//! `--out DIR` the report and any CSV or net files are also written there.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod report;

pub use report::{exit_code, Outcome, RunReport};

#[derive(Debug, Parser)]
#[command(name = "qnet", version, about = "Spectral geometry toolkit for quantum graphs")]
pub struct Cli {
    /// Directory for report.json and auxiliary files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Record wall-clock time in the report. Reports are then no longer
    /// byte-identical across runs.
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues, clusters and Kirchhoff residuals.
    Spectrum(SpectrumArgs),
    /// Directional derivative of λ_k and its normalized form.
    Gradient(GradientArgs),
    /// Semidefinite certificate for an extremal eigenspace.
    Certify(CertifyArgs),
    /// Extremal metric (or metric/density pair) search.
    Optimize(OptimizeArgs),
    /// Sphere map from a certificate, checked as a geodesic net.
    Immerse(ImmerseArgs),
    /// Reference pumpkin net, or verification of a net file.
    Net(NetArgs),
    /// Closed-form spectra and obstruction verdicts.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    /// Problem file (JSON).
    pub problem: PathBuf,
    /// Overrides the file's mesh_per_edge.
    #[arg(long)]
    pub mesh_per_edge: Option<usize>,
    #[arg(long, default_value_t = qnet_core::spectral::DEFAULT_CLUSTER_TOL)]
    pub cluster_tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Highest eigenvalue index to report (λ_0 ..= λ_k).
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Also write eigenfunction samples as CSV (needs --out).
    #[arg(long)]
    pub eigenfunctions: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Metric,
    Natural,
    Alpha,
}

#[derive(Debug, Clone, Args)]
pub struct GradientArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = KindArg::Natural)]
    pub kind: KindArg,
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    /// Direction file `{"phi": {edge: number}, "eta": {edge: number | [samples]}}`.
    /// Defaults to the scaling direction (g, ρ).
    #[arg(long)]
    pub dir: Option<PathBuf>,
    /// Compare with central finite differences.
    #[arg(long)]
    pub fd: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    Thm1,
    Thm2,
    Thm3,
}

#[derive(Debug, Clone, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = TargetArg::Thm1)]
    pub kind: TargetArg,
    /// Exponent for thm3 targets.
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = qnet_core::extremality::DEFAULT_CERTIFY_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = qnet_core::extremality::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    /// Relative window for the 4λ test.
    #[arg(long, default_value_t = qnet_core::extremality::DEFAULT_FOUR_LAMBDA_WINDOW)]
    pub window: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Max,
    Min,
}

#[derive(Debug, Clone, Args)]
pub struct OptimizeArgs {
    /// Problem file; its metric (and density) seeds the first restart.
    pub problem: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = DirectionArg::Max)]
    pub direction: DirectionArg,
    #[arg(long, value_enum, default_value_t = KindArg::Metric)]
    pub kind: KindArg,
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 400)]
    pub max_iter: usize,
    /// Stationarity tolerance relative to the objective.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Mesh used during the search.
    #[arg(long, default_value_t = 64)]
    pub search_mesh: usize,
    /// Mesh of the reported metric; defaults to the file's mesh_per_edge.
    #[arg(long)]
    pub mesh_per_edge: Option<usize>,
    /// Tolerance for certifying a converged point.
    #[arg(long, default_value_t = 1e-4)]
    pub certify_tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ImmerseArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = qnet_core::extremality::DEFAULT_CERTIFY_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = qnet_core::extremality::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    /// Allowed sup variation of |F|² relative to its mean.
    #[arg(long, default_value_t = 1e-5)]
    pub norm_tol: f64,
    /// Samples per arc of the exported net.
    #[arg(long, default_value_t = qnet_core::immersion::NET_SAMPLES)]
    pub samples: usize,
    /// Tolerance for the net check.
    #[arg(long, default_value_t = 5e-3)]
    pub net_tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct NetArgs {
    /// Number of arcs of the pumpkin net.
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    #[arg(long, default_value_t = qnet_core::immersion::NET_SAMPLES)]
    pub samples: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    /// Verify this net file instead of building a pumpkin net.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    /// interval, loop, pumpkin, flower or necklace.
    #[arg(long)]
    pub family: String,
    /// Edge lengths (one per pair for necklaces), comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub lengths: Vec<f64>,
    /// Number of eigenvalues λ_0, λ_1, ... to list.
    #[arg(long, default_value_t = 10)]
    pub count: usize,
}

/// Runs one parsed command line.
pub fn run(cli: &Cli) -> qnet_core::Result<Outcome> {
    match &cli.command {
        Command::Spectrum(a) => commands::spectrum(a),
        Command::Gradient(a) => commands::gradient(a),
        Command::Certify(a) => commands::certify(a),
        Command::Optimize(a) => commands::optimize(a),
        Command::Immerse(a) => commands::immerse(a),
        Command::Net(a) => commands::net(a),
        Command::Oracle(a) => commands::oracle(a),
    }
}

/// Sizes the global thread pool from `QG_THREADS` when it is set.
pub fn configure_threads(value: Option<&str>) -> qnet_core::Result<()> {
    let Some(v) = value else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| qnet_core::Error::Validation(format!("QG_THREADS must be a positive integer, got `{v}`")))?;
    // A second call in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}
