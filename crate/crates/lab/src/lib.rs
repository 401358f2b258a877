//! Experiment runner: configuration, eigendata cache, dispatch and persistence.

pub mod cache;
pub mod commands;
pub mod config;
pub mod output;

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Subcommand;

pub use config::ExperimentConfig;
pub use output::RunManifest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Eigenvalues with boundary-mass and residual diagnostics.
    Spectrum,
    /// Log-log slope of λ_j against j.
    WeylLaw,
    /// Spatial and frequency decay exponents of low modes.
    Agmon,
    /// Gelfand-Shilov weight rates of the semigroup acting on noise.
    Smoothing,
    /// Measured weighted seminorms against the bounds implied by the weights.
    Seminorms,
    /// Eigen-coefficient decay of a smoothed datum.
    Coefficients,
    /// Thick-set construction and thickness verification.
    Thickset,
    /// Spectral inequality constants on a thick set.
    SpectralConstant,
    /// High-mode dissipation against its closed-form bound.
    Dissipation,
    /// Penalized HUM control on a thick set.
    Control,
    /// Control cost against horizon with the blow-up fit.
    CostSweep,
    /// Staged Lebeau-Robbiano control.
    LrControl,
    /// Commutator tower, conjugation identity and symbol-class ratios.
    Commutator,
    /// Gårding lower-bound probe for the conjugated kinetic form.
    Garding,
    /// Anti-Wick resolution, positivity and Weyl-symbol checks.
    Antiwick,
}

impl Command {
    pub const ALL: [Command; 15] = [
        Command::Spectrum,
        Command::WeylLaw,
        Command::Agmon,
        Command::Smoothing,
        Command::Seminorms,
        Command::Coefficients,
        Command::Thickset,
        Command::SpectralConstant,
        Command::Dissipation,
        Command::Control,
        Command::CostSweep,
        Command::LrControl,
        Command::Commutator,
        Command::Garding,
        Command::Antiwick,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::WeylLaw => "weyl-law",
            Command::Agmon => "agmon",
            Command::Smoothing => "smoothing",
            Command::Seminorms => "seminorms",
            Command::Coefficients => "coefficients",
            Command::Thickset => "thickset",
            Command::SpectralConstant => "spectral-constant",
            Command::Dissipation => "dissipation",
            Command::Control => "control",
            Command::CostSweep => "cost-sweep",
            Command::LrControl => "lr-control",
            Command::Commutator => "commutator",
            Command::Garding => "garding",
            Command::Antiwick => "antiwick",
        }
    }

    pub fn needs_eigensystem(self) -> bool {
        !matches!(self, Command::Thickset | Command::Commutator | Command::Garding | Command::Antiwick)
    }
}

#[derive(Debug)]
pub enum RunError {
    /// Unreadable or invalid configuration; nothing was computed.
    Config(String),
    Compute { stage: String, source: shubin_core::Error },
    Io { path: PathBuf, source: std::io::Error },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            _ => 3,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        RunError::Io { path: path.to_path_buf(), source }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(msg) => write!(f, "config error: {msg}"),
            RunError::Compute { stage, source } => write!(f, "compute error in {stage}: {source}"),
            RunError::Io { path, source } => write!(f, "i/o error at {}: {source}", path.display()),
        }
    }
}

impl std::error::Error for RunError {}

#[derive(Debug, Clone)]
pub struct RunArgs {
    pub command: Command,
    pub config: PathBuf,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    /// Defaults to `<out>/cache`.
    pub cache: Option<PathBuf>,
}

/// Parses and validates the config, runs the command and writes all outputs.
pub fn run(args: &RunArgs) -> Result<RunManifest, RunError> {
    let started = Instant::now();
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| RunError::Config(format!("cannot read {}: {e}", args.config.display())))?;
    if text.trim().is_empty() {
        return Err(RunError::Config(format!("{} is empty", args.config.display())));
    }
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate(args.command)?;
    if args.threads == Some(0) {
        return Err(RunError::Config("--threads must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads.unwrap_or(0))
        .build()
        .map_err(|e| RunError::Config(format!("thread pool: {e}")))?;
    std::fs::create_dir_all(&args.out).map_err(|e| RunError::io(&args.out, e))?;
    let cache_dir = args.cache.clone().unwrap_or_else(|| args.out.join("cache"));
    let mut ctx = commands::Context::new(cfg, cache_dir);
    let product = pool.install(|| commands::dispatch(args.command, &mut ctx))?;
    output::persist(args, &ctx, product, started)
}
