mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use config::{Format, PotentialArgs, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

/// Overlaps, non-orthogonality terms and packet norms for 1D scattering states.
#[derive(Debug, Parser)]
#[command(name = "nonortho", version)]
pub struct Cli {
    /// JSON run configuration; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output file (written atomically); stdout when absent
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// absolute and relative quadrature tolerance
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// worker threads for grid computations
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reflection and transmission amplitudes on a momentum grid
    Coeffs {
        #[command(flatten)]
        potential: PotentialArgs,
        /// momenta as start:end:n
        #[arg(long)]
        k: Option<String>,
    },
    /// Overlap of two states: δ weights, Δ, and optionally a finite interval
    Overlap {
        #[command(flatten)]
        potential: PotentialArgs,
        #[arg(long)]
        k1: Option<f64>,
        #[arg(long)]
        k2: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        x1: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        x2: Option<f64>,
    },
    /// Data behind the square-well Δ figures (1: slice and areas, 2: |Δ|², 3: Im Δ, 4: Re Δ)
    Figure {
        id: u8,
        #[command(flatten)]
        potential: PotentialArgs,
        /// how the fixed second momentum of figure 1 is read
        #[arg(long, value_enum, default_value = "scaled")]
        k2hat_convention: commands::K2hatConvention,
        /// grid points per axis
        #[arg(long)]
        n: Option<usize>,
    },
    /// Norm of a Gaussian packet and its rate of change over time
    Packet {
        #[command(flatten)]
        potential: PotentialArgs,
        #[command(flatten)]
        packet: commands::PacketArgs,
        /// times as start:end:n
        #[arg(long)]
        t: Option<String>,
        #[arg(long, value_enum, default_value = "direct")]
        method: commands::MethodArg,
    },
    /// Run invariant suites and report residuals
    Verify {
        #[arg(value_enum, default_value = "all")]
        suite: commands::Suite,
    },
    /// Cutoff overlaps against exponentially damped ones
    Regcmp {
        #[command(flatten)]
        potential: PotentialArgs,
        #[arg(long)]
        k1: Option<f64>,
        #[arg(long)]
        k2: Option<f64>,
        /// comma-separated cutoffs
        #[arg(long, value_delimiter = ',')]
        lambda: Option<Vec<f64>>,
        /// comma-separated damping rates
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
    },
}

/// Exit status plus message for anything that stops a run.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub const CONFIG: u8 = 2;
    pub const NONCONVERGENCE: u8 = 3;
    pub const INVARIANT: u8 = 4;

    pub fn config(message: impl Into<String>) -> Self {
        Self { code: Self::CONFIG, message: message.into() }
    }

    pub fn invariant(message: impl Into<String>) -> Self {
        Self { code: Self::INVARIANT, message: message.into() }
    }
}

impl From<nonortho::Error> for Failure {
    fn from(e: nonortho::Error) -> Self {
        let code = match e {
            nonortho::Error::NonConvergence { .. } => Self::NONCONVERGENCE,
            _ => Self::CONFIG,
        };
        Self { code, message: e.to_string() }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::config("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::config(format!("thread pool: {e}")))?;
    }
    let mut quad = cfg.quadrature.unwrap_or_default();
    if let Some(tol) = cli.tol {
        quad = quad.with_tol(tol);
    }
    quad.validate()?;
    let ctx = commands::Context {
        quad,
        format: cli.format.or(cfg.format).unwrap_or(Format::Csv),
        out: cli.out.clone().or(cfg.output_path.clone()),
        cfg,
    };
    commands::dispatch(&ctx, cli.command)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
