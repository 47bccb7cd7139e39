//! `stable-em`: runs the sampling, density, parametrix and convergence
//! experiments and writes CSV/JSON outputs with a digest manifest.
//!
//! Exit codes: 0 when every check passes, 2 when a check fails or the
//! numerics break down, 1 for usage, configuration and I/O errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub const COMMANDS: [&str; 10] = [
    "sample",
    "density",
    "theta",
    "parametrix",
    "krylov",
    "khasminskii",
    "driftinc",
    "converge",
    "sweep",
    "selftest",
];

/// Environment variable consulted when `--threads` is absent.
pub const THREADS_ENV: &str = "STABLE_EM_THREADS";

#[derive(Debug, Parser)]
#[command(name = "stable-em", version, about = "Euler-Maruyama experiments for SDEs driven by stable noise")]
#[command(allow_negative_numbers = true)]
pub struct Cli {
    /// TOML file with `[common]` and per-command sections.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (default `out/<command>`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: $STABLE_EM_THREADS, then all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    pub print_config: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw subordinator values or stable increments.
    Sample(SampleFlags),
    /// Heat kernel by quadrature or Monte Carlo, or the kernel inequality checks.
    Density(DensityFlags),
    /// Monte Carlo estimate of the Gaussian-mixture factor Theta.
    Theta(ThetaFlags),
    /// Discrete parametrix series for the one-dimensional chain.
    Parametrix(ParametrixFlags),
    /// Krylov-type occupation estimate.
    Krylov(KrylovFlags),
    /// Exponential (Khasminskii) moment estimate.
    Khasminskii(KhasminskiiFlags),
    /// Time-discretisation error of the drift along the chain.
    Driftinc(DriftincFlags),
    /// Strong convergence rate against a fine reference chain.
    Converge(ConvergeFlags),
    /// Convergence rate over a grid of stability and Hölder indices.
    Sweep(SweepFlags),
    /// Fast internal consistency checks of every module.
    Selftest(SelftestFlags),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Sample(_) => "sample",
            Command::Density(_) => "density",
            Command::Theta(_) => "theta",
            Command::Parametrix(_) => "parametrix",
            Command::Krylov(_) => "krylov",
            Command::Khasminskii(_) => "khasminskii",
            Command::Driftinc(_) => "driftinc",
            Command::Converge(_) => "converge",
            Command::Sweep(_) => "sweep",
            Command::Selftest(_) => "selftest",
        }
    }
}

#[derive(Debug, Default, Args, Serialize)]
pub struct SampleFlags {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// `increment` or `subordinator`.
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Args, Serialize)]
pub struct DensityFlags {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub t: Option<f64>,
    /// Evaluation points, `dim` coordinates each.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Option<Vec<f64>>,
    /// `quad` (one dimension) or `mc`.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Kernel inequality checks to run instead: `all` or a list of names.
    #[arg(long, value_delimiter = ',')]
    pub bounds: Option<Vec<String>>,
}

#[derive(Debug, Default, Args, Serialize)]
pub struct ThetaFlags {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub r: Option<Vec<f64>>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Args, Serialize)]
pub struct ParametrixFlags {
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Drift spec, e.g. `sin`, `zero`, `const:0.5`, `holder:0.6`.
    #[arg(long)]
    pub drift: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub refinement: Option<usize>,
    /// Monte Carlo paths for the histogram comparison (0 skips it).
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub range: Option<Vec<f64>>,
    #[arg(long)]
    pub floor: Option<f64>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Args, Serialize)]
pub struct KrylovFlags {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub drift: Option<String>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    /// `gaussian` or `indicator`.
    #[arg(long)]
    pub function: Option<String>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub spans: Option<Vec<f64>>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub substeps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Args, Serialize)]
pub struct KhasminskiiFlags {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub drift: Option<String>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub function: Option<String>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    /// Krylov constant; fitted from a Krylov run when absent.
    #[arg(long)]
    pub krylov_constant: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub spans: Option<Vec<f64>>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Args, Serialize)]
pub struct DriftincFlags {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub drift: Option<String>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Args, Serialize)]
pub struct ConvergeFlags {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub drift: Option<String>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    /// Reference step (default: finest delta / 64).
    #[arg(long)]
    pub delta_ref: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Args, Serialize)]
pub struct SweepFlags {
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub betas: Option<Vec<f64>>,
    /// `holder` or `weierstrass`.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Args, Serialize)]
pub struct SelftestFlags {
    #[arg(long)]
    pub seed: Option<u64>,
}

fn thread_count(flag: Option<usize>) -> anyhow::Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| anyhow::anyhow!("{THREADS_ENV} must be a non-negative integer, got {v:?}")),
        _ => Ok(None),
    }
}

/// 2 for numerical breakdowns, 1 for everything else.
fn error_code(err: &anyhow::Error) -> u8 {
    use stable_em::Error as E;
    match err.downcast_ref::<E>() {
        Some(E::Unstable(_) | E::NonFiniteDrift { .. } | E::Quadrature { .. }) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = thread_count(cli.threads).and_then(|threads| {
        if let Some(n) = threads.filter(|n| *n > 0) {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
        }
        commands::run(&cli)
    });
    match result {
        Ok(None) | Ok(Some(true)) => ExitCode::SUCCESS,
        Ok(Some(false)) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(error_code(&e))
        }
    }
}
