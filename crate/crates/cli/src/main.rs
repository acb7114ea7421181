//! `zerofid`: spectral checks of Γ, channel fidelities, bounds sweeps and shot estimates.

mod commands;
mod grid;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "zerofid", version, about = "0-fidelity and process fidelity of n-qubit channels")]
pub struct Cli {
    /// Qubit count (a list such as `1,2,3` for `sweep`).
    #[arg(long, global = true)]
    pub n: Option<String>,

    /// Seed for random channels, channel sweeps and shot sampling.
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,

    /// Tolerance override (check tolerance for `verify`, residual target for SDP solves).
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    /// Output file; written atomically.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Machine-readable single-line JSON output.
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the spectrum and witnesses of Γ and the bounds on random channels.
    Verify(VerifyArgs),
    /// Fidelities of a single channel.
    Fidelity(ChannelArgs),
    /// Extremal-fidelity SDPs over an (n, F0) grid, written as CSV.
    Sweep(SweepArgs),
    /// Shot-based estimate of the 0-fidelity.
    Estimate(EstimateArgs),
    /// Range of F0 attainable by CPTP maps.
    FeasibleRange(RangeArgs),
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 3)]
    pub n_max: usize,
    /// Random channels per qubit count.
    #[arg(long, default_value_t = 500)]
    pub channels: usize,
    /// Negative control: build Γ with the projector index shifted by one.
    #[arg(long, hide = true)]
    pub tamper_gamma: bool,
}

#[derive(Debug, Args)]
pub struct ChannelArgs {
    #[command(subcommand)]
    pub channel: ChannelSpec,
}

#[derive(Debug, Clone, Subcommand)]
pub enum ChannelSpec {
    /// χ = (1−p)|φ⟩⟨φ| + p·I/d²
    Depolarizing {
        #[arg(long)]
        p: f64,
    },
    /// Haar-random Stinespring channel seeded by `--seed`.
    Random {
        #[arg(long, default_value_t = 1)]
        env_dim: usize,
    },
    /// The identity channel.
    Identity,
    /// Channel JSON file `{n, choi_real, choi_imag}`.
    File { path: PathBuf },
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// F0 grid as `start:end:step` or a comma list (default 0.90:1.00:0.01).
    #[arg(long)]
    pub f0: Option<String>,
    #[arg(long, default_value_t = 200_000)]
    pub max_iter: usize,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long, default_value_t = 10_000)]
    pub shots: u64,
    #[command(subcommand)]
    pub channel: ChannelSpec,
}

#[derive(Debug, Args)]
pub struct RangeArgs {
    #[arg(long, default_value_t = 200_000)]
    pub max_iter: usize,
}

/// Input rejected before any computation started (exit status 1).
#[derive(Debug)]
pub struct ValidationError(pub String);

impl std::fmt::Display for ValidationError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ValidationError {}

/// Computation finished but at least one check failed (exit status 2).
#[derive(Debug)]
pub struct CheckFailure(pub String);

impl std::fmt::Display for CheckFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CheckFailure {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ValidationError>().is_some() {
        return 1;
    }
    if let Some(e) = err.downcast_ref::<zerofid::Error>() {
        use zerofid::Error::*;
        return match e {
            Range { .. } | Parse(_) | Validity(_) | Shape(_) | InfeasibleF0 { .. } => 1,
            _ => 2,
        };
    }
    2
}

fn is_broken_pipe(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        e.downcast_ref::<std::io::Error>()
            .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) if is_broken_pipe(&err) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
