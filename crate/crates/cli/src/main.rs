//! `tqd3d`: regenerate pulse schedules, single runs, sweeps and the
//! acceptance report from a flat config file.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use tqd_core::pulses::PulseKind;

mod commands;
mod config;
mod error;

use commands::Figure;
use config::RunConfig;
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "tqd3d", version, about = "Transitionless-driving cavity QED simulations")]
struct Cli {
    /// Flat `key = value` config file; `TQD3D_<KEY>` variables override it.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory (overrides the `out` key).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads for sweeps.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Method {
    Stirap,
    Tqd,
    TqdFitted,
}

impl From<Method> for PulseKind {
    fn from(m: Method) -> Self {
        match m {
            Method::Stirap => PulseKind::Stirap,
            Method::Tqd => PulseKind::TqdExact,
            Method::TqdFitted => PulseKind::TqdFitted,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample the STIRAP, exact TQD and fitted TQD pulses.
    Pulses,
    /// Run one simulation and print `final_fidelity=<value>`.
    Simulate {
        #[arg(long, value_enum)]
        method: Method,
        /// Lindblad dynamics on the full space with the configured κ and γ.
        #[arg(long, conflicts_with = "closed")]
        open: bool,
        /// Pure-state dynamics on the eight-state subspace (default).
        #[arg(long)]
        closed: bool,
    },
    /// Regenerate one figure's data, plot script and manifest.
    Sweep {
        #[arg(long, value_enum)]
        figure: Figure,
    },
    /// Run every acceptance criterion and report measured values.
    Verify,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = RunConfig::load(cli.config.as_deref(), |var| std::env::var(var).ok())?;
    if let Some(out) = cli.out {
        config.out = out;
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {n} threads: {e}")))?;
    }
    match cli.command {
        Command::Pulses => commands::pulses(&config),
        Command::Simulate { method, open, .. } => commands::simulate_cmd(&config, method.into(), open),
        Command::Sweep { figure } => commands::sweep(&config, figure),
        Command::Verify => commands::verify_cmd(&config),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
