//! `envforge`: coefficient reports, envelope and direct runs, convergence
//! studies and modulational-instability scans from a TOML config.
//!
//! Exit codes: 0 ok, 1 I/O, 2 config, 3 singular harmonic or degenerate
//! carrier, 4 blow-up, 5 unreliable convergence fit.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "envforge", version, about = "Envelope equations for weakly nonlinear dispersive PDEs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the carrier, NLS and higher-order coefficients as JSON.
    Coeffs { config: PathBuf },
    /// Integrate the envelope equations.
    SimulateEnvelope(RunArgs),
    /// Integrate the toy PDE from a reconstructed envelope.
    SimulateDirect(RunArgs),
    /// Run the eps-convergence study against the direct solver.
    Validate(RunArgs),
    /// Sweep sideband growth rates over (a, q).
    MiScan(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    config: PathBuf,
    /// Overrides `output.dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var("ENVFORGE_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("ENVFORGE_THREADS must be a positive integer, got {v:?}"))),
        },
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let go = |args: RunArgs, f: fn(&RunConfig, &str, &std::path::Path) -> Result<(), CliError>| {
        let (cfg, text) = RunConfig::load(&args.config)?;
        let dir = args.out.unwrap_or_else(|| cfg.output.dir.clone());
        f(&cfg, &text, &dir)
    };
    match cli.command {
        Command::Coeffs { config } => commands::coeffs(&RunConfig::load(&config)?.0),
        Command::SimulateEnvelope(a) => go(a, commands::simulate_envelope),
        Command::SimulateDirect(a) => go(a, commands::simulate_direct),
        Command::Validate(a) => go(a, commands::validate),
        Command::MiScan(a) => go(a, commands::mi_scan),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = thread_cap().and_then(|cap| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cap {
            builder = builder.num_threads(n);
        }
        let pool = builder
            .build()
            .map_err(|e| CliError::Config(format!("cannot start thread pool: {e}")))?;
        pool.install(|| run(cli))
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("envforge: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
