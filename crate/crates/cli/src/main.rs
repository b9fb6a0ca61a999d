//! `pdeloopgain` — reproducible runs of the PDE loop simulators and
//! stability certificates from a single JSON config.
//!
//! Exit codes: 0 success, 1 config/IO error, 2 certificate failure
//! (certify/verify), 3 verification violation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pdeloopgain_core::config::{CommandKind, RunConfig};
use pdeloopgain_core::runner::execute;

#[derive(Parser)]
#[command(
    name = "pdeloopgain",
    about = "Simulation and sup-norm stability certification of parabolic-hyperbolic PDE loops",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the stability certificate of the configured model.
    Certify(RunArgs),
    /// Simulate the configured model and write trajectory CSVs.
    Simulate(RunArgs),
    /// Certify, simulate, fit the decay rate and check the ISS bound.
    Verify(RunArgs),
    /// Tabulate the magnification lower-bound curve g(s).
    GainCurve(RunArgs),
    /// Re-run the certificate (and optional simulation) over a parameter axis.
    Sweep(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for artifacts (default: current directory).
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Also write the full space-time profile CSV.
    #[arg(long)]
    full_profiles: bool,
}

fn run() -> Result<i32, String> {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::Certify(a) => (CommandKind::Certify, a),
        Command::Simulate(a) => (CommandKind::Simulate, a),
        Command::Verify(a) => (CommandKind::Verify, a),
        Command::GainCurve(a) => (CommandKind::GainCurve, a),
        Command::Sweep(a) => (CommandKind::Sweep, a),
    };
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| format!("cannot read {}: {e}", args.config.display()))?;
    let mut config = RunConfig::from_json(&text).map_err(|e| e.to_string())?;
    if args.full_profiles {
        config.output.full_profiles = true;
    }
    let outcome = execute(kind, &config, &args.out).map_err(|e| e.to_string())?;
    for path in &outcome.artifacts {
        eprintln!("wrote {}", path.display());
    }
    Ok(outcome.exit_code)
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
