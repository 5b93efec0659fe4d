//! `weakkam` batch front end.
//!
//! Exit status: 0 on success, 2 for configuration or domain errors, 3 when a
//! quadrature or root solve misses its tolerance, 1 for I/O failures.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use weakkam_core::Error;

use crate::commands::RunError;
use crate::config::{Command, Overrides, RunConfig};

#[derive(Parser)]
#[command(
    name = "weakkam",
    version,
    about = "Approximate weak KAM solutions for 1-D mechanical Hamiltonians"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Profile of γ_k, u_k, σ_k and their k = ∞ counterparts
    Profile(Overrides),
    /// E₁/E₂ bound sweep over k
    Sweep(Overrides),
    /// Lifted, effective and Hamiltonian flows with the gap series
    Flows(Overrides),
    /// Periods and pairings at the separatrix action
    Separatrix(Overrides),
    /// Separable n-dimensional product report
    Ndim(Overrides),
}

const EXIT_IO: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_ACCURACY: u8 = 3;

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("WEAKKAM_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("WEAKKAM_THREADS must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = match cli.command {
        Sub::Profile(o) => (Command::Profile, o),
        Sub::Sweep(o) => (Command::Sweep, o),
        Sub::Flows(o) => (Command::Flows, o),
        Sub::Separatrix(o) => (Command::Separatrix, o),
        Sub::Ndim(o) => (Command::Ndim, o),
    };
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_INVALID);
    }

    let file = match &flags.config {
        Some(path) => match config::load_config(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_INVALID);
            }
        },
        None => RunConfig::default(),
    };
    let job = match config::resolve(command, file, flags) {
        Ok(j) => j,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INVALID);
        }
    };

    let outputs = match commands::run(&job) {
        Ok(o) => o,
        Err(RunError::Numeric(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(match e {
                Error::Accuracy { .. } | Error::Bracket { .. } => EXIT_ACCURACY,
                Error::Domain(_) | Error::Degenerate(_) => EXIT_INVALID,
            });
        }
        Err(RunError::Io(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_IO);
        }
    };

    if let Err(e) = std::fs::create_dir_all(&job.out_dir) {
        eprintln!("error: cannot create {}: {e}", job.out_dir.display());
        return ExitCode::from(EXIT_IO);
    }
    for (name, bytes) in outputs {
        let path = job.out_dir.join(name);
        if let Err(e) = std::fs::write(&path, bytes) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(EXIT_IO);
        }
        println!("{}", path.display());
    }
    ExitCode::SUCCESS
}
