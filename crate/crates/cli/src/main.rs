//! `mtffm`: design, verify and export multi-tone feedback FM waveforms.
//!
//! Exit codes: 0 on success, 2 for malformed configuration or arguments,
//! 3 for numerical, I/O or identity-check failures.

mod commands;
mod config;
mod error;
mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::DesignConfig;
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "mtffm", version, about = "Multi-tone feedback FM waveform design")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize the configured design and write CSV artifacts.
    Design { config: PathBuf },
    /// Run the identity suite on the configured design (defaults if omitted).
    Verify {
        config: Option<PathBuf>,
        /// Add 1e-3 to Kapteyn coefficient b_M before checking (fault injection).
        #[arg(long, value_name = "M")]
        corrupt_coefficient: Option<usize>,
    },
    /// Write |chi| of the configured design on a (tau, nu) grid.
    AfSurface {
        config: PathBuf,
        #[arg(long, default_value_t = 129)]
        tau_points: usize,
        #[arg(long, default_value_t = 65)]
        nu_points: usize,
        /// Doppler half-span in Hz (default 10/T).
        #[arg(long, value_name = "HZ")]
        nu_max: Option<f64>,
    },
    /// Write the sampled waveform, modulation, phase and line coefficients.
    ExportWaveform { config: PathBuf },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Design { config } => commands::design(&DesignConfig::load(&config)?),
        Command::Verify { config, corrupt_coefficient } => {
            let cfg = match config {
                Some(path) => DesignConfig::load(&path)?,
                None => DesignConfig::default(),
            };
            verify::verify(&cfg, corrupt_coefficient)
        }
        Command::AfSurface { config, tau_points, nu_points, nu_max } => {
            let cfg = DesignConfig::load(&config)?;
            let nu_max = nu_max.unwrap_or(10.0 / cfg.duration);
            commands::af_surface(&cfg, tau_points, nu_points, nu_max)
        }
        Command::ExportWaveform { config } => commands::export_waveform(&DesignConfig::load(&config)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mtffm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
