//! `resopack`: resonance poles, spectra and transmitted wave packets for
//! layered 1-D potentials.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::EvolveArgs;
use crate::config::{Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "resopack", version, about = "Resonance expansions and transmitted wave packets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Reference system: sb, db or qb
    #[arg(long)]
    preset: Option<String>,
    /// TOML file with the system, packet and pole-search settings
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, also holds the catalog cache
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed of the pole-search restarts
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            preset: self.preset.clone(),
            config: self.config.clone(),
            out: self.out.clone(),
            seed: self.seed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sweep (or reload) the pole catalog and print the first resonances
    Poles {
        #[command(flatten)]
        common: Common,
    },
    /// Exact transmission against truncated pole expansions
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// Truncations to compare, e.g. 10,100,1000
        #[arg(long, value_delimiter = ',')]
        poles: Vec<usize>,
    },
    /// Transmitted density against time at a fixed detector
    Evolve {
        #[command(flatten)]
        common: Common,
        /// Detector position in nm or as a multiple of L (2L, 2e5L)
        #[arg(long, default_value = "2L")]
        xd: String,
        /// End of the time window in units of hbar / Gamma_min
        #[arg(long)]
        tmax: Option<f64>,
        #[arg(long, default_value_t = 400)]
        samples: usize,
        /// Add a brute-force quadrature column
        #[arg(long)]
        oracle: bool,
        /// Number of pole pairs (defaults to the whole catalog)
        #[arg(long)]
        poles: Option<usize>,
    },
    /// Density ratio zeta against eta at fixed times
    Reconstruct {
        #[command(flatten)]
        common: Common,
        /// Packet-centre positions x0 defining the times t0, e.g. 2e3L,2e5L
        #[arg(long, value_delimiter = ',')]
        t0: Vec<String>,
    },
    /// Run the acceptance checks for a preset
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

pub enum Failure {
    Usage(anyhow::Error),
    Numerical(anyhow::Error),
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let resolve = |c: &Common| RunConfig::resolve(&c.overrides()).map_err(Failure::Usage);
    match cli.command {
        Command::Poles { common } => commands::poles(&resolve(&common)?).map(|_| true),
        Command::Spectrum { common, poles } => commands::spectrum(&resolve(&common)?, &poles).map(|_| true),
        Command::Evolve { common, xd, tmax, samples, oracle, poles } => {
            let args = EvolveArgs { x_d: xd, t_max: tmax, samples, oracle, truncation: poles };
            commands::evolve(&resolve(&common)?, &args).map(|_| true)
        }
        Command::Reconstruct { common, t0 } => commands::reconstruct(&resolve(&common)?, &t0).map(|_| true),
        Command::Validate { common } => commands::validate(&resolve(&common)?),
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
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("numerical failure: {e:#}");
            ExitCode::from(2)
        }
    }
}
