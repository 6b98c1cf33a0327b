use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use photosub_cli::config::{Overrides, RunConfig};
use photosub_cli::error::CliResult;
use photosub_cli::{accept, crossover, cuts, pipeline, sweep};

#[derive(Parser)]
#[command(name = "photosub", version, about = "Photon-subtracted two-mode squeezing: sweeps, cuts and tomography")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags below override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Photon-number cutoff per mode.
    #[arg(long, global = true)]
    cutoff: Option<usize>,
    /// Keep the measured homodyne efficiency and excess noise.
    #[arg(long, global = true)]
    uncorrected: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Initial and conditioned negativity over squeezing and pick-off reflectivity.
    Sweep,
    /// Squeezing at which subtraction stops increasing the negativity.
    Crossover,
    /// Two-dimensional Wigner cuts for the preset parameter points.
    WignerCuts,
    /// Simulate homodyne data and reconstruct it by back-projection, MaxLik and moments.
    Pipeline,
    /// Run the acceptance criteria.
    Accept {
        /// Comma-separated criterion numbers; all when omitted.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

const NOT_CONVERGED: u8 = 3;
const CRITERIA_FAILED: u8 = 1;

fn run(cli: Cli) -> CliResult<u8> {
    let c = cli.common;
    let overrides = Overrides {
        seed: c.seed,
        out: c.out,
        cutoff: c.cutoff,
        uncorrected: c.uncorrected,
    };
    let cfg = RunConfig::load(c.config.as_deref(), &overrides)?;
    let status = match cli.command {
        Command::Sweep => {
            let rows = sweep::run(&cfg)?;
            let bad = rows.iter().filter(|r| !r.converged).count();
            eprintln!("sweep: {} rows, {bad} not converged -> {}", rows.len(), cfg.out.join("sweep.csv").display());
            if bad > 0 {
                NOT_CONVERGED
            } else {
                0
            }
        }
        Command::Crossover => {
            let results = crossover::run(&cfg)?;
            for r in &results {
                match r.crossover_db {
                    Some(db) => eprintln!("xi = {}: crossover at {db:.3} dB", r.xi),
                    None => eprintln!("xi = {}: no crossover in the scanned range", r.xi),
                }
            }
            if results.iter().all(|r| r.converged) {
                0
            } else {
                NOT_CONVERGED
            }
        }
        Command::WignerCuts => {
            for s in cuts::run(&cfg)? {
                eprintln!("{}: Wc(0) = {:.4}", s.preset.label(), s.wc_origin);
            }
            0
        }
        Command::Pipeline => {
            let report = pipeline::run(&cfg)?;
            for row in &report.comparison {
                let show = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
                eprintln!(
                    "{:<24} truth {:>8.4}  radon {:>8}  maxlik {:>8}  moments {:>8}",
                    row.quantity,
                    row.truth,
                    show(row.radon),
                    show(row.maxlik),
                    show(row.moments)
                );
            }
            if report.converged {
                0
            } else {
                NOT_CONVERGED
            }
        }
        Command::Accept { only } => {
            let results = if only.is_empty() {
                accept::run(&cfg)?
            } else {
                accept::run_selected(&cfg, &only)?
            };
            if results.iter().all(|c| c.passed) {
                0
            } else {
                CRITERIA_FAILED
            }
        }
    };
    Ok(status)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
