//! Batch front end for the `idt-core` experiments.
//!
//! `idt-lab <scenario> --config path.json [--seed S] [--workers N] [--out dir]`
//! reads one JSON document, runs the scenario and writes `report.json`,
//! `metadata.json` and any `data_*.csv` files into the output directory.
//! Exit status is 0 on pass, 2 on a statistical reject and 1 on error.

pub mod config;
pub mod emit;
pub mod error;
pub mod run;

use std::path::PathBuf;

use clap::Parser;

pub use config::{ExperimentConfig, Scenario};
pub use error::CliError;
pub use run::{run_experiment, Outcome};

/// Environment variable that overrides the config seed (but not `--seed`).
pub const SEED_ENV: &str = "IDT_SEED";

#[derive(Debug, Clone, Parser)]
#[command(name = "idt-lab", version, about = "Run IDT process experiments from a JSON config")]
pub struct Args {
    /// Which experiment to run.
    #[arg(value_enum)]
    pub scenario: Scenario,
    /// Path of the JSON config.
    #[arg(long)]
    pub config: PathBuf,
    /// Master seed; overrides IDT_SEED and the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for the sampling core; results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory (defaults to the config's output.path, then ".").
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Resolves the seed (`--seed`, then `env_seed`, then the config) and runs.
pub fn run(args: &Args, env_seed: Option<&str>) -> Result<Outcome, CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let (cfg, raw) = ExperimentConfig::parse(&text, args.scenario)?;
    let (seed, source) = match (args.seed, env_seed) {
        (Some(s), _) => (s, "flag"),
        (None, Some(v)) => {
            let s = v.trim().parse::<u64>().map_err(|_| CliError::Config(format!("{SEED_ENV}={v} is not a u64")))?;
            (s, "env")
        }
        (None, None) => (cfg.seed(), "config"),
    };
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output().path.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    idt_core::parallel::with_workers(args.workers, || run_experiment(&cfg, &raw, seed, source, &out))
}
