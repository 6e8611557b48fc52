//! Command-line front end: `crdf <command> --config <path> [--out <dir>] [--threads K]`.
//!
//! Exit status is 0 on success, 1 when a reported check fails and 2 on
//! invalid input or any other error.

mod config;
mod format;
mod run;

pub use config::{
    load_config, parse_config, Experiment, ExperimentConfig, InitKind, KernelSource, OracleConfig, OutputLawSpec,
    SimConfig, SolverConfig, SCHEMA_VERSION,
};
pub use format::sig12;
pub use run::{curve_csv, run, sim_csv, Command, Outcome, CURVE_HEADER, SIM_HEADER};

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

#[derive(Debug, Parser)]
#[command(name = "crdf", version, about = "Causal rate distortion on finite alphabets")]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    #[arg(long)]
    pub config: PathBuf,
    /// Defaults to the config `out` field, then `out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    pub threads: Option<usize>,
}

pub fn execute(args: &Args) -> ExitCode {
    let cfg = match load_config(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let base = args.config.parent().map(PathBuf::from).unwrap_or_default();
    let out = args
        .out
        .clone()
        .or_else(|| cfg.out.as_ref().map(|o| base.join(o)))
        .unwrap_or_else(|| PathBuf::from("out"));
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = args.threads {
        if k == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        pool = pool.num_threads(k);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| run(args.command, &cfg, &base, &out)) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

pub fn main() -> ExitCode {
    execute(&Args::parse())
}
