//! Command-line front end: `coalition run <config>` and `coalition verify <manifest>`.

pub mod config;
pub mod experiments;
pub mod manifest;
pub mod svg;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use config::{ExperimentConfig, ExperimentKind, Format};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "COALITION_THREADS";

#[derive(Debug, Parser)]
#[command(name = "coalition", version, about = "Coalition public-goods game experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment described by a TOML config file.
    Run {
        config: PathBuf,
        /// Output directory (overrides `experiment.out`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated subset of csv,json,svg.
        #[arg(long, value_delimiter = ',')]
        format: Option<Vec<String>>,
        /// Experiment name (overrides `experiment.name`).
        #[arg(long)]
        experiment: Option<String>,
    },
    /// Recompute the outputs listed in a manifest and compare checksums.
    Verify { manifest: PathBuf },
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{value}`")))?;
    // A pool may already exist when embedded; keep it.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            format,
            experiment,
        } => {
            let mut cfg = ExperimentConfig::from_path(&config)?;
            if let Some(name) = experiment {
                cfg.experiment.name = Some(ExperimentKind::parse(&name)?);
            }
            if let Some(s) = seed {
                cfg.experiment.seed = Some(s);
            }
            if let Some(list) = format {
                cfg.experiment.formats = Some(list.iter().map(|f| Format::parse(f)).collect::<Result<_>>()?);
            }
            if let Some(dir) = out {
                // Command-line paths are relative to the working directory.
                cfg.experiment.out = Some(std::env::current_dir().map_err(|e| Error::io(".", e))?.join(dir));
            }
            let (path, manifest) = manifest::run(&cfg)?;
            println!("{} outputs, manifest {}", manifest.outputs.len(), path.display());
            Ok(())
        }
        Command::Verify { manifest } => {
            let report = manifest::verify(&manifest)?;
            for (path, expected, actual) in &report.mismatched {
                println!("mismatch {path} expected={expected} actual={actual}");
            }
            if report.ok() {
                println!("verified {} outputs", report.matched);
                Ok(())
            } else {
                Err(Error::InvalidState(format!(
                    "{} of {} outputs differ",
                    report.mismatched.len(),
                    report.matched + report.mismatched.len()
                )))
            }
        }
    }
}

/// Process entry point; returns the exit status.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error kind={} code={} message={msg}", e.kind(), e.exit_code());
            e.exit_code()
        }
    }
}
