//! Experiment harness CLI: each experiment regenerates one analytical
//! figure dataset as CSV files plus a `metadata.json` sidecar that fully
//! describes the run (and can be fed back via `--config` for an exact
//! rerun).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod experiments;

#[derive(Parser)]
#[command(
    name = "finite-bayes",
    version,
    about = "Exact Bayesian inference over finite latent sets: experiment harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its CSVs plus metadata.json.
    Run {
        /// Experiment id (see `list`).
        #[arg(long)]
        experiment: String,
        /// JSON config: either a bare config object or the metadata.json of
        /// a previous run (reproduces that run exactly).
        #[arg(long)]
        config: Option<PathBuf>,
        /// RNG seed; overrides both the config file and the default.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory [default: out/<experiment-id>].
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for internal parallelism [default: all cores].
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// List the available experiments.
    List,
    /// Show an experiment's default configuration and output files.
    Describe {
        /// Experiment id (see `list`).
        experiment: String,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run {
            experiment,
            config,
            seed,
            out,
            jobs,
        } => {
            if let Some(jobs) = jobs {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(jobs)
                    .build_global()?;
            }
            experiments::run(&experiment, config.as_deref(), seed, out.as_deref(), jobs)
        }
        Command::List => {
            experiments::list();
            Ok(())
        }
        Command::Describe { experiment } => experiments::describe(&experiment),
    }
}
