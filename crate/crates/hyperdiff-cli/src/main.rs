//! `hyperdiff`: hypergraph diffusion harness.
//!
//! Four subcommands — `generate`, `diffuse`, `train`, `check` — each driven
//! by a JSON config file. Flags only select the command, the config path,
//! the output directory, and an optional seed override; everything else
//! lives in the config so that a run is a pure function of (config, seed)
//! and reruns reproduce outputs byte for byte.
//!
//! Exit codes: 0 success, 1 property failure, 2 config error,
//! 3 runtime/numeric error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Outcome;
use config::load_config;

#[derive(Parser)]
#[command(name = "hyperdiff", version, about = "Hypergraph diffusion: data, solvers, models, checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// JSON config file driving the run.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Override every seed in the config with this value.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic datasets: community hypergraphs, uniform
    /// hypergraphs, or one-step diffusion pairs.
    Generate(CommonArgs),
    /// Run a diffusion solver on a dataset and record its trajectory.
    Diffuse(CommonArgs),
    /// Train a message-passing model (node classification or one-step
    /// diffusion regression).
    Train(CommonArgs),
    /// Run the verification suites and write a residual report.
    Check(CommonArgs),
}

fn dispatch(cli: Cli) -> hyperdiff::Result<Outcome> {
    match cli.command {
        Command::Generate(args) => {
            let mut cfg: config::GenerateConfig = load_config(&args.config)?;
            if let Some(seed) = args.seed {
                cfg.override_seed(seed);
            }
            commands::cmd_generate(&cfg, config_dir(&args), &args.out)
        }
        Command::Diffuse(args) => {
            let mut cfg: config::DiffuseConfig = load_config(&args.config)?;
            if let Some(seed) = args.seed {
                cfg.override_seed(seed);
            }
            commands::cmd_diffuse(&cfg, config_dir(&args), &args.out)
        }
        Command::Train(args) => {
            let mut cfg: config::TrainCommandConfig = load_config(&args.config)?;
            if let Some(seed) = args.seed {
                cfg.override_seed(seed);
            }
            commands::cmd_train(&cfg, config_dir(&args), &args.out)
        }
        Command::Check(args) => {
            let mut cfg: config::CheckConfig = load_config(&args.config)?;
            if let Some(seed) = args.seed {
                cfg.override_seed(seed);
            }
            commands::cmd_check(&cfg, &args.out)
        }
    }
}

/// Directory the config lives in; relative paths inside the config resolve
/// against it.
fn config_dir(args: &CommonArgs) -> &std::path::Path {
    args.config.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(std::path::Path::new("."))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(Outcome::Success) => ExitCode::from(0),
        Ok(Outcome::PropertyFailure) => {
            eprintln!("error: property checks failed");
            ExitCode::from(1)
        }
        Err(e) if e.is_config() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
