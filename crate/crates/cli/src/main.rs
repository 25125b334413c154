//! Batch experiment runner for the graph-contrastive recommendation engine.

mod artifacts;
mod commands;
mod config;

use anyhow::Result;
use clap::{Parser, Subcommand};

use commands::centrality::CentralityArgs;
use commands::evaluate::EvaluateArgs;
use commands::fetch::FetchArgs;
use commands::noise::NoiseArgs;
use commands::perturb::PerturbArgs;
use commands::robustness::RobustnessArgs;
use commands::theory::TheoryArgs;
use config::Overrides;

#[derive(Parser)]
#[command(
    name = "sgcl",
    version,
    about = "Train, evaluate, and stress-test a graph-contrastive recommender"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write checkpoint, history, metrics, and manifest.
    Train(Overrides),
    /// Re-score a saved checkpoint against the split recorded in a manifest.
    Evaluate(EvaluateArgs),
    /// Per-stratum view-corruption diagnostics on embedding similarity.
    AnalyzeNoise(NoiseArgs),
    /// Betweenness scores and importance strata for the interaction graph.
    Centrality(CentralityArgs),
    /// Retrain under fake-edge injection or sparsification grids.
    PerturbExperiment(PerturbArgs),
    /// Compare contrastive objectives under fabricated training edges.
    Robustness(RobustnessArgs),
    /// Run the executable noise-tolerance checks; nonzero exit on failure.
    TheoryCheck(TheoryArgs),
    /// One seeded training run per hyperparameter grid point.
    Sweep(Overrides),
    /// Download, verify, extract, and cache the ratings archive.
    FetchData(FetchArgs),
    /// Write the configured synthetic block-model graph as a dataset.
    Synth(Overrides),
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => {
            let cfg = args.effective_config()?;
            cfg.validate()?;
            commands::train::run(&cfg)
        }
        Command::Evaluate(args) => commands::evaluate::run(&args),
        Command::AnalyzeNoise(args) => {
            let cfg = args.common.effective_config()?;
            cfg.validate()?;
            commands::noise::run(&cfg, &args)
        }
        Command::Centrality(args) => {
            let cfg = args.common.effective_config()?;
            cfg.validate()?;
            commands::centrality::run(&cfg, &args)
        }
        Command::PerturbExperiment(args) => {
            let cfg = args.common.effective_config()?;
            cfg.validate()?;
            commands::perturb::run(&cfg, &args)
        }
        Command::Robustness(args) => {
            let cfg = args.common.effective_config()?;
            cfg.validate()?;
            commands::robustness::run(&cfg, &args)
        }
        Command::TheoryCheck(args) => {
            let cfg = args.common.effective_config()?;
            cfg.validate()?;
            commands::theory::run(&cfg, &args)
        }
        Command::Sweep(args) => {
            let cfg = args.effective_config()?;
            cfg.validate()?;
            commands::sweep::run(&cfg)
        }
        Command::FetchData(args) => {
            let cfg = args.common.effective_config()?;
            cfg.validate()?;
            commands::fetch::run(&cfg, &args)
        }
        Command::Synth(args) => {
            let cfg = args.effective_config()?;
            cfg.validate()?;
            commands::synth::run(&cfg)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = dispatch(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
