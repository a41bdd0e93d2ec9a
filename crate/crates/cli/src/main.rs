//! `smartps`: analyze traces, build datasets, train and evaluate path-priority models, and
//! run multipath simulations.
//!
//! Exit status is 0 on success, 2 on a usage error and 1 on any other failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Ctx;
use crate::config::{Config, UsageError};

#[derive(Debug, Parser)]
#[command(name = "smartps", version, about = "Cross-layer WiFi/LTE path selection toolkit")]
struct Cli {
    /// TOML config; flags given on the command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Overwrite existing outputs.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Kendall and CIG scores of each attribute against goodput and delay.
    Analyze(commands::AnalyzeArgs),
    /// Write a synthesized attribute trace for a scenario.
    Synthesize(commands::SynthesizeArgs),
    /// Pair WF and LF rows of a trace into labelled records.
    BuildDataset(commands::BuildDatasetArgs),
    /// Train a tree or forest model.
    Train(commands::TrainArgs),
    /// Reduced-error pruning against a validation set.
    Prune(commands::PruneArgs),
    /// Accuracy, precision, recall and F1 of a model on a dataset.
    Evaluate(commands::EvaluateArgs),
    /// Simulate one scenario under one path selector.
    Simulate(commands::SimulateArgs),
    /// Train on synthesized traces and compare every selector over the scenario suite.
    Experiment(commands::ExperimentArgs),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let ctx = Ctx {
        config: Config::load(cli.config.as_deref())?,
        force: cli.force,
    };
    match cli.command {
        Command::Analyze(a) => commands::analyze(&ctx, a),
        Command::Synthesize(a) => commands::synthesize(&ctx, a),
        Command::BuildDataset(a) => commands::build_dataset_cmd(&ctx, a),
        Command::Train(a) => commands::train(&ctx, a),
        Command::Prune(a) => commands::prune(&ctx, a),
        Command::Evaluate(a) => commands::evaluate(&ctx, a),
        Command::Simulate(a) => commands::simulate(&ctx, a),
        Command::Experiment(a) => commands::experiment(&ctx, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SMARTPS_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e}\n\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
