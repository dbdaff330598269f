//! Command-line pipeline: stories CSV in, networks, feature tables, model
//! evaluations and a text report out.
//!
//! Every stage writes into one output directory and records a manifest with
//! the config hash, derived seeds and SHA-256 digests of its inputs.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod manifest;
pub mod stages;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{Overrides, RunConfig};
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "storynet", version, about = "Semantic networks and creativity models for short stories")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tokenise stories, attach parses and drop stories missing a prompt word
    Preprocess(Overrides),
    /// Build the network variants of every story
    Build(Overrides),
    /// Structural metrics per story and builder
    Features(Overrides),
    /// Spreading activation from the prompt words
    Spread(Overrides),
    /// Emotion z-scores per story
    Emotions(Overrides),
    /// Cross-validated model matrix with permutation baselines and Shapley values
    Evaluate(Overrides),
    /// Paired sign-flip tests between builders
    CompareBuilders(Overrides),
    /// Plain-text summary of the evaluation
    Report(Overrides),
}

impl Command {
    pub fn overrides(&self) -> &Overrides {
        match self {
            Command::Preprocess(o)
            | Command::Build(o)
            | Command::Features(o)
            | Command::Spread(o)
            | Command::Emotions(o)
            | Command::Evaluate(o)
            | Command::CompareBuilders(o)
            | Command::Report(o) => o,
        }
    }
}

/// Resolve the config and run one stage, returning the files written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let cfg = RunConfig::resolve(cli.command.overrides())?;
    match &cli.command {
        Command::Preprocess(_) => stages::preprocess(&cfg),
        Command::Build(_) => stages::build(&cfg),
        Command::Features(_) => stages::features(&cfg),
        Command::Spread(_) => stages::spread(&cfg),
        Command::Emotions(_) => stages::emotions(&cfg),
        Command::Evaluate(_) => stages::evaluate(&cfg),
        Command::CompareBuilders(_) => stages::compare_builders(&cfg),
        Command::Report(_) => stages::report(&cfg),
    }
}
