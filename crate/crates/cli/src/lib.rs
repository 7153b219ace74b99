//! The `potlab` command-line harness: configuration, orchestration and
//! reproducible CSV/JSON artifacts for the credit and wild experiments.

pub mod commands;
pub mod config;
mod error;
pub mod output;
pub mod pipeline;

use std::path::PathBuf;

use clap::{Parser, ValueEnum};

pub use config::{LoadedConfig, RunConfig};
pub use error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Prep,
    Train,
    Evade,
    Poison,
    Wild,
    Value,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Prep => "prep",
            Command::Train => "train",
            Command::Evade => "evade",
            Command::Poison => "poison",
            Command::Wild => "wild",
            Command::Value => "value",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "potlab", version, about = "Protective optimization experiments")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// Run configuration (TOML)
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides [output] dir.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Replaces the command's base seed.
    #[arg(long)]
    pub seed_override: Option<u64>,
}

/// Runs one command; the manifest is written before and after.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let config = LoadedConfig::load(&cli.config)?;
    let out = config.out_dir(cli.out.as_deref())?;
    let ctx = commands::Context { config: &config, out: &out, seed_override: cli.seed_override };
    let mut manifest = output::ManifestWriter::start(&out, cli.command.name(), &config.sha256)?;
    let result = match cli.command {
        Command::Prep => commands::prep(&ctx, &mut manifest),
        Command::Train => commands::train(&ctx, &mut manifest),
        Command::Evade => commands::evade(&ctx, &mut manifest),
        Command::Poison => commands::poison(&ctx, &mut manifest),
        Command::Wild => commands::wild(&ctx, &mut manifest),
        Command::Value => commands::value(&ctx, &mut manifest),
    };
    manifest.finish(&result)?;
    result
}
