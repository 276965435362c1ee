//! `fgm`: command-line driver for the multiscale design pipeline.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "fgm", version, about = "Multiscale hyperelastic topology optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// JSON configuration file; built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config's `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (default: `$FGM_OUT/<subcommand>`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Default output root.
    #[arg(long, env = "FGM_OUT", default_value = "fgm-out", hide_env_values = true)]
    pub out_root: PathBuf,
    /// Config override `key.path=value` (value parsed as JSON, else string).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Descriptor to microstructure image.
    Reconstruct(Common),
    /// Image or descriptor to effective tensor JSON.
    Homogenize(Common),
    /// Sampling plan to homogenized dataset CSV.
    Doe(Common),
    /// Dataset to surrogate JSON and accuracy report.
    FitGp(Common),
    /// Experiment to trace, weights, design table and images.
    Optimize(Common),
    /// Trained weights evaluated on another mesh.
    Transfer(Common),
    /// Design table to images.
    Render(Common),
    /// Converged strain and stress fields of a design.
    Fields(Common),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (name, common) = match &cli.command {
        Command::Reconstruct(c) => ("reconstruct", c),
        Command::Homogenize(c) => ("homogenize", c),
        Command::Doe(c) => ("doe", c),
        Command::FitGp(c) => ("fit-gp", c),
        Command::Optimize(c) => ("optimize", c),
        Command::Transfer(c) => ("transfer", c),
        Command::Render(c) => ("render", c),
        Command::Fields(c) => ("fields", c),
    };
    match commands::run(name, common) {
        Ok(manifest::Status::Complete) => ExitCode::SUCCESS,
        Ok(manifest::Status::Partial(reason)) => {
            eprintln!("{}", serde_json::json!({"status": "partial", "subcommand": name, "reason": reason}));
            ExitCode::from(2)
        }
        Err(err) => {
            let chain: Vec<String> = err.chain().map(|e| e.to_string()).collect();
            eprintln!("{}", serde_json::json!({"status": "error", "subcommand": name, "error": chain}));
            ExitCode::FAILURE
        }
    }
}
