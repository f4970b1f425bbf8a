//! `sirmap` command-line interface.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Config;

#[derive(Parser)]
#[command(name = "sirmap", version, about = "SIR spreading on networks via weighted shortest-path instances")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Run {
    /// TOML config file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the summary as JSON.
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    keys: Config,
}

#[derive(Subcommand)]
enum Command {
    /// Mean outbreak size over time from one source.
    Simulate(Run),
    /// Expected propagation-time matrix and spreading timescales.
    Propagation(Run),
    /// Score candidate sources of an observed snapshot, or benchmark the methods.
    SourceDetect(Run),
    /// Compare vaccination strategies.
    Vaccinate(Run),
    /// Transmissibility, p_nk tables and the bond-percolation comparison.
    Percolation(Run),
    /// Shortest-path scaling with network size under weight disorder.
    Scaling(Run),
    /// Write a synthetic network as an edge list.
    GenerateGraph(Run),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (run, action): (Run, fn(&mut Config) -> anyhow::Result<commands::Summary>) = match cli.command {
        Command::Simulate(r) => (r, commands::simulate),
        Command::Propagation(r) => (r, commands::propagation),
        Command::SourceDetect(r) => (r, commands::source_detect),
        Command::Vaccinate(r) => (r, commands::vaccinate),
        Command::Percolation(r) => (r, commands::percolation),
        Command::Scaling(r) => (r, commands::scaling),
        Command::GenerateGraph(r) => (r, commands::generate),
    };
    let result = Config::load(run.config.as_deref(), &run.keys).and_then(|mut cfg| action(&mut cfg));
    match result {
        Ok(summary) => {
            if run.json {
                println!("{}", serde_json::Value::Object(summary));
            } else {
                for (k, v) in &summary {
                    println!("{k} = {v}");
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            if run.json {
                let causes: Vec<String> = e.chain().map(|c| c.to_string()).collect();
                eprintln!("{}", serde_json::json!({ "error": causes }));
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::FAILURE
        }
    }
}
