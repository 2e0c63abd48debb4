//! `qcloudsim`: simulate multi-QPU job scheduling, generate workloads,
//! train the learned allocator and compare runs.

mod commands;
mod config;
mod error;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use qcloud::scheduler::PolicyKind;

use crate::commands::{SimulateArgs, DEFAULT_BIN_WIDTH};

#[derive(Parser)]
#[command(
    name = "qcloudsim",
    version,
    about = "Quantum cloud scheduling simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the workload through the cloud under one or more allocation modes.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config output directory.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Comma-separated modes run in parallel, each into `<output>/<mode>`.
        #[arg(long, value_delimiter = ',', value_parser = parse_mode)]
        modes: Option<Vec<PolicyKind>>,
    },
    /// Write a synthetic job trace sized for the manifest's devices.
    GenJobs {
        #[arg(long, alias = "config")]
        spec: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train the learned allocation policy.
    TrainRl {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare records files and write fidelity histograms.
    Report {
        #[arg(required = true)]
        records: Vec<PathBuf>,
        #[arg(long, default_value = ".")]
        output: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BIN_WIDTH)]
        bin_width: f64,
    },
}

fn parse_mode(s: &str) -> Result<PolicyKind, String> {
    s.trim().parse::<PolicyKind>().map_err(|e| e.to_string())
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate {
            config,
            seed,
            output,
            modes,
        } => commands::simulate(SimulateArgs {
            config,
            seed,
            output,
            modes,
        }),
        Command::GenJobs {
            spec,
            manifest,
            output,
            seed,
        } => commands::gen_jobs(&spec, &manifest, &output, seed),
        Command::TrainRl {
            config,
            seed,
            output,
        } => commands::train_rl(&config, seed, output),
        Command::Report {
            records,
            output,
            bin_width,
        } => commands::report(&records, &output, bin_width),
    };
    match result {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
