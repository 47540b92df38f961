use clap::{Parser, Subcommand};
use smp_adjoint::run::{run_cli, Mode, Overrides};
use std::path::PathBuf;

/// Adjoint sensitivity analysis and topology optimization of shape-memory
/// polymer structures.
#[derive(Parser)]
#[command(name = "smp-adjoint", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the forward thermo-mechanical cycle and write trace artifacts.
    Forward(ModeArgs),
    /// Compare adjoint sensitivities against the finite-difference oracle.
    Verify(ModeArgs),
    /// Run the density optimization loop.
    Optimize(ModeArgs),
    /// Time the recursive vs. memoized coupling evaluators.
    Bench(ModeArgs),
}

#[derive(clap::Args)]
struct ModeArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Worker-pool size (overrides the config; 0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Enable the per-iteration FD spot check in optimize mode.
    #[arg(long)]
    paranoid: bool,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (mode, args) = match cli.command {
        Command::Forward(a) => (Mode::Forward, a),
        Command::Verify(a) => (Mode::Verify, a),
        Command::Optimize(a) => (Mode::Optimize, a),
        Command::Bench(a) => (Mode::Bench, a),
    };
    let overrides = Overrides {
        workers: args.workers,
        paranoid: args.paranoid,
        out_dir: args.out,
    };
    std::process::exit(run_cli(&args.config, mode, &overrides));
}
