use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mpcn::cli::{self, Config, Overrides};

/// Sampling and ergodicity-diagnostic harness for the RWM, pCN, and MpCN
/// Metropolis-Hastings kernels.
#[derive(Parser)]
#[command(name = "mpcn", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one chain; write trace.csv, trace.meta.json, and summary.csv
    Sample(CommonArgs),
    /// Run a named diagnostic; write one JSON report per probe point
    Diagnose(CommonArgs),
    /// Run a named benchmark experiment; write its table bundle
    Experiment(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// INI config file driving the run
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides [run].out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed (overrides [run].seed)
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (overrides [run].workers)
    #[arg(long)]
    workers: Option<usize>,
}

fn run(args: &CommonArgs, f: impl Fn(&Config, &cli::RunSettings) -> mpcn::Result<()>) -> ExitCode {
    let result = Config::load(&args.config).and_then(|cfg| {
        let overrides = Overrides {
            out: args.out.clone(),
            seed: args.seed,
            workers: args.workers,
        };
        let settings = cli::run_settings(&cfg, &overrides)?;
        f(&cfg, &settings)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Sample(args) => run(&args, cli::cmd_sample),
        Command::Diagnose(args) => run(&args, cli::cmd_diagnose),
        Command::Experiment(args) => run(&args, cli::cmd_experiment),
    }
}
