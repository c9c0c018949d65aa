use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rload::experiment::{run_experiment, Experiment, Mode};

/// Routing-overhead model and reactive routing simulator.
#[derive(Debug, Parser)]
#[command(name = "rload", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the closed-form overhead model.
    Analytic(RunArgs),
    /// Simulate one protocol over the configured seeds.
    Simulate(RunArgs),
    /// Evaluate partial derivatives and total differentials.
    Sensitivity(RunArgs),
    /// Simulate several protocols on the same seeds and rank them.
    Compare(RunArgs),
    /// Compare analytical, oracle and simulated RREQ counts on grids.
    Validate(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Experiment definition (TOML). Built-in defaults are used when absent.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// CSV output path; overrides the config.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Line-delimited JSON run records; overrides the config.
    #[arg(long)]
    records: Option<PathBuf>,
    /// Run this single seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
    /// Concurrent runs.
    #[arg(short = 'j', long)]
    parallelism: Option<usize>,
    /// Skip the summary table.
    #[arg(short, long)]
    quiet: bool,
}

impl Command {
    fn split(self) -> (Mode, RunArgs) {
        match self {
            Command::Analytic(a) => (Mode::Analytic, a),
            Command::Simulate(a) => (Mode::Simulate, a),
            Command::Sensitivity(a) => (Mode::Sensitivity, a),
            Command::Compare(a) => (Mode::Compare, a),
            Command::Validate(a) => (Mode::Validate, a),
        }
    }
}

fn build_experiment(mode: Mode, args: &RunArgs) -> Result<Experiment> {
    let mut e = match &args.config {
        Some(path) => Experiment::load(path)?,
        None => Experiment::default_for(mode)?,
    };
    if e.mode != mode {
        bail!(
            "config declares mode '{}' but the '{}' command was used",
            e.mode.as_str(),
            mode.as_str()
        );
    }
    if let Some(seed) = args.seed {
        e.seeds = vec![seed];
    }
    if let Some(p) = args.parallelism {
        e.parallelism = p;
    }
    if args.output.is_some() {
        e.output = args.output.clone();
    }
    if args.records.is_some() {
        e.records = args.records.clone();
    }
    e.validate()?;
    Ok(e)
}

fn run(cli: Cli) -> Result<()> {
    let (mode, args) = cli.command.split();
    let experiment = build_experiment(mode, &args)?;
    let result = run_experiment(&experiment).with_context(|| format!("experiment '{}' failed", experiment.name))?;
    if !args.quiet {
        print!("{}", result.summary);
    }
    if let Some(path) = &experiment.output {
        eprintln!("wrote {} rows to {}", result.records.len(), path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
