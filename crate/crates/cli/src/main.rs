//! Command-line front end: generate ground truth, label and fit queries,
//! evaluate bounds, merge marginals and run whole experiments.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "causal-subsets", version, about = "Predict statistical properties of unobserved variable subsets")]
struct Cli {
    /// Output file (a directory for `generate` and `slice`); stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a model; with --l also a linear SEM and a dataset.
    Generate(commands::GenerateArgs),
    /// Split a dataset into overlapping projections.
    Slice(commands::SliceArgs),
    /// Label queries with statistical tests on data.
    Test(commands::TestArgs),
    /// Fit a model to labeled queries.
    Fit(commands::FitArgs),
    /// Answer queries with a model.
    Predict(commands::PredictArgs),
    /// Evaluate generalization bounds or the sample size they require.
    Bounds(commands::BoundsArgs),
    /// Required datasets against available triples, as CSV.
    Figure1(commands::Figure1Args),
    /// Merge two marginals that share one variable.
    Merge(commands::MergeArgs),
    /// List the DAGs meeting a set of causal constraints.
    Enumerate(commands::EnumerateArgs),
    /// Run an experiment from a JSON config.
    Experiment(commands::ExperimentArgs),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let out = cli.out.as_deref();
    match cli.command {
        Command::Generate(a) => commands::generate(a, out),
        Command::Slice(a) => commands::slice(a, out),
        Command::Test(a) => commands::test(a, out),
        Command::Fit(a) => commands::fit(a, out),
        Command::Predict(a) => commands::predict(a, out),
        Command::Bounds(a) => commands::bounds(a, out),
        Command::Figure1(a) => commands::figure1(a, out),
        Command::Merge(a) => commands::merge(a, out),
        Command::Enumerate(a) => commands::enumerate(a, out),
        Command::Experiment(a) => commands::experiment(a, out),
    }
}

/// 2 for inconsistency, capacity and divergence errors, 1 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    err.chain()
        .find_map(|e| e.downcast_ref::<causal_subsets::Error>())
        .map_or(1, |e| e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // clap uses 2 for usage errors; here 2 is reserved for inconsistency and capacity
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
