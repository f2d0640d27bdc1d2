use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod cmd;
mod config;
mod data;
mod error;

use error::CliError;

/// Nonparametric regression with the fused lasso on nearest-neighbor graphs.
#[derive(Parser)]
#[command(name = "knnfl", version)]
struct Cli {
    /// JSON file with options for the subcommand; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Maximum worker threads for replicate and fold fan-out
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model on a CSV of covariates and responses
    Fit(cmd::fit::FitArgs),
    /// Predict at query points with a saved model
    Predict(cmd::predict::PredictArgs),
    /// Choose the penalty by K-fold cross-validation
    Cv(cmd::cv::CvArgs),
    /// Run the optimized-MSE protocol on a synthetic scenario
    Simulate(cmd::simulate::SimulateArgs),
    /// Run numerical checks of the embedding and scaling laws
    ValidateTheory(cmd::theory::TheoryArgs),
    /// Write a synthetic scenario dataset as CSV
    ExportScenario(cmd::export::ExportArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = config::read_config_file(cli.config.as_deref())?;
    let threads = cli.threads.or(file.threads);
    if let Some(t) = threads {
        if t == 0 {
            return Err(error::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let ctx = cmd::Context {
        file: file.options,
        threads,
    };
    match cli.command {
        Command::Fit(a) => cmd::fit::run(&a, &ctx),
        Command::Predict(a) => cmd::predict::run(&a, &ctx),
        Command::Cv(a) => cmd::cv::run(&a, &ctx),
        Command::Simulate(a) => cmd::simulate::run(&a, &ctx),
        Command::ValidateTheory(a) => cmd::theory::run(&a, &ctx),
        Command::ExportScenario(a) => cmd::export::run(&a, &ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("knnfl: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
