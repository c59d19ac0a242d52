//! `beamadapt` command line: dataset generation, offline training and
//! adaptation, evaluation, single-instance solving and online runs.
//!
//! Exit codes: 0 success, 1 other failure, 2 invalid configuration or input,
//! 3 solver redraw rate exceeded, 4 non-finite training loss.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "beamadapt", version, about = "Adaptive max-min SINR beamforming experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum TrainMethod {
    Joint,
    Pretrain,
    Meta,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum AdaptMethod {
    Finetune,
    MetaAdapt,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labelled dataset from a scenario config.
    GenData {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: u64,
        /// Random stream id within the seed.
        #[arg(long, default_value_t = 0)]
        stream: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Train a model on one or more datasets.
    Train {
        #[arg(long, value_enum)]
        method: TrainMethod,
        #[arg(long, required = true, num_args = 1..)]
        data: Vec<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        metrics: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        /// Fill the wall-clock column of the metrics CSV.
        #[arg(long)]
        timings: bool,
    },
    /// Adapt a checkpoint on a small labelled set.
    Adapt {
        #[arg(long, value_enum)]
        method: AdaptMethod,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        adapt_data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        metrics: Option<PathBuf>,
        /// Number of leading records of the adaptation file to use.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        timings: bool,
    },
    /// Evaluate a checkpoint against the optimal labels of a test set.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        test_data: PathBuf,
        #[arg(long)]
        report: PathBuf,
        /// Include per-channel prediction time in the report.
        #[arg(long)]
        timings: bool,
    },
    /// Solve one instance given as JSON and print the result.
    Solve {
        #[arg(long)]
        instance_json: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a non-stationary online schedule.
    Online {
        #[arg(long)]
        schedule: PathBuf,
        /// Comma-separated strategy names.
        #[arg(long, value_delimiter = ',', required = true)]
        strategies: Vec<String>,
        #[arg(long)]
        meta_checkpoint: PathBuf,
        #[arg(long)]
        report: PathBuf,
        /// Effective config plus per-segment means.
        #[arg(long)]
        summary: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        timings: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenData { config, out, count, seed, stream, workers } => {
            commands::gen_data(&config, &out, count, seed, stream, workers)
        }
        Command::Train { method, data, config, out, metrics, seed, workers, timings } => commands::train(
            method,
            &data,
            config.as_deref(),
            &out,
            metrics.as_deref(),
            seed,
            workers,
            timings,
        ),
        Command::Adapt { method, checkpoint, adapt_data, config, out, metrics, samples, timings } => {
            commands::adapt(
                method,
                &checkpoint,
                &adapt_data,
                config.as_deref(),
                &out,
                metrics.as_deref(),
                samples,
                timings,
            )
        }
        Command::Eval { checkpoint, test_data, report, timings } => {
            commands::eval(&checkpoint, &test_data, &report, timings)
        }
        Command::Solve { instance_json, out } => commands::solve(&instance_json, out.as_deref()),
        Command::Online { schedule, strategies, meta_checkpoint, report, summary, seed, workers, timings } => {
            commands::online(
                &schedule,
                &strategies,
                &meta_checkpoint,
                &report,
                summary.as_deref(),
                seed,
                workers,
                timings,
            )
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
