//! `kabe`: experiment driver for analogy-based effort estimation.

mod commands;
mod config;
mod data;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kabe::MethodSpec;

#[derive(Parser)]
#[command(
    name = "kabe",
    version,
    about = "Analogy-based software effort estimation experiments"
)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "KABE_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Leave-one-out evaluation of every method on every dataset.
    Run(RunArgs),
    /// Win-tie-loss tournament over saved run results.
    Compare(CompareArgs),
    /// Bisecting k-medoids tree of a dataset as JSON.
    Cluster(ClusterArgs),
    /// Feature subset selection for one dataset and method.
    Fss(FssArgs),
}

#[derive(Args)]
pub struct RunArgs {
    /// JSON experiment config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Replaces the config's datasets.
    #[arg(long = "dataset")]
    pub datasets: Vec<String>,
    /// Replaces the config's methods.
    #[arg(long = "method")]
    pub methods: Vec<MethodSpec>,
    /// Master seed (default 42).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (default `results`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct CompareArgs {
    /// `summaries.json` or `folds.csv` files written by `run`.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub dataset: String,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub min_leaf_size: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
}

#[derive(Args)]
pub struct FssArgs {
    #[arg(long)]
    pub dataset: String,
    #[arg(long, default_value = "kabe")]
    pub method: MethodSpec,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Optional JSON config supplying method parameters.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// A failure carrying its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    /// Bad configuration or unavailable input: exit 2.
    pub fn config(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    /// Failure while running an experiment: exit 1.
    pub fn run(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::run(e.to_string())
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::run(format!("{e:#}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Run(a) => commands::run(a),
        Command::Compare(a) => commands::compare(a),
        Command::Cluster(a) => commands::cluster(a),
        Command::Fss(a) => commands::fss(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
