mod checkpoint;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use reccoord::Key;

use crate::run::{RunError, RunMode};

#[derive(Parser, Debug)]
#[command(name = "reccoord", version, about = "Day-ahead flexibility planning for energy communities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Plan one or more modes over a scenario and write the report files.
    Run(RunArgs),
    /// Write a synthetic scenario document.
    Generate(GenerateArgs),
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Scenario JSON document.
    #[arg(long, conflicts_with = "generate", required_unless_present = "generate")]
    pub scenario: Option<PathBuf>,
    /// Synthetic generator overrides, e.g. `members=4,ev_rate=0.5`.
    #[arg(long, value_name = "K=V,...")]
    pub generate: Option<String>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Comma-separated: solofix, soloflex, ecfix, ecflex, ecflexit, ecflexitprimed.
    #[arg(long, value_delimiter = ',', required = true)]
    pub modes: Vec<RunMode>,
    /// Key of repartition for the iterative modes: equal, prorate or cascade.
    #[arg(long)]
    pub key: Option<Key>,
    /// Number of days to plan (defaults to the whole scenario).
    #[arg(long)]
    pub days: Option<usize>,
    /// Timestep in hours.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Write iteration traces to trace.jsonl.
    #[arg(long)]
    pub trace: bool,
    #[arg(long)]
    pub allow_curtailment: bool,
    #[arg(long, default_value_t = reccoord::decentral::DEFAULT_MAX_ITERS)]
    pub max_iters: usize,
    /// Ignore checkpoints left by an earlier run.
    #[arg(long)]
    pub fresh: bool,
}

#[derive(Args, Debug, Clone)]
pub struct GenerateArgs {
    /// Generator overrides, e.g. `members=4,ev_rate=0.5`.
    #[arg(long, value_name = "K=V,...", default_value = "")]
    pub generate: String,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub days: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Output file; `-` writes to stdout.
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
    /// Single-line JSON instead of indented.
    #[arg(long)]
    pub compact: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run::run(&args),
        Command::Generate(args) => run::generate(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(RunError::Failed(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
