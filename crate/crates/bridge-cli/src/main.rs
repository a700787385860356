//! `bridge` CLI: run the pipeline over a dataset, score results, solve
//! equation systems directly, and inspect per-stage traces.

mod config;
mod eval_cmd;
mod inspect_cmd;
mod run_cmd;
mod solve_cmd;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Exit codes shared across subcommands: 2 config, 3 dataset/alignment,
/// 4 replay miss.
pub const EXIT_OK: u8 = 0;
pub const EXIT_UNSOLVABLE: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_REPLAY_MISS: u8 = 4;

#[derive(Parser)]
#[command(
    name = "bridge",
    about = "Equation-generation pipeline for math word problems",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline over a dataset and write a JSONL results file.
    Run(RunArgs),
    /// Score a results file against its dataset.
    Eval(EvalArgs),
    /// Solve an equation system from a file or stdin.
    Solve(SolveArgs),
    /// Pretty-print recorded stage traces for one example.
    Inspect(InspectArgs),
}

#[derive(clap::Args, Debug, Default)]
pub struct RunArgs {
    /// Dataset file.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Dataset format: gsm8k, svamp, or algebra.
    #[arg(long)]
    format: Option<String>,
    /// Backend: live, replay, record, or scripted.
    #[arg(long)]
    backend: Option<String>,
    /// Replay/record cache file (JSONL).
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Scripted responses file (JSONL of strings) for the scripted
    /// backend, or as the inner source when recording offline.
    #[arg(long)]
    script: Option<PathBuf>,
    /// Model name sent to the provider.
    #[arg(long)]
    model: Option<String>,
    /// Few-shot count, 2..=8.
    #[arg(long)]
    shots: Option<usize>,
    /// Answer-stage retry limit.
    #[arg(long)]
    retry: Option<u32>,
    /// Full re-translation passes after the answer loop exhausts.
    #[arg(long)]
    retranslate: Option<u32>,
    /// Translate-stage sample count for majority voting (>= 2 enables
    /// voting mode).
    #[arg(long)]
    self_consistency: Option<u32>,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
    /// Process only the first N examples.
    #[arg(long)]
    limit: Option<usize>,
    /// Results file path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include per-stage traces in the results file.
    #[arg(long)]
    traces: bool,
    /// Seed for stochastic tie-breaks (backoff jitter).
    #[arg(long)]
    seed: Option<u64>,
    /// Config file (TOML). Flags override env, env overrides this file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the fully resolved configuration and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(clap::Args, Debug)]
pub struct EvalArgs {
    /// Results file from `bridge run`.
    #[arg(long)]
    results: PathBuf,
    /// Dataset the run was made from.
    #[arg(long)]
    dataset: PathBuf,
    /// Dataset format: gsm8k, svamp, or algebra.
    #[arg(long, default_value = "gsm8k")]
    format: String,
    /// Where to write the JSON report (default: <results>.report.json).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct SolveArgs {
    /// Equations file; stdin when omitted or "-".
    equations: Option<PathBuf>,
    /// Variable to report.
    #[arg(long, default_value = "ans")]
    target: String,
}

#[derive(clap::Args, Debug)]
pub struct InspectArgs {
    /// Results file written with --traces.
    #[arg(long)]
    results: PathBuf,
    /// Example id to inspect.
    #[arg(long)]
    id: String,
    /// Only this stage: Erase, Decompose, Translate, or Answer.
    #[arg(long)]
    stage: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run(args) => run_cmd::execute(args),
        Command::Eval(args) => eval_cmd::execute(args),
        Command::Solve(args) => solve_cmd::execute(args),
        Command::Inspect(args) => inspect_cmd::execute(args),
    };
    ExitCode::from(code)
}
