mod annotate;
mod classify;
mod common;
mod evaluate;
mod ingest;
mod kb;
mod manifest;
mod report;
mod stats;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub use common::UsageError;

/// Kernel bug-report false-positive triage toolkit.
#[derive(Debug, Parser)]
#[command(name = "fptriage", version)]
struct Cli {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Results directory, overriding `paths.results_dir`.
    #[arg(long, global = true)]
    results: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fetch or load tracker payloads into the corpus file.
    Ingest(ingest::Args),
    /// Pre-labeling, manual verdicts, agreement and label merging.
    #[command(subcommand)]
    Annotate(annotate::Command),
    /// Effort tables, significance tests and component analyses.
    Stats(stats::Args),
    /// Embed labeled reports into a knowledge-base file.
    KbBuild(kb::Args),
    /// Classify reports with a prompting strategy and write a verdict log.
    Classify(classify::Args),
    /// Metrics, splits, baselines and savings.
    #[command(subcommand)]
    Evaluate(evaluate::Command),
    /// Collate the results directory into report.md.
    Report(report::Args),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let ctx = common::Context::load(cli.config.as_deref(), cli.results)?;
    match cli.command {
        Command::Ingest(args) => ingest::run(&ctx, args),
        Command::Annotate(cmd) => annotate::run(&ctx, cmd),
        Command::Stats(args) => stats::run(&ctx, args),
        Command::KbBuild(args) => kb::run(&ctx, args),
        Command::Classify(args) => classify::run(&ctx, args),
        Command::Evaluate(cmd) => evaluate::run(&ctx, cmd),
        Command::Report(args) => report::run(&ctx, args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (kind, code) = if err.downcast_ref::<UsageError>().is_some() { ("usage", 2) } else { ("runtime", 1) };
            let message = format!("{err:#}").replace('\n', " ");
            eprintln!("error: {kind}: {message}");
            ExitCode::from(code)
        }
    }
}
