mod artifacts;
mod benchmark;
mod config;
mod error;
mod parse;
mod prepare;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use logptr::trainer::load_model;

use crate::config::Overrides;
use crate::error::CliError;
use crate::prepare::{PreparedData, SplitName};

/// Pointer-network log parser: prepare LogHub-style data, train, parse,
/// evaluate and benchmark.
#[derive(Parser, Debug)]
#[command(name = "logptr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Align templates to messages and split a structured CSV.
    Prepare(PrepareArgs),
    /// Train on a prepared data directory and write the best model.
    Train(TrainArgs),
    /// Parse raw log lines or a structured CSV with a trained model.
    Parse(ParseArgs),
    /// Score a model on one split of a prepared data directory.
    Evaluate(EvaluateArgs),
    /// Prepare, train and evaluate every dataset in a directory.
    Benchmark(BenchmarkArgs),
}

#[derive(Args, Debug)]
struct PrepareArgs {
    /// Structured CSV with LineId, Content and EventTemplate columns.
    #[arg(long)]
    input: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    config: Overrides,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Directory written by `prepare`.
    #[arg(long)]
    data: PathBuf,
    /// Model file to write; the epoch log goes next to it.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    config: Overrides,
}

#[derive(Args, Debug)]
struct ParseArgs {
    #[arg(long)]
    model: PathBuf,
    /// Raw log lines, or a `.csv` with LineId and Content columns.
    #[arg(long)]
    input: PathBuf,
    /// JSON-lines output.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    split: SplitName,
    /// Report JSON to write.
    #[arg(long)]
    out: PathBuf,
    /// Also write per-message predictions as JSON lines.
    #[arg(long)]
    predictions: Option<PathBuf>,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
}

#[derive(Args, Debug)]
struct BenchmarkArgs {
    /// Directory of structured CSVs (also searched one level deep).
    #[arg(long)]
    datasets: PathBuf,
    /// Output directory; `table.json` and one subdirectory per dataset.
    #[arg(long)]
    out: PathBuf,
    /// Rerun datasets that already have a report.
    #[arg(long)]
    force: bool,
    #[command(flatten)]
    config: Overrides,
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Prepare(a) => {
            let config = a.config.resolve()?;
            let s = prepare::prepare(&a.input, &config.label_set()?, config.seed, &a.out)?;
            println!(
                "{}: {} records, {} alignment failures -> {}",
                s.dataset,
                s.records,
                s.failures,
                a.out.display()
            );
        }
        Command::Train(a) => {
            let config = a.config.resolve()?;
            let data = PreparedData::load(&a.data)?;
            let outcome = train::train_model(&data, &config, &a.out, true)?;
            println!(
                "best epoch {} (validation PA {}) -> {}",
                outcome.best.epoch,
                outcome
                    .best
                    .validation_pa
                    .map(|p| format!("{p:.4}"))
                    .unwrap_or_else(|| "-".into()),
                a.out.display()
            );
        }
        Command::Parse(a) => {
            let checkpoint = load_model(&a.model)?;
            let parsed = parse::parse_file(&checkpoint, &a.input, &a.out, a.batch_size)?;
            let degraded = parsed.iter().filter(|p| p.warning.is_some()).count();
            println!(
                "{} lines parsed ({degraded} degraded) -> {}",
                parsed.len(),
                a.out.display()
            );
        }
        Command::Evaluate(a) => {
            let checkpoint = load_model(&a.model)?;
            let data = PreparedData::load(&a.data)?;
            let scores = train::evaluate_split(
                &checkpoint,
                &data,
                a.split,
                a.batch_size,
                a.predictions.as_deref(),
            )?;
            println!("{}: GA {:.4} PA {:.4}", data.dataset, scores.ga, scores.pa);
            train::write_report(&a.out, &data.dataset, scores)?;
        }
        Command::Benchmark(a) => {
            let config = a.config.resolve()?;
            let table = benchmark::benchmark(&a.datasets, &config, &a.out, a.force)?;
            for (name, s) in &table.datasets {
                println!("{name}: GA {:.4} PA {:.4}", s.ga, s.pa);
            }
            if let Some(agg) = &table.aggregate {
                println!("mean: GA {:.4} PA {:.4}", agg.mean_ga, agg.mean_pa);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("ERROR 1: {e}");
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.exit_code();
            eprintln!("ERROR {code}: {e}");
            ExitCode::from(code as u8)
        }
    }
}
