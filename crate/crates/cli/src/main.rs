//! `hypesent`: batch front end for ingestion, scoring, hype detection,
//! forecasting and synthetic data.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod options;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use hypesent::GeneratorSpecF64;

use commands::SynthOverrides;
use options::{RunConfig, RunOptions};

/// Bad flags or config: exit code 1. Every other error is a data error (exit 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(name = "hypesent", version, about = "Hype-adjusted news sentiment pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Deduplicate the corpus and write aligned market series.
    Ingest(RunOptions),
    /// Compute compound sentiment series for each parameter set.
    Score(RunOptions),
    /// Sweep seeds per indicator and export reports and an accuracy comparison.
    Forecast(RunOptions),
    /// Classify tickers as over-, under- or neutrally hyped and export news counts.
    Hype(RunOptions),
    /// Generate synthetic news, prices and planted labels.
    Synth(SynthArgs),
}

#[derive(clap::Args)]
struct SynthArgs {
    /// Generator spec file written by an earlier `synth` run (`generator.toml`).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, short = 'o', default_value = "hypesent_synth")]
    out_dir: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    days: Option<usize>,
    #[arg(long)]
    n_tickers: Option<usize>,
    #[arg(long)]
    signal_strength: Option<f64>,
    #[arg(long)]
    daily_vol: Option<f64>,
    /// Index of the ticker that receives extra articles.
    #[arg(long)]
    hype_ticker: Option<usize>,
    /// First hyped day, 0-based.
    #[arg(long)]
    hype_start: Option<usize>,
    /// End of the hyped range, exclusive.
    #[arg(long)]
    hype_end: Option<usize>,
    #[arg(long)]
    hype_multiplier: Option<f64>,
    /// Mean score of injected articles.
    #[arg(long)]
    hype_tone: Option<f64>,
}

fn run(command: Command) -> Result<()> {
    let resolve = |opts: RunOptions| RunConfig::resolve(opts.load()?);
    match command {
        Command::Ingest(o) => commands::ingest(&resolve(o)?),
        Command::Score(o) => commands::score(&resolve(o)?),
        Command::Forecast(o) => commands::forecast_cmd(&resolve(o)?),
        Command::Hype(o) => commands::hype(&resolve(o)?),
        Command::Synth(a) => {
            let base = match &a.config {
                Some(path) => commands::read_generator_spec(path)?,
                None => GeneratorSpecF64::default(),
            };
            let overrides = SynthOverrides {
                seed: a.seed,
                days: a.days,
                n_tickers: a.n_tickers,
                signal_strength: a.signal_strength,
                daily_vol: a.daily_vol,
                hype_ticker: a.hype_ticker,
                hype_start: a.hype_start,
                hype_end: a.hype_end,
                hype_multiplier: a.hype_multiplier,
                hype_tone: a.hype_tone,
            };
            let spec = commands::apply_overrides(base, &overrides)?;
            commands::synth(&spec, &a.out_dir)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
