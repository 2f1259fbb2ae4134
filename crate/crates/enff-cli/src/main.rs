//! `enff` — train, run, and score the wavelet-ensemble load forecaster from
//! a config file. All state flows through `--config`/`--seed`/`--out`, so a
//! run is reproducible from its command line alone: the same config and
//! seed produce byte-identical artifacts.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "enff",
    version,
    about = "Ensemble short-term load forecasting toolkit",
    after_help = "The config file holds one `key = value` per line; see the \
                  config module docs or the README for the full grammar."
)]
struct Cli {
    /// Config file (`key = value` lines).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed; overrides `run.seed`. Required to synthesize or train.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory; overrides `run.out`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overwrite artifacts that already exist.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic load and holiday CSVs
    Synth,
    /// Write autocorrelation and load/weather correlation tables
    Analyze,
    /// Train the ensemble plus the backprop and ARIMA benchmarks
    Train,
    /// Write per-model day-ahead forecast CSVs
    Forecast {
        /// Days to forecast; defaults to split.test_days
        #[arg(value_parser = parse_day, value_name = "YYYY-MM-DD")]
        days: Vec<NaiveDate>,
    },
    /// Score all models against actuals and write the comparison report
    Evaluate {
        /// Days to score; defaults to split.test_days
        #[arg(value_parser = parse_day, value_name = "YYYY-MM-DD")]
        days: Vec<NaiveDate>,
    },
}

fn parse_day(text: &str) -> Result<NaiveDate, String> {
    NaiveDate::parse_from_str(text, "%Y-%m-%d")
        .map_err(|e| format!("`{text}` is not a YYYY-MM-DD date: {e}"))
}

fn run(cli: Cli) -> enff::Result<()> {
    let config_path = cli.config.ok_or_else(|| enff::Error::InvalidConfig {
        message: "pass --config with the run configuration file".to_string(),
    })?;
    let config = RunConfig::from_file(&config_path)?;
    let seed = cli.seed.or(config.seed);
    let out = cli
        .out
        .or_else(|| config.out.clone())
        .ok_or_else(|| enff::Error::InvalidConfig {
            message: "give an output directory with --out or run.out".to_string(),
        })?;
    match cli.command {
        Command::Synth => commands::cmd_synth(&config, &out, cli.force, seed),
        Command::Analyze => commands::cmd_analyze(&config, &out, cli.force, seed),
        Command::Train => commands::cmd_train(&config, &out, cli.force, seed),
        Command::Forecast { days } => {
            commands::cmd_forecast(&config, &out, cli.force, seed, &days)
        }
        Command::Evaluate { days } => {
            commands::cmd_evaluate(&config, &out, cli.force, seed, &days)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
