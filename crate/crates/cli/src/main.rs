//! `skucast`: batch demand forecasting for SKU-level manufacturing plans.
//!
//! Exit codes: 0 success, 1 internal error, 2 input or usage error.

mod commands;
mod config;
mod report;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// A problem with user-supplied input; exits with status 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

#[derive(Debug, Parser)]
#[command(name = "skucast", version, about = "SKU-level demand forecasting with COVID regressors")]
struct Cli {
    /// Run configuration (TOML); flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Increase log detail (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse the input files and check their invariants.
    Validate(DataArgs),
    /// Search hyperparameters for one SKU by rolling-origin cross-validation.
    Tune(commands::TuneArgs),
    /// Fit a model for one SKU and write the model file.
    Fit(commands::FitArgs),
    /// Write daily and monthly forecasts from a model file.
    Forecast(commands::ForecastArgs),
    /// Score a daily forecast against observed sales per horizon.
    Evaluate(commands::EvaluateArgs),
    /// Generate a synthetic dataset with known components.
    Synth(commands::SynthArgs),
    /// Print planning and accuracy tables.
    Report(report::ReportArgs),
}

/// Input file locations, overriding the config.
#[derive(Debug, Clone, Default, Args)]
pub struct DataArgs {
    #[arg(long, value_name = "FILE")]
    pub sales: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub covid: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub holidays: Option<PathBuf>,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<InputError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<skucast::Error>() {
            return if e.is_input_error() { 2 } else { 1 };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();

    let result = config::load(cli.config.as_deref()).and_then(|cfg| match cli.command {
        Command::Validate(args) => commands::validate(&cfg, &args),
        Command::Tune(args) => commands::tune(&cfg, &args),
        Command::Fit(args) => commands::fit(&cfg, &args),
        Command::Forecast(args) => commands::forecast(&cfg, &args),
        Command::Evaluate(args) => commands::evaluate(&cfg, &args),
        Command::Synth(args) => commands::synth(&args),
        Command::Report(args) => report::run(&args),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
