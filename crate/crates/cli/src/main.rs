//! `dualsync`: simulate and analyse the dual-carrier remote phase loop.

mod artifacts;
mod commands;
mod error;
mod reproduce;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dualsync::config::{parse_config, ScenarioConfig};

use crate::commands::Context;
use crate::error::{CliError, CliResult};
use crate::reproduce::Figure;

#[derive(Debug, Parser)]
#[command(name = "dualsync", version, about = "Dual-carrier remote carrier-phase synchronization simulator")]
struct Cli {
    /// Scenario file in sectioned key = value form. Defaults apply without one.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.directory`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Suppress progress output and warnings.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one closed-loop scenario.
    Simulate,
    /// Frequency responses of the loop transfer functions.
    Bode {
        #[arg(long, default_value_t = 1.0)]
        start_hz: f64,
        #[arg(long, default_value_t = 1e5)]
        stop_hz: f64,
        #[arg(long, default_value_t = 600)]
        points: usize,
    },
    /// Round-trip delay margin against loop bandwidth.
    DelayMargin {
        #[arg(long, default_value_t = 10.0)]
        start_hz: f64,
        #[arg(long, default_value_t = 1e6)]
        stop_hz: f64,
        #[arg(long, default_value_t = 61)]
        points: usize,
    },
    /// Fit the two-state clock model to both noise masks and verify it.
    FitNoise,
    /// Phase-noise PSD of one column of a CSV file.
    Spectrum {
        #[arg(long, value_name = "CSV")]
        input: PathBuf,
        #[arg(long, default_value = "theta_bf_minus_theta0_rad")]
        column: String,
        /// Sample rate; inferred from a `t_s` column when omitted.
        #[arg(long)]
        rate_hz: Option<f64>,
    },
    /// Run every point of the `[sweep]` grid in parallel.
    Sweep,
    /// Regenerate the data behind one figure, or all of them.
    Reproduce {
        #[arg(value_enum)]
        figure: Figure,
    },
}

fn load(cli: &Cli) -> CliResult<Context> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            parse_config(&text).map_err(|e| CliError::config(Some(path.clone()), e))?
        }
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
    Ok(Context {
        cfg,
        out,
        quiet: cli.quiet,
    })
}

fn run(cli: &Cli) -> CliResult<()> {
    let ctx = load(cli)?;
    match &cli.command {
        Command::Simulate => commands::simulate(&ctx),
        Command::Bode {
            start_hz,
            stop_hz,
            points,
        } => commands::bode_cmd(&ctx, *start_hz, *stop_hz, *points),
        Command::DelayMargin {
            start_hz,
            stop_hz,
            points,
        } => commands::delay_margin_cmd(&ctx, *start_hz, *stop_hz, *points),
        Command::FitNoise => commands::fit_noise(&ctx),
        Command::Spectrum {
            input,
            column,
            rate_hz,
        } => commands::spectrum(&ctx, input, column, *rate_hz),
        Command::Sweep => commands::sweep(&ctx),
        Command::Reproduce { figure } => reproduce::reproduce(&ctx, *figure),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
