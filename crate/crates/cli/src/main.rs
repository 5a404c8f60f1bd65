//! `dtqm`: run discrete-time quantum mechanics experiments from a config.
//!
//! Exit codes: 0 pass, 1 tolerance failure, 2 configuration error,
//! 3 numerical failure.

mod commands;
mod config;
mod error;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::{ExperimentConfig, Format};
use crate::error::CliError;
use crate::report::{Outcome, RunReport, Writer};

#[derive(Parser)]
#[command(name = "dtqm", version, about = "Discrete-time quantum mechanics experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test whether an action satisfies the unitarity criterion
    CheckAction(Args),
    /// Evolve a Gaussian packet next to its classical trajectory
    Evolve(Args),
    /// Integrate the discrete classical equation of motion
    Classical(Args),
    /// Sweep ħ at fixed classical data
    Sweep(Args),
    /// Build a kernel and report its diagnostics
    Build(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Experiment config (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding output.directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Table format, overriding output.formats
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

type Runner = fn(&ExperimentConfig) -> Result<Outcome, CliError>;

impl Command {
    fn parts(&self) -> (&'static str, &Args, Runner) {
        match self {
            Command::CheckAction(a) => ("check-action", a, commands::check_action),
            Command::Evolve(a) => ("evolve", a, commands::evolve),
            Command::Classical(a) => ("classical", a, commands::classical),
            Command::Sweep(a) => ("sweep", a, commands::sweep),
            Command::Build(a) => ("build", a, commands::build),
        }
    }
}

/// `DTQM_THREADS` caps the worker pool; unset or 0 runs on one thread.
fn configure_threads() -> Result<(), CliError> {
    let threads = match std::env::var("DTQM_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Config(format!("DTQM_THREADS must be a non-negative integer, got {v:?}")))?,
        _ => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    configure_threads()?;
    let (name, args, command) = cli.command.parts();
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(dir) = &args.out {
        config.output.directory = dir.clone();
    }
    if let Some(f) = args.format {
        config.output.formats = vec![match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }];
    }

    let start = Instant::now();
    let outcome = command(&config)?;
    let wall_time_s = start.elapsed().as_secs_f64();

    let pass = outcome.numerical_failure.is_none() && outcome.checks.iter().all(|c| c.passed);
    let report = RunReport {
        artifact: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        subcommand: name,
        config: &config,
        wall_time_s,
        results: &outcome.results,
        checks: &outcome.checks,
        pass,
    };
    let writer = Writer {
        directory: config.output.directory.clone(),
        stem: config.output.name.clone().unwrap_or_else(|| name.to_string()),
        formats: config.output.formats.clone(),
    };
    let written = writer.emit(name, &report, &outcome.tables)?;

    for check in &outcome.checks {
        let verdict = if check.passed { "PASS" } else { "FAIL" };
        println!("{verdict} {}: {}", check.name, check.detail);
    }
    for path in &written {
        println!("wrote {}", path.display());
    }
    if let Some(msg) = &outcome.numerical_failure {
        eprintln!("dtqm: numerical failure: {msg}");
        return Ok(3);
    }
    Ok(if pass { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("dtqm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
