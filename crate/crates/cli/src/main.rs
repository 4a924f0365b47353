//! `hjm`: pricing, forward curves, critical times, verification suites and
//! the model-versus-oracle comparison report.
//!
//! Exit codes: 0 success, 1 verification failure, 2 invalid input, 3 I/O error.

mod commands;
mod config;

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use config::{CommonArgs, RunConfig};

#[derive(Parser)]
#[command(
    name = "hjm",
    version,
    about = "American option valuation with forward-drift models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Model price of the option
    Price,
    /// Forward curve f_0(u) on the valuation grid
    Curve,
    /// Deterministic critical (stopping) time
    CriticalTime,
    /// Run every verification suite; exit 1 if any fails
    Verify,
    /// Additive model against the binomial and Black-Scholes oracles
    Compare,
}

#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Io(String),
}

impl From<hjm_american::Error> for CliError {
    fn from(e: hjm_american::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

#[derive(Serialize)]
struct ErrorDoc<'a> {
    error: &'a str,
    message: &'a str,
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    fn report(&self) {
        let (error, message) = match self {
            CliError::Invalid(m) => ("invalid_input", m.as_str()),
            CliError::Io(m) => ("io", m.as_str()),
        };
        let doc = serde_json::to_string(&ErrorDoc { error, message }).expect("serializable error");
        eprintln!("{doc}");
    }
}

/// Writes through a temporary file in the target directory so a failed run
/// never leaves a partial file behind.
fn write_atomic(path: &Path, body: &str) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("cannot write {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(body.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let cfg = RunConfig::resolve(&cli.common)?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Invalid(format!("cannot set up thread pool: {e}")))?;
    }
    let outcome = match cli.command {
        Command::Price => commands::price(&cfg)?,
        Command::Curve => commands::curve(&cfg)?,
        Command::CriticalTime => commands::critical_time_cmd(&cfg)?,
        Command::Verify => commands::verify(&cfg)?,
        Command::Compare => commands::compare(&cfg)?,
    };
    match &cfg.output {
        Some(path) => write_atomic(path, &outcome.body)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(outcome.body.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Io(format!("cannot write to stdout: {e}")))?;
        }
    }
    Ok(outcome.ok)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.to_string();
            CliError::Invalid(message.trim_end().to_string()).report();
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            e.report();
            ExitCode::from(e.exit_code())
        }
    }
}
