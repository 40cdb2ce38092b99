//! `microchi`: free-entropy estimators and checks from the command line.
//!
//! Exit codes: 0 success, 1 computation failure, 2 usage error, 3 a
//! deterministic check failed.

mod commands;
mod fail;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fail::Failure;

#[derive(Parser, Debug)]
#[command(name = "microchi", version, about = "Free entropy estimates and desk-scale checks")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Log energy and free entropy of one spectral measure.
    ChiSingle(commands::SingleArgs),
    /// Monte Carlo microstate sweep for a tracial spec.
    ChiMc(commands::McArgs),
    /// Free difference quotient of a polynomial.
    Dq(commands::DqArgs),
    /// Run identity and inequality checks.
    Check(commands::CheckArgs),
}

fn run(cli: Cli) -> Result<ExitCode, Failure> {
    if let Some(t) = cli.global.threads {
        if t == 0 {
            return Err(Failure::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::Compute(e.to_string()))?;
    }
    match cli.command {
        Command::ChiSingle(a) => commands::chi_single(&cli.global, &a),
        Command::ChiMc(a) => commands::chi_mc(&cli.global, &a),
        Command::Dq(a) => commands::dq(&cli.global, &a),
        Command::Check(a) => commands::check(&cli.global, &a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
