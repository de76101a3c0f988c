//! `schur`: kernel positivity checks, colligation synthesis and evaluation
//! from JSON files.
//!
//! Exit codes: 0 when every verdict passes, 1 on input errors, 2 when the
//! mathematics rejects the input (kernel not positive, samples not Schur,
//! tuple not strict, ...).

mod commands;
mod report;
mod schema;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::Common;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Math(schur_core::Error),
}

impl From<schur_core::Error> for CliError {
    fn from(e: schur_core::Error) -> Self {
        if e.is_rejection() {
            CliError::Math(e)
        } else {
            CliError::Input(e.to_string())
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KernelSetting {
    Disk,
    Ball,
    Cp,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RealizeSetting {
    Disk,
    Ball,
    Free,
    Tv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EvalMode {
    Point,
    Operator,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Parser)]
#[command(
    name = "schur",
    version,
    about = "Schur-class kernel checks, realizations and evaluation"
)]
struct Cli {
    /// Numerical tolerance for positivity and rank decisions.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Seed for every randomized step (held-out splits).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Report format on stdout.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Positivity of a kernel sample, a de Branges-Rovnyak kernel, or a CP kernel.
    KernelCheck {
        input: PathBuf,
        #[arg(long, value_enum)]
        setting: KernelSetting,
    },
    /// Synthesize a realization from samples, a series, or a lower-triangular window.
    Realize {
        input: PathBuf,
        #[arg(long, value_enum)]
        setting: RealizeSetting,
        /// Where to write the colligation or time-varying system.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Truncation degree N for free series (defaults to the series degree).
        #[arg(long)]
        degree: Option<usize>,
    },
    /// Evaluate a colligation or series at points or at an operator tuple.
    Eval {
        function: PathBuf,
        #[arg(long)]
        points: Option<PathBuf>,
        #[arg(long)]
        tuple: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = EvalMode::Point)]
        mode: EvalMode,
        /// Where to write the values; they go into the report otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<report::RunReport, CliError> {
    if !(cli.tol.is_finite() && cli.tol > 0.0) {
        return Err(CliError::Input(format!(
            "--tol must be positive, got {}",
            cli.tol
        )));
    }
    let common = Common {
        tol: cli.tol,
        seed: cli.seed,
        format: cli.format,
    };
    match &cli.command {
        Command::KernelCheck { input, setting } => commands::kernel_check(input, *setting, &common),
        Command::Realize {
            input,
            setting,
            out,
            degree,
        } => commands::realize(input, *setting, out.as_ref(), *degree, &common),
        Command::Eval {
            function,
            points,
            tuple,
            mode,
            out,
        } => commands::eval(
            function,
            points.as_ref(),
            tuple.as_ref(),
            *mode,
            out.as_ref(),
            &common,
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let format = cli.format;
    match run(cli) {
        Ok(report) => {
            let stdout = std::io::stdout().lock();
            let written = match format {
                OutputFormat::Json => report.write_json(stdout),
                OutputFormat::Csv => report.write_csv(stdout),
            };
            if let Err(CliError::Input(msg)) = written {
                eprintln!("error: {msg}");
                return ExitCode::from(1);
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Math(e)) => {
            eprintln!("rejected: {e}");
            ExitCode::from(2)
        }
    }
}
