//! `kernelcorrupt`: classify, apply, verify and invert corruptions of a
//! finite learning problem described in a TOML file.

mod commands;
mod problem;
mod report;

use std::fmt::Display;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use kernelcorrupt::scalar::{BigRational, Scalar};
use kernelcorrupt::EPS_DPE;
use serde_json::json;

use problem::{Problem, ProblemFile};
use report::Report;

pub const TOL_ENV: &str = "KERNELCORRUPT_TOL";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Lib(#[from] kernelcorrupt::Error),
}

impl CliError {
    pub fn input(field: impl Display, msg: impl Display) -> Self {
        CliError::Input(format!("{field}: {msg}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Debug, Parser)]
#[command(name = "kernelcorrupt", version, about = "Markov-kernel corruption of finite supervised learning problems")]
struct Cli {
    /// Exact rational arithmetic for corruption and inversion.
    #[arg(long, global = true)]
    rational: bool,
    /// Output written to stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Also write the JSON report to this path.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Name the corruption type of τ and λ (or κ) and check the pair is feasible.
    Classify { file: PathBuf },
    /// Print the corrupted joint P ∘ κ.
    Corrupt { file: PathBuf },
    /// Compare Bayes risks on the corrupted and transformed-clean sides.
    Verify {
        file: PathBuf,
        /// Case tag such as `twodepx_simpley`, or `all`.
        #[arg(long, default_value = "all")]
        case: String,
    },
    /// Bayesian inverse of κ and the corrected losses it induces.
    Invert {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Randomized check over generated problems.
    Suite {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value = "all")]
        case: String,
    },
}

fn tolerance() -> Result<f64, CliError> {
    match std::env::var(TOL_ENV) {
        Ok(s) => s
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|t| t.is_finite() && *t >= 0.0)
            .ok_or_else(|| CliError::input(TOL_ENV, format!("`{s}` is not a non-negative number"))),
        Err(_) => Ok(EPS_DPE),
    }
}

fn on_file<T: Scalar>(file: &ProblemFile, command: &Command, tol: f64) -> Result<Report, CliError> {
    let p: Problem<T> = file.build()?;
    match command {
        Command::Classify { .. } => commands::classify_cmd(&p),
        Command::Corrupt { .. } => commands::corrupt_cmd(&p),
        Command::Verify { case, .. } => commands::verify_cmd(&p, case, tol),
        Command::Invert { seed, .. } => commands::invert_cmd(&p, *seed, tol),
        Command::Suite { .. } => unreachable!("suite reads no file"),
    }
}

fn run(cli: &Cli) -> Result<Report, CliError> {
    let tol = tolerance()?;
    let mode = if cli.rational { "rational" } else { "float" };
    let (mut r, input) = match &cli.command {
        Command::Suite { seed, instances, case } => (commands::suite_cmd(*seed, *instances, case, tol)?, None),
        Command::Classify { file } | Command::Corrupt { file } | Command::Verify { file, .. } | Command::Invert { file, .. } => {
            let pf = ProblemFile::load(file)?;
            let r = if cli.rational {
                on_file::<BigRational>(&pf, &cli.command, tol)?
            } else {
                on_file::<f64>(&pf, &cli.command, tol)?
            };
            (r, Some(pf))
        }
    };
    r.set("arithmetic", json!(mode));
    if let Some(pf) = input {
        r.set("input", serde_json::to_value(&pf).expect("problem files serialize"));
    }
    Ok(r)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let doc = r.to_json();
    match cli.format {
        Format::Text => print!("{}", r.to_text()),
        Format::Structured => println!("{}", serde_json::to_string_pretty(&doc).expect("json")),
    }
    if let Some(path) = &cli.report {
        if let Err(e) = std::fs::write(path, serde_json::to_string_pretty(&doc).expect("json") + "\n") {
            eprintln!("error: {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    if r.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
