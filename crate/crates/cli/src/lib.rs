//! `gaussobs` command-line front end.
//!
//! Exit codes: 0 success, 1 I/O, schema or usage error, 2 invalid
//! observable or state. With `--json` the report is a single JSON object
//! with sorted keys.

pub mod commands;
pub mod format;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

pub use format::{FormatError, ObservableFile, StateFile};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_INVALID: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "gaussobs",
    version,
    about = "Structure of Gaussian observables"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Machine-readable output
    #[arg(long, global = true)]
    pub json: bool,

    /// Rank and PSD tolerance
    #[arg(long, global = true, default_value_t = gaussobs::DEFAULT_TOL)]
    pub tol: f64,

    /// Seed for sampling and random check points
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Number of samples
    #[arg(long, global = true, default_value_t = 10)]
    pub n: usize,

    /// Fock-space photon-number cutoff for oracle-check (also checked at twice the value)
    #[arg(long, global = true, default_value_t = 20)]
    pub cutoff: usize,

    /// Gaussian state file (default: vacuum)
    #[arg(long, global = true)]
    pub state: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the uncertainty condition
    Validate { file: PathBuf },
    /// Canonical block structure, boundedness and density norm
    Classify { file: PathBuf },
    /// Minimal Naimark extension with residuals
    Naimark { file: PathBuf },
    /// Outcome distribution on a Gaussian state
    Distribution { file: PathBuf },
    /// Draw outcomes on a Gaussian state
    Sample { file: PathBuf },
    /// Compare analytic results with the truncated Fock-space oracle (one mode)
    OracleCheck { file: PathBuf },
    /// Print the prototype observables, or write them into a directory
    Prototypes { dir: Option<PathBuf> },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Classify { .. } => "classify",
            Command::Naimark { .. } => "naimark",
            Command::Distribution { .. } => "distribution",
            Command::Sample { .. } => "sample",
            Command::OracleCheck { .. } => "oracle-check",
            Command::Prototypes { .. } => "prototypes",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub code: u8,
    pub stdout: String,
    pub stderr: String,
}

/// A finished command: JSON result, human-readable lines and exit code.
#[derive(Debug, Clone)]
pub struct Report {
    pub result: Value,
    pub lines: Vec<String>,
    pub code: u8,
    pub input: Value,
    pub extra_tolerances: Value,
}

pub fn run<I, T>(args: I) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Output {
                    code: EXIT_USAGE,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Output {
                    code: EXIT_OK,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    execute(&cli)
}

pub fn execute(cli: &Cli) -> Output {
    if !(cli.tol.is_finite() && cli.tol > 0.0) {
        return Output {
            code: EXIT_USAGE,
            stdout: String::new(),
            stderr: format!("error: --tol must be a positive number, got {}\n", cli.tol),
        };
    }
    match commands::dispatch(cli) {
        Ok(report) => render(cli, report),
        Err(failure) => Output {
            code: failure.code,
            stdout: String::new(),
            stderr: format!("error: {}\n", failure.message),
        },
    }
}

fn render(cli: &Cli, report: Report) -> Output {
    let stdout = if cli.json {
        let mut tolerances = json!({ "tol": cli.tol });
        if let (Value::Object(t), Value::Object(extra)) =
            (&mut tolerances, &report.extra_tolerances)
        {
            for (k, v) in extra {
                t.insert(k.clone(), v.clone());
            }
        }
        let doc = json!({
            "command": cli.command.name(),
            "input": report.input,
            "tolerances": tolerances,
            "result": report.result,
            "exit_code": report.code,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
        s.push('\n');
        s
    } else {
        let mut s = report.lines.join("\n");
        s.push('\n');
        s
    };
    Output {
        code: report.code,
        stdout,
        stderr: String::new(),
    }
}
