//! Command-line front end: exact tables, closed-form evaluation, simulation
//! and the validation suite, emitted as CSV or JSON.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
pub mod output;
pub mod validate;

pub use output::{Format, OutputRecord};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Core(#[from] prefattach_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(prefattach_core::Error::InvalidArgument(_) | prefattach_core::Error::OutOfRange { .. }) => {
                EXIT_USAGE
            }
            _ => EXIT_FAILURE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "prefattach",
    version,
    about = "Degree laws of single-edge preferential attachment"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact degree-law table of node m for every time up to n-max.
    Table(TableArgs),
    /// Explicit solution for the first node at a single (n, k).
    Closed(ClosedArgs),
    /// Monte Carlo degree counts of node m at time n.
    Simulate(SimulateArgs),
    /// Run the exact and statistical checks; exit 0 iff every gated check passes.
    Validate(validate::ValidateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write to this file (atomically) instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TableArgs {
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[arg(long)]
    pub n_max: usize,
    /// Emit the scaled coefficients of the first node instead.
    #[arg(long)]
    pub scaled: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClosedMode {
    Exact,
    Float,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct ClosedArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = ClosedMode::Exact)]
    pub mode: ClosedMode,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimMode {
    Marginal,
    Graph,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SimMode::Marginal)]
    pub mode: SimMode,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Table(a) => commands::table(&a, stdout).map(|_| true),
        Command::Closed(a) => commands::closed(&a, stdout).map(|_| true),
        Command::Simulate(a) => commands::simulate(&a, stdout).map(|_| true),
        Command::Validate(a) => validate::run(&a, &prefattach_core::validation::ExplicitSolution, stdout, stderr),
    };
    match outcome {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_FAILURE,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
