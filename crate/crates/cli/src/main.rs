//! `astrong`: build, verify and exercise dot-product gadgets.
//!
//! Exit codes: 0 success, 1 verification failed, 2 infeasible or budget
//! exhausted, 3 bad input.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Format, Strategy};

#[derive(Debug)]
pub enum CliError {
    Verify(String),
    Infeasible(String),
    Input(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Verify(_) => 1,
            CliError::Infeasible(_) => 2,
            CliError::Input(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Verify(s) | CliError::Infeasible(s) | CliError::Input(s) => s,
        }
    }
}

impl From<astrong::Error> for CliError {
    fn from(e: astrong::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "astrong",
    version,
    about = "Dot-product gadgets and 1-a-strong matrix representations mod composites"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a gadget and write it as JSON.
    Gadget(GadgetArgs),
    /// Check a gadget file and the representations built from it.
    Verify(VerifyArgs),
    /// Sketch an n x n matrix down to t x t.
    Compress(MapArgs),
    /// Expand a t x t sketch back to an n x n representation.
    Recover(MapArgs),
    /// Represented product of two matrices, with multiplication counts.
    Matmul(MatmulArgs),
    /// Counted multiplications over Kronecker levels, as CSV.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
pub struct GadgetArgs {
    #[arg(long, default_value_t = 6)]
    pub m: u64,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_enum, default_value_t = Strategy::Block)]
    pub strategy: Strategy,
    #[arg(long, default_value_t = 3)]
    pub block_size: usize,
    /// Target width for `search`.
    #[arg(long)]
    pub t_goal: Option<usize>,
    /// Width for `exhaustive`.
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100_000)]
    pub budget: u64,
    /// Kronecker power applied to the generated gadget.
    #[arg(long, default_value_t = 1)]
    pub levels: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    pub gadget: PathBuf,
    /// Also check the sketch maps X -> XM, X -> M^T X.
    #[arg(long)]
    pub sketch: bool,
    /// Also check the represented product.
    #[arg(long)]
    pub product: bool,
    /// Cross-check closed forms against elementary-matrix probes.
    #[arg(long)]
    pub probe: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct MapArgs {
    #[arg(long)]
    pub gadget: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct MatmulArgs {
    #[arg(long)]
    pub gadget: PathBuf,
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub y: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Schoolbook product instead of the represented one.
    #[arg(long)]
    pub naive: bool,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long)]
    pub gadget: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub levels: usize,
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Gadget(a) => commands::gadget(a),
        Command::Verify(a) => commands::verify(a),
        Command::Compress(a) => commands::compress(a),
        Command::Recover(a) => commands::recover(a),
        Command::Matmul(a) => commands::matmul(a),
        Command::Bench(a) => commands::bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("astrong: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
