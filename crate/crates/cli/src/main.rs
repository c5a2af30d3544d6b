//! `lsvcg`: batch experiments over scenario files.
//!
//! Every subcommand reads a scenario, writes one or more `.csv` tables and a
//! `meta.json` record into `--out`. Outputs depend only on the scenario, the
//! seed and the overrides.

mod commands;
mod output;
mod overrides;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "lsvcg", version, about = "Shadow-price VCG experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the type-level program.
    Solve(Common),
    /// Exact VCG payments on the finite population.
    Vcg(Common),
    /// Shadow-price payments and the budget identity.
    Lsvcg(Common),
    /// Finite-population misreport gains against the closed-form bound.
    IncentiveSweep {
        #[command(flatten)]
        common: Common,
        /// Random opponent profiles per population size (0 disables sampling).
        #[arg(long, default_value_t = 0)]
        profiles: usize,
    },
    /// Price sensitivity to the type distribution.
    Sensitivity(Common),
    /// Payments overlaid on the price-broadcast algorithm, and obedience checks.
    Superimpose(Common),
    /// Dynamic mechanism over a planned mean-field trajectory.
    Dynamic(Common),
    /// Write a random scenario.
    Generate(Common),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the scenario's rebate fraction.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Comma-separated population sizes; `inf` is the continuum limit.
    #[arg(long = "i-list")]
    pub i_list: Option<String>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Worker threads (default: all hardware threads).
    #[arg(long)]
    pub workers: Option<usize>,
    /// `key=value` override; repeatable.
    #[arg(long = "set")]
    pub set: Vec<String>,
    /// Add wall time to `meta.json` (makes reruns differ).
    #[arg(long)]
    pub record_timing: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Myopic,
    Oracle,
}

#[derive(Debug)]
pub enum Failure {
    Lib(lsvcg::Error),
    Usage(String),
    Input(String),
    Io(std::io::Error),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Lib(lsvcg::Error::Solver { .. } | lsvcg::Error::Numerical(_)) => 3,
            Failure::Lib(_) | Failure::Usage(_) | Failure::Input(_) => 2,
            Failure::Io(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Lib(e) => write!(f, "{e}"),
            Failure::Usage(m) | Failure::Input(m) => f.write_str(m),
            Failure::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<lsvcg::Error> for Failure {
    fn from(e: lsvcg::Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(c) => commands::solve(&c),
        Command::Vcg(c) => commands::vcg(&c),
        Command::Lsvcg(c) => commands::lsvcg(&c),
        Command::IncentiveSweep { common, profiles } => commands::incentive_sweep(&common, profiles),
        Command::Sensitivity(c) => commands::sensitivity(&c),
        Command::Superimpose(c) => commands::superimpose(&c),
        Command::Dynamic(c) => commands::dynamic(&c),
        Command::Generate(c) => commands::generate(&c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lsvcg: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
