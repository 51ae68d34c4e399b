//! `regime-frontier`: solve, plot-ready frontier tables, Monte Carlo runs and
//! validation reports from a JSON model config.

mod commands;
mod output;
mod zgrid;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::CliError;

#[derive(Parser, Debug)]
#[command(name = "regime-frontier", version, about = "Mean-variance frontiers under regime switching with a random exit time")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the backward equations; writes solutions.csv and summary.json.
    Solve(Common),
    /// Tabulate the efficient frontier; writes frontier.csv and frontier_summary.json.
    Frontier(FrontierArgs),
    /// Simulate a strategy; writes simulation.json and optionally paths.csv.
    Simulate(SimulateArgs),
    /// Check solver invariants and Monte Carlo agreement; writes validation.json.
    Validate(ValidateArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Model config (JSON).
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Backward-solver step (years); overrides the config's run.h.
    #[arg(long, value_name = "H")]
    pub step: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct FrontierArgs {
    #[command(flatten)]
    pub common: Common,
    /// Targets: a comma-separated list or an inclusive range LO:STEP:HI.
    #[arg(long, value_name = "LIST|RANGE", allow_hyphen_values = true)]
    pub z: Option<String>,
    /// Constant exit densities, comma-separated; writes frontier_f<density>.csv for each.
    #[arg(long, value_name = "LIST")]
    pub density_overlay: Option<String>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum LawKind {
    /// Efficient feedback for the target.
    Optimal,
    /// Minimum-variance feedback (target ignored).
    MinVariance,
    /// Open-loop portfolio meeting the target.
    Feasible,
    /// Everything in the bond.
    AllBond,
}

#[derive(Args, Debug, Clone)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Target mean terminal wealth; defaults to the first config target.
    #[arg(long, value_name = "Z", allow_hyphen_values = true)]
    pub z: Option<f64>,
    /// Number of paths; overrides the config.
    #[arg(long, value_name = "N")]
    pub paths: Option<usize>,
    /// Base seed; overrides the config.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Strategy to simulate.
    #[arg(long, value_enum, default_value = "optimal")]
    pub law: LawKind,
    /// Also write paths.csv with (path_id, tau, x_at_exit).
    #[arg(long)]
    pub per_path: bool,
}

#[derive(Args, Debug, Clone)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Targets to simulate; defaults to the config targets plus the minimum-variance point.
    #[arg(long, value_name = "LIST|RANGE", allow_hyphen_values = true)]
    pub z: Option<String>,
    /// Number of paths per target; overrides the config.
    #[arg(long, value_name = "N")]
    pub paths: Option<usize>,
    /// Base seed; overrides the config.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
}

const EXIT_USAGE: u8 = 64;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Solve(args) => commands::solve(args),
        Command::Frontier(args) => commands::frontier(args),
        Command::Simulate(args) => commands::simulate(args),
        Command::Validate(args) => commands::validate(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => report(err),
    }
}

fn report(err: CliError) -> ExitCode {
    let body = serde_json::json!({
        "error": err.code(),
        "message": err.to_string(),
        "exit_code": err.exit_code(),
    });
    eprintln!("{body}");
    ExitCode::from(err.exit_code())
}
