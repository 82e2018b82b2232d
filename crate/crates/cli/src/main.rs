//! `tpsim`: transition probability similarity for citation networks.

mod args;
mod cmd;
mod manifest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tpsim_core::ErrorKind;

/// A problem with how the tool was invoked (exit status 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Parser)]
#[command(name = "tpsim", version, about = "Random-walk transition probability similarity for citation networks")]
struct Cli {
    /// Worker threads [default: all cores]
    #[arg(long, global = true, env = "TPSIM_WORKERS")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score paper pairs with one measure
    Compute(cmd::compute::ComputeArgs),
    /// Author-level similarity from first/last-authored papers
    Authorsim(cmd::authorsim::AuthorsimArgs),
    /// AUC and diagnostics against labeled pairs
    Eval(cmd::eval::EvalArgs),
    /// Runtime benchmark on stochastic block model networks
    Bench(cmd::bench::BenchArgs),
    /// Generate a stochastic block model network
    GenSbm(cmd::gen_sbm::GenSbmArgs),
}

const EXIT_INTERNAL: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<tpsim_core::Error>() {
            return match e.kind() {
                ErrorKind::Input => EXIT_INPUT,
                ErrorKind::Infeasible => EXIT_INFEASIBLE,
            };
        }
        if cause.is::<UsageError>() || cause.is::<csv::Error>() || cause.is::<std::io::Error>() {
            return EXIT_INPUT;
        }
    }
    EXIT_INTERNAL
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.workers {
        if n == 0 {
            anyhow::bail!(UsageError("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let workers = cli.workers.unwrap_or_else(rayon::current_num_threads);
    match cli.command {
        Command::Compute(a) => cmd::compute::run(a, workers),
        Command::Authorsim(a) => cmd::authorsim::run(a, workers),
        Command::Eval(a) => cmd::eval::run(a, workers),
        Command::Bench(a) => cmd::bench::run(a, workers),
        Command::GenSbm(a) => cmd::gen_sbm::run(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
