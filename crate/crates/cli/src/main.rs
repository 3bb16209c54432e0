//! Command-line front end: training, optimization, relaxation curves and
//! the scaling benchmark.

mod bench;
mod data;
mod optimize;
mod relax_curves;
mod train;

use std::fs::OpenOptions;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Solver(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Data(_) => 3,
            Self::Solver(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Usage(m) | Self::Data(m) | Self::Solver(m) => m,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "relaxnet", version, about = "Global optimization of problems with embedded neural networks")]
struct Cli {
    /// Seed for sampling, data splits and weight initialization.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for branch-and-bound (1 = deterministic serial mode).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Append the run summary to this file.
    #[arg(long, global = true)]
    log: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a network on a CSV dataset or on sampled peaks data.
    Train(train::TrainArgs),
    /// Solve a problem file to global optimality.
    Optimize(optimize::OptimizeArgs),
    /// Write relaxation curves of tanh over a box.
    Relax(relax_curves::RelaxArgs),
    /// Train and optimize a grid of network sizes.
    Bench(bench::BenchArgs),
}

/// Shared settings passed to every subcommand.
pub struct Global {
    pub seed: u64,
    pub threads: usize,
    log: Option<PathBuf>,
}

impl Global {
    /// Print a summary line and mirror it to the log file.
    pub fn say(&self, line: &str) -> CliResult<()> {
        println!("{line}");
        if let Some(path) = &self.log {
            let mut f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| CliError::Data(format!("cannot open log {}: {e}", path.display())))?;
            writeln!(f, "{line}").map_err(|e| CliError::Data(format!("cannot write log: {e}")))?;
        }
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads == 0 {
        eprintln!("error: --threads must be at least 1");
        return ExitCode::from(2);
    }
    let global = Global {
        seed: cli.seed,
        threads: cli.threads,
        log: cli.log,
    };
    let result = match cli.command {
        Command::Train(a) => train::run(&a, &global),
        Command::Optimize(a) => optimize::run(&a, &global),
        Command::Relax(a) => relax_curves::run(&a, &global),
        Command::Bench(a) => bench::run(&a, &global),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

/// Parse a comma-separated list such as `2,47,1`.
pub fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> CliResult<Vec<T>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("invalid {what} `{s}`")))
        })
        .collect()
}
