use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod docs;

/// RB allocation for multi-slice Open RAN: generate scenarios, solve,
/// verify and benchmark.
#[derive(Debug, Parser)]
#[command(name = "ranslice", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a scenario document.
    Gen(GenArgs),
    /// Solve a scenario and write a verified solution document.
    Solve(SolveArgs),
    /// Re-verify a solution document against its scenario.
    Verify(VerifyArgs),
    /// Print tables from a solution document or a bench CSV.
    Report(ReportArgs),
    /// Run solvers over a list of instance sizes and write CSV.
    Bench(BenchArgs),
    /// Export the lowered QUBO of a scenario as a coefficient list.
    Qubo(QuboArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Number of gNodeBs.
    #[arg(long, default_value_t = 4)]
    gnbs: u32,
    /// RB pool sizes, one per gNodeB, or a single total split evenly.
    /// Defaults to 9,12,11,10 with four gNodeBs, else 10 each.
    #[arg(long, value_delimiter = ',')]
    rbs: Option<Vec<u32>>,
    /// Users per gNodeB, or a single total split evenly.
    /// Defaults to 8,7,6,7 with four gNodeBs, else 5 each.
    #[arg(long, value_delimiter = ',')]
    users: Option<Vec<u32>>,
    /// Fraction of each cell's users in the URLLC slice.
    #[arg(long, default_value_t = 0.5)]
    urllc_frac: f64,
    /// Per-user RB cap.
    #[arg(long, default_value_t = 3)]
    kmax: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Side of the square deployment area, metres.
    #[arg(long, default_value_t = 1000.0)]
    area: f64,
    /// Cell coverage radius, metres.
    #[arg(long, default_value_t = 300.0)]
    radius: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolverArg {
    Exact,
    Greedy,
    Sa,
    Remote,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_enum)]
    solver: SolverArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Time limit in seconds (exact search, remote polling).
    #[arg(long, default_value_t = 60.0)]
    time_limit: f64,
    /// Annealing restarts.
    #[arg(long)]
    reads: Option<usize>,
    /// Sweeps per annealing restart.
    #[arg(long)]
    sweeps: Option<usize>,
    /// Sampler service base URL; an in-process loopback service is used
    /// when omitted.
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    solution: PathBuf,
    /// Print the full report as JSON instead of a summary.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Solution document: per-gNodeB and per-user tables.
    #[arg(long, conflicts_with = "csv", required_unless_present = "csv")]
    solution: Option<PathBuf>,
    /// Bench CSV: median wall time and objective per solver and size.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Comma-separated GNBSxRBSxUSERS list, or a preset: reference, sweep5k, oru550.
    #[arg(long, default_value = "sweep5k")]
    sizes: String,
    #[arg(long, value_delimiter = ',', default_value = "greedy,sa")]
    solvers: Vec<String>,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Exact search time limit per run, seconds.
    #[arg(long, default_value_t = 10.0)]
    time_limit: f64,
    #[arg(long)]
    reads: Option<usize>,
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long)]
    csv: PathBuf,
}

#[derive(Debug, Args)]
struct QuboArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Quantization step for rate rows, bits/s.
    #[arg(long, default_value_t = 1000.0)]
    rate_quantum: f64,
    /// Penalty weight; defaults to the smallest admissible value.
    #[arg(long)]
    penalty: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Solve(a) => commands::solve(a),
        Command::Verify(a) => commands::verify(a),
        Command::Report(a) => commands::report(a),
        Command::Bench(a) => commands::bench(a),
        Command::Qubo(a) => commands::qubo(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::EXIT_INPUT)
        }
    }
}
