//! `mdpbd`: generate instances, partition them, solve for perturbation
//! matrices, verify and compare runs.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mdpbd::partition::Algorithm;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("solver aborted: {0}")]
    Aborted(String),
    #[error(transparent)]
    Core(#[from] mdpbd::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Parser, Debug)]
#[command(name = "mdpbd", version, about = "Optimal metric-DP perturbation matrices")]
struct Cli {
    /// Directory artifacts are written to.
    #[arg(long, global = true, env = "MDPBD_OUT", default_value = ".")]
    out: PathBuf,
    /// Cap on subproblem worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Raise log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build an instance and write instance.json.
    Gen(GenArgs),
    /// Partition an instance; writes partition.json and partition_stats.csv.
    Partition(PartitionArgs),
    /// Solve for a perturbation matrix; writes matrix.csv and summary.json.
    Solve(SolveArgs),
    /// Check a matrix against an instance's mDP constraints.
    Verify(VerifyArgs),
    /// Merge run summaries into one comparison CSV.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("dataset").required(true))]
pub struct GenArgs {
    /// Grid map as ROWSxCOLS cells.
    #[arg(long, group = "dataset", value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    /// Grid cell size in km.
    #[arg(long, default_value_t = 1.0)]
    cell_km: f64,
    /// Number of standard-normal synthetic records.
    #[arg(long, group = "dataset")]
    synthetic: Option<usize>,
    #[arg(long, default_value_t = 3)]
    dim: usize,
    /// `token,v1,...,vF` embedding file.
    #[arg(long, group = "dataset")]
    embeddings: Option<PathBuf>,
    /// Road network `id,lat,lon` nodes file (needs --road-edges).
    #[arg(long, group = "dataset", requires = "road_edges")]
    road_nodes: Option<PathBuf>,
    /// Road network `u,v[,length_km]` edges file.
    #[arg(long, requires = "road_nodes")]
    road_edges: Option<PathBuf>,
    /// Keep a seeded random subset of this many records.
    #[arg(long)]
    subsample: Option<usize>,
    /// Seed for synthetic data, subsampling and destination sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2.0)]
    eta: f64,
    #[arg(long, default_value_t = 10.0)]
    epsilon: f64,
    /// Use a seeded sample of this many records as outputs (default: all records).
    #[arg(long)]
    outputs: Option<usize>,
    /// Utility-loss model; defaults to destinations for grid and road data.
    #[arg(long, value_enum)]
    cost: Option<CostArg>,
    /// Number of sampled destinations for the destination cost model.
    #[arg(long, default_value_t = 100)]
    destinations: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum CostArg {
    Direct,
    Destinations,
}

#[derive(Args, Debug)]
pub struct PartitionArgs {
    /// Instance file (default: <out>/instance.json).
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long, value_parser = parse_algorithm, default_value = "bsc")]
    algorithm: Algorithm,
    /// Number of subsets.
    #[arg(short, long)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Method {
    Monolithic,
    Benders,
    Expmech,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "benders")]
    method: Method,
    /// Partition file for benders (default: <out>/partition.json).
    #[arg(long)]
    partition: Option<PathBuf>,
    /// Relative optimality gap to stop at.
    #[arg(long, default_value_t = 0.01)]
    xi: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    #[arg(long)]
    no_initial_cuts: bool,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Matrix CSV (default: <out>/matrix.csv).
    #[arg(long)]
    matrix: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Run directories or summary.json files.
    runs: Vec<PathBuf>,
    /// Output CSV (default: <out>/report.csv).
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (r, c) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected ROWSxCOLS, got {s:?}"))?;
    let r = r.trim().parse().map_err(|e| format!("rows: {e}"))?;
    let c = c.trim().parse().map_err(|e| format!("cols: {e}"))?;
    Ok((r, c))
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: mdpbd::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let ctx = commands::Context { out: cli.out, threads: cli.threads };
    let res = match cli.command {
        Command::Gen(a) => commands::gen(&ctx, a),
        Command::Partition(a) => commands::partition(&ctx, a),
        Command::Solve(a) => commands::solve(&ctx, a),
        Command::Verify(a) => commands::verify(&ctx, a),
        Command::Report(a) => commands::report(&ctx, a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
