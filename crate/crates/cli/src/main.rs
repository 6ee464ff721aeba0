use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod manifest;

use commands::CliError;

/// Target-decoy FDR control for two-group studies.
#[derive(Parser, Debug)]
#[command(name = "tdfdr", author, version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the target-decoy procedure on a test-by-sample matrix
    Run(RunArgs),
    /// Run simulation experiments from a preset or a config file
    Simulate(SimulateArgs),
    /// BH or Storey q-value rejections on a matrix
    Baseline(BaselineArgs),
    /// Re-render a stored JSON report
    Report(ReportArgs),
}

#[derive(Args, Debug, Clone, serde::Serialize)]
pub struct MatrixArgs {
    /// Delimited matrix, one test per row
    #[arg(short, long)]
    pub input: PathBuf,

    /// Field separator: tab, comma, whitespace or a single character
    #[arg(long, default_value = "tab")]
    pub delimiter: String,

    /// Case columns: 1-based data columns ("1-3", "1,2,5") or header names
    #[arg(long)]
    pub cases: String,

    /// Control columns, same syntax as --cases
    #[arg(long)]
    pub controls: String,

    /// The first line holds data rather than column names
    #[arg(long)]
    pub no_header: bool,

    /// The first column holds data rather than test ids
    #[arg(long)]
    pub no_ids: bool,
}

#[derive(Args, Debug, Clone, serde::Serialize)]
pub struct RunArgs {
    #[command(flatten)]
    pub matrix: MatrixArgs,

    /// Score: t, tsigned, ranksum or ranksumsigned
    #[arg(long, default_value = "t")]
    pub score: String,

    /// Procedure variant: simplified, standard or adaptive
    #[arg(long, default_value = "simplified")]
    pub variant: String,

    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,

    /// Decoy to target ratio parameter (standard variant)
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,

    /// Decoys per test; all regroupings are used when there are no more than this
    #[arg(long, default_value_t = 49)]
    pub permutations: u64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output directory
    #[arg(short, long, default_value = ".")]
    pub output: PathBuf,
}

#[derive(Args, Debug, Clone, serde::Serialize)]
pub struct SimulateArgs {
    /// table1 .. table5
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    pub preset: Option<String>,

    /// TOML experiment file
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Replicates per scenario (presets only)
    #[arg(long, default_value_t = 100)]
    pub reps: usize,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Comma-separated report formats: tsv, json, md
    #[arg(long, default_value = "tsv,json,md")]
    pub format: String,

    #[arg(short, long, default_value = ".")]
    pub output: PathBuf,
}

#[derive(Args, Debug, Clone, serde::Serialize)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub matrix: MatrixArgs,

    /// bh or storey
    #[arg(long, default_value = "storey")]
    pub method: String,

    /// p-value source: t, ranksum or perm
    #[arg(long, default_value = "t")]
    pub pvalues: String,

    /// Upper-tail p-values (cases above controls) instead of two-sided
    #[arg(long)]
    pub one_sided: bool,

    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,

    /// Storey's lambda
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,

    /// Regroupings per test for pooled-permutation p-values
    #[arg(long, default_value_t = 10)]
    pub draws: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(short, long, default_value = ".")]
    pub output: PathBuf,
}

#[derive(Args, Debug, Clone, serde::Serialize)]
pub struct ReportArgs {
    /// report.json written by `simulate`
    #[arg(short, long)]
    pub input: PathBuf,

    /// tsv, json or md
    #[arg(long, default_value = "md")]
    pub format: String,

    /// Write here instead of standard output
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(CliError::EXIT_RANGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(CliError::EXIT_RANGE);
        }
    }
    let argv: Vec<String> = std::env::args().collect();
    let result = match &cli.command {
        Command::Run(args) => commands::run(args, &argv),
        Command::Simulate(args) => commands::simulate(args, &argv),
        Command::Baseline(args) => commands::baseline(args, &argv),
        Command::Report(args) => commands::report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
