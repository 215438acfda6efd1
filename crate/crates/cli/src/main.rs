//! `tda` — soft labels for unlabeled tabular datasets.
//!
//! Subcommands: `index` (build/add/show the public-dataset index), `rank`
//! (similarity ranking), `label` (end-to-end soft labeling), `benchmark`
//! (leave-one-out evaluation over labeled datasets), `eval` (metrics for
//! saved predictions).
//!
//! Exit codes: 0 success, 2 usage/validation, 3 candidate exhaustion,
//! 4 internal numeric failure. Set `TDA_LOG=debug|info` for diagnostics.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tda_core::Error;

#[derive(Parser)]
#[command(name = "tda", version, about = "Soft labeling for unlabeled tabular data")]
struct Cli {
    /// Root seed; every stochastic stage derives its own seed from it.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Worker threads for independent units (1 = fully sequential).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Manage the public-dataset index.
    Index {
        #[command(subcommand)]
        action: IndexAction,
    },
    /// Rank index entries by similarity to a private dataset.
    Rank(RankArgs),
    /// Generate soft labels for a private dataset.
    Label(LabelArgs),
    /// Leave-one-out benchmark over labeled datasets.
    Benchmark(BenchmarkArgs),
    /// Compute metrics for saved predictions against ground truth.
    Eval(EvalArgs),
}

#[derive(Subcommand)]
enum IndexAction {
    /// Validate every manifest in a directory and write the index file.
    Build {
        /// Directory holding one JSON manifest per dataset.
        #[arg(long)]
        dir: PathBuf,
    },
    /// Validate one manifest and append it to an existing index.
    Add {
        #[arg(long)]
        dir: PathBuf,
        /// Manifest file to add (copied into the index directory).
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Print the entries of an index.
    Show {
        #[arg(long)]
        dir: PathBuf,
    },
}

#[derive(Args)]
struct RankArgs {
    /// Private dataset CSV.
    #[arg(long)]
    private: PathBuf,
    /// Label column to ignore when the private file carries one.
    #[arg(long)]
    label_column: Option<String>,
    /// Index directory.
    #[arg(long)]
    index: PathBuf,
    /// Emit only the first N rows.
    #[arg(long)]
    top: Option<usize>,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

#[derive(Args)]
struct LabelArgs {
    #[arg(long)]
    private: PathBuf,
    /// Label column to strip from the private file (kept out of the run).
    #[arg(long)]
    label_column: Option<String>,
    #[arg(long)]
    index: PathBuf,
    /// top1 (one dataset, its best m models) or topn (n datasets, one model each).
    #[arg(long)]
    method: String,
    /// Best models taken from the selected dataset (top1).
    #[arg(long)]
    m: Option<usize>,
    /// Successful transformations to collect (topn).
    #[arg(long)]
    n: Option<usize>,
    /// Transformation training epochs (default 1000).
    #[arg(long)]
    epochs: Option<usize>,
    /// Transformation batch size (default 256).
    #[arg(long)]
    batch_size: Option<usize>,
    /// Candidates tried before giving up (default: index size).
    #[arg(long)]
    max_fallbacks: Option<usize>,
    /// Resolve exact vote ties as inlier or outlier.
    #[arg(long, default_value = "inlier")]
    tie_policy: String,
    /// Output directory (labels.csv, run.json, timings.csv).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Directory of labeled dataset CSVs.
    #[arg(long)]
    datasets: PathBuf,
    /// Label column in those CSVs.
    #[arg(long, default_value = "label")]
    label_column: String,
    /// Prebuilt index directory; omitted = best models are grid-searched.
    #[arg(long)]
    index: Option<PathBuf>,
    /// Comma-separated: top1,topn,avg_od,default_od,best_od.
    #[arg(long)]
    methods: String,
    /// Transformation training epochs (default 1000).
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Predicted labels: single-column CSV with a "label" header.
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth dataset CSV.
    #[arg(long)]
    truth: PathBuf,
    /// Label column in the truth file.
    #[arg(long, default_value = "label")]
    truth_label_column: String,
    /// Optional per-sample scores (single-column CSV) for the AUC metrics.
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Write the report JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Exhausted { .. } => 3,
        Error::NonConvergence { .. }
        | Error::Divergence { .. }
        | Error::NonFiniteLoss
        | Error::DegenerateData(_) => 4,
        Error::Io { .. } => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TDA_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Index { action } => match action {
            IndexAction::Build { dir } => commands::index_build(&dir),
            IndexAction::Add { dir, manifest } => commands::index_add(&dir, &manifest),
            IndexAction::Show { dir } => commands::index_show(&dir),
        },
        Command::Rank(args) => commands::rank(&args),
        Command::Label(args) => commands::label(&args, cli.seed, cli.threads),
        Command::Benchmark(args) => commands::benchmark(&args, cli.seed, cli.threads),
        Command::Eval(args) => commands::eval(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
