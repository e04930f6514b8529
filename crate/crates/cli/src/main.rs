//! `pagediff`: batch near-duplicate detection over versioned page corpora.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 bad usage, 3 missing input,
//! 4 malformed configuration.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "pagediff", version, about = "Explainable near-duplicate detection for versioned web pages")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by all subcommands. Each can also be set through the
/// environment variable shown in `--help`.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSONL file or site directory tree (for `report`: a `process` output directory).
    #[arg(long, global = true, env = "PAGEDIFF_INPUT")]
    pub input: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "PAGEDIFF_OUT", default_value = "pagediff-out")]
    pub out: PathBuf,
    /// Keep this percentage of sites, sampled with --seed.
    #[arg(long, global = true, env = "PAGEDIFF_SAMPLE_PCT")]
    pub sample_pct: Option<f64>,
    #[arg(long, global = true, env = "PAGEDIFF_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Consecutive diffs aligned together; 0 disables alignment.
    #[arg(long, global = true, env = "PAGEDIFF_CHUNK_SIZE", default_value_t = 10)]
    pub chunk_size: usize,
    /// Time budget per diff in milliseconds.
    #[arg(long, global = true, env = "PAGEDIFF_BUDGET_MS", default_value_t = 1000)]
    pub budget_ms: u64,
    /// TOML rule file merged over the built-in annotation rules.
    #[arg(long, global = true, env = "PAGEDIFF_RULES")]
    pub rules: Option<PathBuf>,
    /// Worker threads (default: one per core).
    #[arg(long, global = true, env = "PAGEDIFF_JOBS")]
    pub jobs: Option<usize>,
    #[arg(long, global = true, env = "PAGEDIFF_FORMAT", value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Apply the exclusion filters and write the surviving histories.
    Ingest,
    /// Diff, align and annotate every site; write templates, index and statistics.
    Process,
    /// Summarise a `process` output directory.
    Report,
    /// Near-duplicate share for a range of chunk sizes.
    Sensitivity {
        #[arg(long, value_delimiter = ',', default_value = "0,2,5,10,20,50,100")]
        chunks: Vec<usize>,
    },
    /// Diff similarity against shingle Jaccard and its MinHash estimate.
    CompareSimilarity {
        #[arg(long, value_delimiter = ',', default_value = "3,5,7")]
        k: Vec<usize>,
        #[arg(long, default_value_t = 256)]
        num_hashes: usize,
    },
    /// Bitcoin addresses hidden in attributes and scripts.
    ScanBitcoin {
        /// Scan every version instead of only the oldest.
        #[arg(long)]
        all_versions: bool,
    },
    /// Title changes per site, classified against disruption patterns.
    Titles {
        /// TOML file with extra `[[pattern]]` entries.
        #[arg(long)]
        patterns: Option<PathBuf>,
    },
    /// Average change interval and visible lifespan per site.
    Dynamics,
    /// Print the effective annotation rules as TOML.
    DumpRules,
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    MissingInput(String),
    Config(String),
    Other(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Other(_) => 1,
            Failure::Usage(_) => 2,
            Failure::MissingInput(_) => 3,
            Failure::Config(_) => 4,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage: {m}"),
            Failure::MissingInput(m) => write!(f, "missing input: {m}"),
            Failure::Config(m) => write!(f, "bad configuration: {m}"),
            Failure::Other(e) => write!(f, "{e:#}"),
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.common.jobs {
        if n == 0 {
            return Err(Failure::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Other(e.into()))?;
    }
    let c = &cli.common;
    match cli.command {
        Command::Ingest => commands::ingest(c),
        Command::Process => commands::process(c),
        Command::Report => commands::report(c),
        Command::Sensitivity { chunks } => commands::sensitivity(c, &chunks),
        Command::CompareSimilarity { k, num_hashes } => commands::compare_similarity(c, &k, num_hashes),
        Command::ScanBitcoin { all_versions } => commands::scan_bitcoin(c, all_versions),
        Command::Titles { patterns } => commands::titles(c, patterns.as_deref()),
        Command::Dynamics => commands::dynamics(c),
        Command::DumpRules => commands::dump_rules(c),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("pagediff: {f}");
            ExitCode::from(f.code())
        }
    }
}
