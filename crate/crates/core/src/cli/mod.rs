//! The `discre` command line.
//!
//! Every stage reads its inputs and writes new files. Values from
//! `--config file.toml` are spliced in ahead of the command-line flags, so
//! flags win.

mod config;
mod stages;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use log::{error, info};

pub use stages::{EmbeddingRecord, PairEmbedding};

use crate::error::Error;

/// Toolkit and checkpoint-format versions.
pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (checkpoint format 1)");

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "discre", version = VERSION, about = "Discourse relation embeddings from connective posteriors")]
#[command(args_override_self = true)]
pub struct Cli {
    /// TOML file with one table per stage; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// error, warn, info, debug or trace. Defaults to RUST_LOG, then info.
    #[arg(long, global = true, value_name = "LEVEL")]
    pub log_level: Option<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split messages into discourse arguments and connective pairs.
    Segment(SegmentArgs),
    /// Turn explicit pairs into weakly labeled training instances.
    GenInstances(GenInstancesArgs),
    /// Train the hierarchical encoder.
    Train(TrainArgs),
    /// Write DiscRE vectors for every adjacent pair of every message.
    Embed(EmbedArgs),
    /// Evaluate embeddings with a linear probe.
    Probe(ProbeArgs),
    /// Mean attention weight per word, grouped by connective status.
    AttnStats(AttnStatsArgs),
    /// Project embeddings onto two principal components.
    Project(ProjectArgs),
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct SegmentArgs {
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Connective posterior table (defaults to the built-in table).
    #[arg(long, value_name = "FILE")]
    pub posteriors: Option<PathBuf>,
    /// Keep only messages with one of these connectives (one per line).
    #[arg(long, value_name = "FILE")]
    pub keywords: Option<PathBuf>,
    /// At most this many messages per keyword; implies keyword filtering.
    #[arg(long)]
    pub cap: Option<usize>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct GenInstancesArgs {
    #[arg(long, value_name = "FILE")]
    pub segments: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub posteriors: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Development instances; without it every instance goes to --out.
    #[arg(long, value_name = "FILE")]
    pub dev: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct TrainArgs {
    #[arg(long, value_name = "FILE")]
    pub train: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub dev: Option<PathBuf>,
    /// Word vectors in GloVe text format.
    #[arg(long, value_name = "FILE")]
    pub vectors: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 200)]
    pub hidden: usize,
    #[arg(long, default_value_t = 0.3)]
    pub dropout: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// softmax-ce or sigmoid-bce.
    #[arg(long, default_value = "softmax-ce")]
    pub loss: String,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct EmbedArgs {
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub segments: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct ProbeArgs {
    /// pair or message.
    #[arg(long, default_value = "pair")]
    pub features: String,
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    /// Labeled data for cross-validation or a section split.
    #[arg(long, value_name = "FILE")]
    pub data: Option<PathBuf>,
    /// Number of cross-validation folds.
    #[arg(long, conflicts_with_all = ["train_split", "test_split"])]
    pub cv: Option<usize>,
    #[arg(long, value_name = "FILE", requires = "test_split")]
    pub train_split: Option<PathBuf>,
    #[arg(long, value_name = "FILE", requires = "train_split")]
    pub test_split: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub report: PathBuf,
    /// Segmentation table for message records (defaults to the built-in table).
    #[arg(long, value_name = "FILE")]
    pub posteriors: Option<PathBuf>,
    /// SVM regularization constant.
    #[arg(long = "svm-c", default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 200)]
    pub svm_epochs: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct AttnStatsArgs {
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub segments: PathBuf,
    /// Key connectives, one per line (defaults to the built-in keyword list).
    #[arg(long, value_name = "FILE")]
    pub keywords: Option<PathBuf>,
    /// Table whose other connectives form the non-key group.
    #[arg(long, value_name = "FILE")]
    pub posteriors: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct ProjectArgs {
    #[arg(long, value_name = "FILE")]
    pub embeddings: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// One point per pair (labeled by connective) instead of per message.
    #[arg(long)]
    pub pairs: bool,
}

fn init_logging(level: Option<&str>) {
    let mut builder = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"));
    if let Some(l) = level {
        builder.parse_filters(l);
    }
    let _ = builder.format_timestamp(None).try_init();
}

/// Parses `argv` (program name first), runs the stage and returns the
/// process exit code: 0 on success, 1 on usage errors, 2 on data errors.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match config::splice_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    init_logging(cli.log_level.as_deref());
    info!("discre {VERSION}");
    info!("resolved arguments: {:?}", cli.command);
    match stages::run(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => EXIT_USAGE,
                _ => EXIT_DATA,
            }
        }
    }
}
