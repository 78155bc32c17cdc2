use std::path::PathBuf;
use std::process::ExitCode;

use affect_core::labels::Emotion;
use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod workspace;

/// Emotion classification, intensity regression, feature fusion and word
/// attributions for tweets.
#[derive(Parser, Debug)]
#[command(name = "affect", version)]
struct Cli {
    /// Seed for every random choice of the run.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Run configuration (TOML); defaults reproduce the published settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Working directory shared by all stages.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

fn emotion(s: &str) -> Result<Emotion, String> {
    s.parse().map_err(|e: affect_core::Error| e.to_string())
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum BowWeighting {
    Tfidf,
    Nbow,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the vocabulary and the aligned embedding table.
    Preprocess {
        /// Multi-label training files.
        #[arg(long)]
        ec: Vec<PathBuf>,
        /// Intensity training files (every emotion is read).
        #[arg(long)]
        eireg: Vec<PathBuf>,
        /// Pretrained vectors in word2vec text format.
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// Width of random vectors when no embedding file is given.
        #[arg(long, default_value_t = 100)]
        dim: usize,
        /// Word frequency list for hashtag splitting.
        #[arg(long)]
        lexicon: Option<PathBuf>,
    },
    /// Train the multi-label classifier.
    TrainClf {
        #[arg(long)]
        ec: PathBuf,
    },
    /// Train the intensity regressor for one emotion.
    TrainReg {
        #[arg(long)]
        eireg: PathBuf,
        #[arg(long, value_parser = emotion)]
        emotion: Emotion,
    },
    /// Write `[v0 ‖ ve]` of a network for every tweet.
    ExtractFeatures {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, required = true)]
        tweets: Vec<PathBuf>,
        /// Source name; defaults to the network type.
        #[arg(long)]
        source: Option<String>,
    },
    /// Validate an external feature CSV and register it as a source.
    IngestFeatures {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        source: String,
    },
    /// Fit the boosted-tree regressor on the registered feature sources.
    TrainFusion {
        #[arg(long)]
        eireg: PathBuf,
        #[arg(long, value_parser = emotion)]
        emotion: Emotion,
    },
    /// Predict with a network (`--model`) or a fusion model (`--fusion`).
    Predict {
        #[arg(long, conflicts_with = "fusion", required_unless_present = "fusion")]
        model: Option<PathBuf>,
        #[arg(long)]
        fusion: Option<PathBuf>,
        #[arg(long)]
        tweets: PathBuf,
        /// Output file name inside the working directory.
        #[arg(long)]
        name: Option<String>,
    },
    /// Shapley word attributions of an intensity model as an HTML heatmap.
    Explain {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        tweets: PathBuf,
        /// Only the first N tweets.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Score predictions against gold annotations.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// Restrict intensity scoring to one emotion.
        #[arg(long, value_parser = emotion)]
        emotion: Option<Emotion>,
        /// Report file stem.
        #[arg(long, default_value = "report")]
        name: String,
    },
    /// Bag-of-words ridge baseline for one emotion.
    Baseline {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, value_parser = emotion)]
        emotion: Emotion,
        #[arg(long, value_enum, default_value_t = BowWeighting::Tfidf)]
        weighting: BowWeighting,
    },
    /// Write a synthetic corpus with train/dev splits and word vectors.
    Synth {
        #[arg(long, default_value_t = 1200)]
        ec_tweets: usize,
        /// Intensity tweets per emotion.
        #[arg(long, default_value_t = 500)]
        eireg_tweets: usize,
        #[arg(long, default_value_t = 32)]
        dim: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
