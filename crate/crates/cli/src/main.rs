//! relprep: one executable chaining the pipeline stages
//! preprocess -> train/predict -> evaluate -> tukey -> report.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "relprep", version, about = "Preprocessing and evaluation pipeline for visual relationship predicate prediction")]
pub struct Cli {
    /// Artifact root (datasets/, models/, scores/, reports/). Falls back
    /// to the config file, then $RELPREP_OUT, then ./out.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// `key = value` config file; explicit flags win over file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic spatial-relation split (images + annotations).
    Synth(SynthArgs),
    /// Materialize one preprocessing method over a split.
    Preprocess(PreprocessArgs),
    /// Train the reference softmax classifier on an emitted dataset.
    Train(TrainArgs),
    /// Score a split with a trained model, writing a prediction file.
    Predict(PredictArgs),
    /// Recall@k and per-predicate recall for a prediction file.
    Evaluate(EvaluateArgs),
    /// Tukey HSD groupings over repeated-run recall results.
    Tukey(TukeyArgs),
    /// Join evaluation outputs into table-shaped reports.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Number of relationship instances (one image each).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Target split: train or test.
    #[arg(long)]
    split: Option<String>,
    /// Square image side in pixels.
    #[arg(long)]
    image_size: Option<u32>,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// Preprocessing method, e.g. Union, Union-WB-B, BlurSigma5.
    #[arg(long)]
    method: Option<String>,
    /// Split to preprocess: train, test, or zero_shot (derived on the
    /// fly from train and test when not materialized).
    #[arg(long)]
    split: Option<String>,
    /// Annotation file (defaults to the split's canonical location).
    #[arg(long)]
    annotations: Option<PathBuf>,
    /// Image root (defaults to the split's canonical location).
    #[arg(long)]
    images: Option<PathBuf>,
    /// Alternative Union-WB-and-B reading: grayscale Union-WB content on
    /// one channel plus the two box masks.
    #[arg(long)]
    union_wb_and_b_alt: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    method: Option<String>,
    /// Split to train on.
    #[arg(long)]
    split: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    momentum: Option<f64>,
    /// Phase schedule as `<lr>x<epochs>` entries, e.g.
    /// `0.001x5,0.001x5,0.00001x5`.
    #[arg(long)]
    phases: Option<String>,
    /// Checkpoint path (defaults to models/<method>.ckpt).
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    split: Option<String>,
    /// Checkpoint to load (defaults to models/<method>.ckpt).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Output prediction file (defaults to scores/<method>-<split>.csv).
    #[arg(long)]
    scores: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    split: Option<String>,
    /// Prediction file (defaults to scores/<method>-<split>.csv).
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Comma-separated recall cutoffs, e.g. 1,2,3,5,8,10.
    #[arg(long)]
    k: Option<String>,
    /// Architecture label recorded in the evaluation CSV.
    #[arg(long)]
    architecture: Option<String>,
}

#[derive(Debug, Args)]
pub struct TukeyArgs {
    /// CSV of architecture,method,run_index,recall rows.
    #[arg(long)]
    runs: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Evaluation CSVs to join (defaults to reports/eval-*.csv).
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    evals: Vec<PathBuf>,
    /// Error-tag CSV (instance_id,category) for the taxonomy table.
    #[arg(long)]
    error_tags: Option<PathBuf>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Err(err) = commands::run(cli) {
        eprintln!("error: {}", err.single_line());
        std::process::exit(err.code());
    }
}
