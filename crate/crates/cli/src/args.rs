use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use progression_core::codec::Method;

#[derive(Debug, Parser)]
#[command(
    name = "progression",
    version,
    about = "Progression-based temporal action detection pipelines"
)]
pub struct Cli {
    /// Master seed; every random draw derives from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of progression ranks K.
    #[arg(long = "k", global = true)]
    pub ranks: Option<u32>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// TOML configuration file; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Upper bound on videos processed in parallel.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic videos: annotations plus one sequence file per video.
    Simulate(SimulateArgs),
    /// Per-frame progression labels for the complete actions of an annotation file.
    Label(LabelArgs),
    /// Train one progression head on synthetic features.
    TrainToy(TrainArgs),
    /// Train every head type on identical data and tabulate MAE and detection mAP.
    CompareMethods(CompareArgs),
    /// Detect actions in sequence files.
    Detect(DetectArgs),
    /// Class-agnostic proposals from sequence files.
    Propose(DetectArgs),
    /// mAP of detections against annotations.
    EvalDet(EvalDetArgs),
    /// Average recall of proposals against annotations.
    EvalProp(EvalPropArgs),
    /// Progression MAE of per-frame predictions.
    EvalMae(EvalMaeArgs),
    /// Merge evaluation reports into one table.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Background {
    Uniform,
    Mid,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 4)]
    pub videos: usize,
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long)]
    pub actions: Option<usize>,
    #[arg(long)]
    pub classes: Option<usize>,
    /// Progression noise standard deviation in ranks.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Share of actions that stop before completion.
    #[arg(long)]
    pub incomplete: Option<f64>,
    #[arg(long, value_enum)]
    pub background: Option<Background>,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    #[arg(long)]
    pub annotations: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub method: Option<Method>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub train_samples: Option<usize>,
    #[arg(long)]
    pub eval_samples: Option<usize>,
    /// Feature noise standard deviation.
    #[arg(long)]
    pub noise: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Simulated videos for the detection column.
    #[arg(long)]
    pub videos: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub train_samples: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Thumos14,
    Dfmad70,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Sequence files, or directories holding `*.seq` files.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub min_len: Option<usize>,
    #[arg(long)]
    pub start_max: Option<f64>,
    #[arg(long)]
    pub end_min: Option<f64>,
    #[arg(long)]
    pub iou_threshold: Option<f64>,
    #[arg(long)]
    pub max_candidates: Option<usize>,
    /// Detect on this many evenly sampled frames.
    #[arg(long)]
    pub sample: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalDetArgs {
    #[arg(long)]
    pub annotations: PathBuf,
    /// Detection files, or directories holding them.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub iou: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct EvalPropArgs {
    #[arg(long)]
    pub annotations: PathBuf,
    /// Proposal files, or directories holding them.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Proposal budgets per video.
    #[arg(long, value_delimiter = ',')]
    pub an: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct EvalMaeArgs {
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub predictions: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
}
