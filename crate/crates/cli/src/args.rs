use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ssleval_core::{ClusterConfig, Measure, SampleSpec, SampleUnit};

#[derive(Debug, Parser)]
#[command(
    name = "ssleval",
    version,
    about = "Rank and cluster-quality measures for frame embeddings"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Effective rank (RankMe-t or global) of one EMBD file.
    Rank(RankArgs),
    /// Fit mini-batch k-means on one EMBD file and report WCSS and Davies-Bouldin.
    Cluster(ClusterArgs),
    /// Compute measures for every entry of a manifest.
    Sweep(SweepArgs),
    /// Pearson correlations between a measures CSV and downstream scores.
    Correlate(CorrelateArgs),
    /// Generate synthetic embeddings.
    #[command(subcommand)]
    Synth(SynthCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RankMeasure {
    #[value(name = "rankme-t", alias = "rankme_t")]
    RankmeT,
    Ger,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UnitArg {
    Frames,
    Sequences,
}

impl From<UnitArg> for SampleUnit {
    fn from(u: UnitArg) -> Self {
        match u {
            UnitArg::Frames => SampleUnit::Frames,
            UnitArg::Sequences => SampleUnit::Sequences,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    /// Frame budget; 0 keeps every frame. One hour at 50 frames/s is 180000.
    #[arg(long, default_value_t = 0)]
    pub max_frames: usize,
    #[arg(long, value_enum, default_value_t = UnitArg::Sequences)]
    pub sample_unit: UnitArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SampleArgs {
    pub fn spec(&self) -> SampleSpec {
        SampleSpec::new(self.max_frames, self.seed, self.sample_unit.into())
    }
}

#[derive(Debug, Clone, Args)]
pub struct ClusterOpts {
    #[arg(long, default_value_t = 1024)]
    pub k: usize,
    #[arg(long, default_value_t = 10240)]
    pub batch_frames: usize,
    #[arg(long, default_value_t = 300)]
    pub max_iter: usize,
    /// Convergence threshold on centroid movement, relative to the RMS centroid norm.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    /// Lower k to the number of distinct frames instead of failing.
    #[arg(long)]
    pub allow_k_reduction: bool,
}

impl ClusterOpts {
    pub fn config(&self, seed: u64) -> ClusterConfig {
        ClusterConfig {
            k: self.k,
            batch_frames: self.batch_frames,
            max_iterations: self.max_iter,
            center_move_tol: self.tol,
            seed,
            allow_k_reduction: self.allow_k_reduction,
        }
    }
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub measure: RankMeasure,
    #[command(flatten)]
    pub sample: SampleArgs,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub cluster: ClusterOpts,
    #[command(flatten)]
    pub sample: SampleArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Measures to compute, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "wcss,db_index,rankme_t,ger"
    )]
    pub measure: Vec<Measure>,
    #[command(flatten)]
    pub cluster: ClusterOpts,
    #[command(flatten)]
    pub sample: SampleArgs,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Measures CSV; failures go to `<out>.errors.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// Measures CSV produced by `sweep`.
    #[arg(long)]
    pub measures: PathBuf,
    /// Downstream scores CSV.
    #[arg(long)]
    pub downstream: PathBuf,
    #[arg(long)]
    pub task: String,
    /// Checkpoint step whose measures are correlated.
    #[arg(long)]
    pub measure_step: i64,
    /// Descriptive name of the score column (e.g. the step scores were taken at).
    #[arg(long)]
    pub score_label: Option<String>,
    /// Restrict to one layer; every layer present is reported otherwise.
    #[arg(long)]
    pub layer: Option<i64>,
    /// Report CSV; a JSON mirror is written next to it with a `.json` extension.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum SynthCommand {
    /// One EMBD file with planted rank and optional clusters.
    Set(SynthSetArgs),
    /// A cohort of EMBD files, a manifest and a downstream CSV with planted scores.
    Cohort(SynthCohortArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ShapeArgs {
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    #[arg(long, default_value_t = 100)]
    pub sequences: usize,
    #[arg(long, default_value_t = 100)]
    pub frames_per_seq: usize,
    /// Amplitude of isotropic noise added to every frame.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Number of planted clusters; 0 draws unclustered frames.
    #[arg(long, default_value_t = 0)]
    pub clusters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SynthSetArgs {
    #[arg(long)]
    pub rank: usize,
    #[command(flatten)]
    pub shape: ShapeArgs,
    /// Output EMBD file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthCohortArgs {
    #[arg(long, default_value_t = 12)]
    pub models: usize,
    #[arg(long, default_value_t = 4)]
    pub rank_low: usize,
    #[arg(long, default_value_t = 48)]
    pub rank_high: usize,
    /// Bound on the uniform perturbation added to each planted score.
    #[arg(long, default_value_t = 0.5)]
    pub score_noise: f64,
    #[arg(long, default_value = "synthetic")]
    pub task: String,
    /// Checkpoint step recorded in the manifest.
    #[arg(long, default_value_t = 0)]
    pub step: i64,
    /// Layer recorded in the manifest.
    #[arg(long, default_value_t = 0)]
    pub layer: i64,
    #[command(flatten)]
    pub shape: ShapeArgs,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}
