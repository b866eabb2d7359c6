//! Unsupervised quality measures for frame embeddings produced by
//! self-supervised speech models.
//!
//! The crate computes two families of measures over dumps of frame
//! embeddings:
//!
//! * rank measures: the effective rank of a singular spectrum, applied either
//!   to per-utterance time sums ([`rankme_t`]) or to the pooled frames of all
//!   utterances ([`global_effective_rank`]);
//! * cluster measures: within-cluster sum of squares ([`wcss`]) and the
//!   Davies-Bouldin index ([`db_index`]) of a mini-batch k-means model.
//!
//! The [`correlation`] module joins per-checkpoint measures with downstream
//! scores and reports Pearson coefficients, and [`synth`] generates embedding
//! sets with planted rank and cluster structure for validation.

pub mod clustering;
pub mod correlation;
pub mod embedstore;
mod error;
pub mod matrix;
pub mod rank;
pub mod rng;
pub mod spectral;
pub mod synth;

pub use clustering::{
    db_index, fit_minibatch, kmeanspp_seed, wcss, wcss_per_frame, ClusterConfig, ClusterError,
    ClusterModel, ClusterQuality, SeedResult,
};
pub use correlation::{
    correlate, pearson, CorrelationError, CorrelationReport, DownstreamRow, DownstreamTable,
    MeasureRecord, ScoreKind,
};
pub use embedstore::{
    read_embeddings, subsample, write_embeddings, EmbeddingSet, FormatError, FrameSequence,
    Manifest, ManifestEntry, SampleSpec, SampleUnit,
};
pub use error::{Error, ErrorCategory};
pub use matrix::{MatRef, Matrix};
pub use rank::{effective_rank, global_effective_rank, rankme_t, EffectiveRankResult, RankError};
pub use spectral::{
    dense_spectrum, spectrum_from_gram, GramAccumulator, SingularSpectrum, SpectralError,
};
pub use synth::{generate, generate_cohort, Cohort, CohortSpec, SynthSpec};

/// Measures a sweep can compute, in their canonical CSV spelling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Measure {
    Wcss,
    DbIndex,
    RankmeT,
    Ger,
}

impl Measure {
    pub const ALL: [Measure; 4] = [
        Measure::Wcss,
        Measure::DbIndex,
        Measure::RankmeT,
        Measure::Ger,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Measure::Wcss => "wcss",
            Measure::DbIndex => "db_index",
            Measure::RankmeT => "rankme_t",
            Measure::Ger => "ger",
        }
    }

    pub fn is_cluster_measure(self) -> bool {
        matches!(self, Measure::Wcss | Measure::DbIndex)
    }
}

impl std::fmt::Display for Measure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Measure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "wcss" | "inertia" => Ok(Measure::Wcss),
            "db_index" | "db" | "davies_bouldin" => Ok(Measure::DbIndex),
            "rankme_t" | "rankmet" => Ok(Measure::RankmeT),
            "ger" | "global_effective_rank" => Ok(Measure::Ger),
            other => Err(format!("unknown measure `{other}`")),
        }
    }
}
