use thiserror::Error;

use crate::clustering::ClusterError;
use crate::correlation::CorrelationError;
use crate::embedstore::FormatError;
use crate::rank::RankError;
use crate::spectral::SpectralError;

/// Coarse failure classes; the CLI maps these onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Unreadable files and malformed inputs.
    Format,
    /// Numerically undefined results (zero matrix, degenerate centroids).
    Math,
    /// Inputs that violate an operation's preconditions.
    Precondition,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Correlation(#[from] CorrelationError),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Format(_) => ErrorCategory::Format,
            Error::Spectral(e) => e.category(),
            Error::Rank(e) => e.category(),
            Error::Cluster(e) => e.category(),
            Error::Correlation(e) => e.category(),
        }
    }
}
