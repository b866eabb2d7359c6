//! Effective rank and its two aggregations over embedding sets.
//!
//! The effective rank of a spectrum σ is `exp(H(p))` with `p_i = σ_i / Σσ_j`
//! and `H` the Shannon entropy in nats. Zero singular values contribute
//! nothing to the entropy; no threshold is applied to small ones.

use thiserror::Error;

use crate::embedstore::EmbeddingSet;
use crate::error::ErrorCategory;
use crate::matrix::Matrix;
use crate::spectral::{
    dense_spectrum, spectrum_from_gram, GramAccumulator, SingularSpectrum, SpectralError,
    DEFAULT_SHARD_ROWS,
};

#[derive(Debug, Error, PartialEq)]
pub enum RankError {
    #[error("zero matrix has undefined effective rank")]
    ZeroMatrix,
    #[error("time sum of sequence {sequence} is not finite")]
    NonFiniteSum { sequence: usize },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

impl RankError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            RankError::ZeroMatrix | RankError::NonFiniteSum { .. } => ErrorCategory::Math,
            RankError::Spectral(e) => e.category(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveRankResult {
    /// `exp(entropy_nats)`, in `[1, spectrum_length]`.
    pub value: f64,
    pub entropy_nats: f64,
    pub spectrum_length: usize,
    /// Σσ before normalization.
    pub sigma_mass: f64,
}

pub fn effective_rank(spectrum: &SingularSpectrum) -> Result<EffectiveRankResult, RankError> {
    let mass = spectrum.sum();
    if mass.is_nan() || mass <= 0.0 {
        return Err(RankError::ZeroMatrix);
    }
    let mut entropy = 0.0;
    let mut positive = 0usize;
    for &s in spectrum.values() {
        if s == 0.0 {
            continue;
        }
        positive += 1;
        let p = s / mass;
        entropy -= p * p.ln();
    }
    let entropy = entropy.max(0.0);
    // Roundoff can push exp(H) a hair outside its exact bounds.
    let value = entropy.exp().clamp(1.0, positive as f64);
    Ok(EffectiveRankResult {
        value,
        entropy_nats: entropy,
        spectrum_length: spectrum.len(),
        sigma_mass: mass,
    })
}

/// Rows of the returned `n x d` matrix are the per-sequence time sums.
pub fn time_sum_matrix(set: &EmbeddingSet) -> Result<Matrix, RankError> {
    let mut z = Matrix::zeros(set.n_sequences(), set.dim());
    for (i, seq) in set.sequences().enumerate() {
        let sum = seq.time_sum();
        if sum.iter().any(|v| !v.is_finite()) {
            return Err(RankError::NonFiniteSum { sequence: i });
        }
        z.row_mut(i).copy_from_slice(&sum);
    }
    Ok(z)
}

/// Effective rank of the matrix of per-sequence time sums (sum, not mean).
pub fn rankme_t(set: &EmbeddingSet) -> Result<EffectiveRankResult, RankError> {
    let z = time_sum_matrix(set)?;
    effective_rank(&dense_spectrum(z.view())?)
}

/// Spectrum of all pooled frames via streaming Gram accumulation.
pub fn pooled_spectrum(set: &EmbeddingSet) -> Result<SingularSpectrum, RankError> {
    let acc = GramAccumulator::from_rows_sharded(set.pooled(), DEFAULT_SHARD_ROWS)?;
    Ok(spectrum_from_gram(&acc)?)
}

/// Effective rank of the concatenation of every frame of every sequence.
/// Sequence boundaries do not matter.
pub fn global_effective_rank(set: &EmbeddingSet) -> Result<EffectiveRankResult, RankError> {
    effective_rank(&pooled_spectrum(set)?)
}
