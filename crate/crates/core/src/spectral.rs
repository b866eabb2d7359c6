//! Singular spectra of frame matrices.
//!
//! Two independent routes produce the same spectrum:
//!
//! * [`dense_spectrum`] runs a one-sided (Hestenes) Jacobi SVD directly on the
//!   matrix. It needs the whole matrix in memory and serves as the reference.
//! * [`GramAccumulator`] streams rows into the `M x M` Gram matrix `AᵀA`, and
//!   [`spectrum_from_gram`] takes square roots of its eigenvalues, found with
//!   a cyclic Jacobi eigensolver. Memory is `O(M²)` regardless of row count.
//!
//! Neither route centers the data.

use rayon::prelude::*;
use thiserror::Error;

use crate::error::ErrorCategory;
use crate::matrix::{dot, MatRef, Matrix};

/// Relative threshold below which negative Gram eigenvalues are treated as
/// roundoff and clamped to zero.
pub const PSD_TOLERANCE: f64 = 1e-9;

const MAX_SWEEPS: usize = 80;

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("matrix has no rows or no columns")]
    EmptyMatrix,
    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("dimension mismatch: expected {expected} columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("accumulator has not seen any rows")]
    EmptyAccumulator,
    #[error("gram eigenvalue {value:e} below -{threshold:e}; accumulation is corrupt")]
    NegativeEigenvalue { value: f64, threshold: f64 },
}

impl SpectralError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            SpectralError::NegativeEigenvalue { .. } => ErrorCategory::Math,
            _ => ErrorCategory::Precondition,
        }
    }
}

/// Singular values sorted nonincreasing, one per `min(rows, cols)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularSpectrum {
    values: Vec<f64>,
    source_rows: usize,
    source_cols: usize,
}

impl SingularSpectrum {
    /// Wraps precomputed singular values, sorting them nonincreasing.
    ///
    /// Panics on negative or non-finite values.
    pub fn from_values(mut values: Vec<f64>, source_rows: usize, source_cols: usize) -> Self {
        assert!(
            values.iter().all(|v| v.is_finite() && *v >= 0.0),
            "singular values must be finite and nonnegative"
        );
        values.sort_by(|a, b| b.total_cmp(a));
        Self {
            values,
            source_rows,
            source_cols,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn source_rows(&self) -> usize {
        self.source_rows
    }

    pub fn source_cols(&self) -> usize {
        self.source_cols
    }

    pub fn largest(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Σσ, the mass used to normalize the spectrum.
    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Singular values of `matrix` by one-sided Jacobi rotations.
pub fn dense_spectrum(matrix: MatRef<'_>) -> Result<SingularSpectrum, SpectralError> {
    let (n, m) = (matrix.rows(), matrix.cols());
    if n == 0 || m == 0 {
        return Err(SpectralError::EmptyMatrix);
    }
    check_finite(matrix)?;

    // Orthogonalize the shorter dimension: columns of A when N >= M, columns
    // of Aᵀ (rows of A) otherwise. Vectors are stored contiguously.
    let mut vecs: Vec<Vec<f64>> = if n >= m {
        (0..m)
            .map(|j| (0..n).map(|i| matrix.get(i, j)).collect())
            .collect()
    } else {
        matrix.row_iter().map(<[f64]>::to_vec).collect()
    };
    hestenes_jacobi(&mut vecs);
    let values = vecs.iter().map(|v| dot(v, v).sqrt()).collect();
    Ok(SingularSpectrum::from_values(values, n, m))
}

fn check_finite(matrix: MatRef<'_>) -> Result<(), SpectralError> {
    if let Some(pos) = matrix.as_slice().iter().position(|v| !v.is_finite()) {
        let cols = matrix.cols();
        return Err(SpectralError::NonFinite {
            row: pos / cols,
            col: pos % cols,
        });
    }
    Ok(())
}

/// Rotates pairs of vectors until all are mutually orthogonal; their norms are
/// then the singular values.
fn hestenes_jacobi(vecs: &mut [Vec<f64>]) {
    let k = vecs.len();
    let tol = f64::EPSILON;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..k {
            for q in (p + 1)..k {
                let (lo, hi) = vecs.split_at_mut(q);
                let (vp, vq) = (&mut lo[p], &mut hi[0]);
                let alpha = dot(vp, vp);
                let beta = dot(vq, vq);
                let gamma = dot(vp, vq);
                if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for (x, y) in vp.iter_mut().zip(vq.iter_mut()) {
                    let (a, b) = (*x, *y);
                    *x = c * a - s * b;
                    *y = s * a + c * b;
                }
            }
        }
        if !rotated {
            return;
        }
    }
    log::warn!("one-sided Jacobi did not converge in {MAX_SWEEPS} sweeps");
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, unsorted.
///
/// Only the upper triangle of `a` is trusted; it is mirrored before rotating.
pub fn symmetric_eigenvalues(mut a: Matrix) -> Vec<f64> {
    let n = a.rows();
    assert_eq!(n, a.cols(), "matrix must be square");
    for i in 0..n {
        for j in 0..i {
            a[(i, j)] = a[(j, i)];
        }
    }
    let scale: f64 = (0..n)
        .map(|i| a[(i, i)].abs())
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let floor = 1e-20 * scale;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                if apq.abs() <= floor || apq.abs() <= f64::EPSILON * (app * aqq).abs().sqrt() {
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.is_infinite() {
                    0.5 / theta
                } else {
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[(r, p)];
                    let arq = a[(r, q)];
                    let new_p = c * arp - s * arq;
                    let new_q = s * arp + c * arq;
                    a[(r, p)] = new_p;
                    a[(p, r)] = new_p;
                    a[(r, q)] = new_q;
                    a[(q, r)] = new_q;
                }
                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
            }
        }
        if !rotated {
            break;
        }
    }
    (0..n).map(|i| a[(i, i)]).collect()
}

/// Running `AᵀA` over streamed rows, accumulated in binary64.
///
/// Only the upper triangle is updated; the lower triangle is a mirror, so the
/// stored matrix is exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct GramAccumulator {
    dim: usize,
    gram: Matrix,
    rows_seen: usize,
}

impl GramAccumulator {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            gram: Matrix::zeros(dim, dim),
            rows_seen: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows_seen(&self) -> usize {
        self.rows_seen
    }

    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.gram[(i, i)]).sum()
    }

    /// Adds `batchᵀ·batch`.
    pub fn accumulate(&mut self, batch: MatRef<'_>) -> Result<(), SpectralError> {
        if batch.rows() == 0 {
            return Ok(());
        }
        if batch.cols() != self.dim {
            return Err(SpectralError::DimensionMismatch {
                expected: self.dim,
                got: batch.cols(),
            });
        }
        check_finite(batch)?;
        let m = self.dim;
        let g = self.gram.as_mut_slice();
        for row in batch.row_iter() {
            for i in 0..m {
                let ri = row[i];
                if ri == 0.0 {
                    continue;
                }
                let g_row = &mut g[i * m + i..(i + 1) * m];
                for (gij, &rj) in g_row.iter_mut().zip(&row[i..]) {
                    *gij += ri * rj;
                }
            }
        }
        self.rows_seen += batch.rows();
        self.mirror();
        Ok(())
    }

    /// Adds another accumulator's Gram matrix (shard merge).
    pub fn merge(&mut self, other: &GramAccumulator) -> Result<(), SpectralError> {
        if other.dim != self.dim {
            return Err(SpectralError::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        for (a, b) in self
            .gram
            .as_mut_slice()
            .iter_mut()
            .zip(other.gram.as_slice())
        {
            *a += b;
        }
        self.rows_seen += other.rows_seen;
        Ok(())
    }

    /// Accumulates `frames` in fixed shards of `shard_rows` rows, filled in
    /// parallel and merged in shard order. The result depends only on the
    /// input and `shard_rows`, never on the thread count.
    pub fn from_rows_sharded(frames: MatRef<'_>, shard_rows: usize) -> Result<Self, SpectralError> {
        let dim = frames.cols();
        let shard_rows = shard_rows.max(1);
        let data = frames.as_slice();
        let shards: Vec<Result<GramAccumulator, SpectralError>> = data
            .par_chunks(shard_rows * dim.max(1))
            .map(|chunk| {
                let mut acc = GramAccumulator::new(dim);
                acc.accumulate(MatRef::new(chunk.len() / dim.max(1), dim, chunk))?;
                Ok(acc)
            })
            .collect();
        let mut total = GramAccumulator::new(dim);
        for shard in shards {
            total.merge(&shard?)?;
        }
        Ok(total)
    }

    fn mirror(&mut self) {
        let m = self.dim;
        for i in 0..m {
            for j in 0..i {
                self.gram[(i, j)] = self.gram[(j, i)];
            }
        }
    }
}

/// Default shard size for [`GramAccumulator::from_rows_sharded`].
pub const DEFAULT_SHARD_ROWS: usize = 4096;

/// Singular values of the accumulated rows: square roots of the Gram
/// eigenvalues, clamped at zero within `PSD_TOLERANCE × trace`.
pub fn spectrum_from_gram(acc: &GramAccumulator) -> Result<SingularSpectrum, SpectralError> {
    if acc.rows_seen == 0 {
        return Err(SpectralError::EmptyAccumulator);
    }
    let threshold = PSD_TOLERANCE * acc.trace();
    let mut eig = symmetric_eigenvalues(acc.gram.clone());
    eig.sort_by(|a, b| b.total_cmp(a));
    if let Some(&lowest) = eig.last() {
        if lowest < -threshold {
            return Err(SpectralError::NegativeEigenvalue {
                value: lowest,
                threshold,
            });
        }
    }
    let len = acc.rows_seen.min(acc.dim);
    let values = eig
        .into_iter()
        .take(len)
        .map(|l| l.max(0.0).sqrt())
        .collect();
    Ok(SingularSpectrum::from_values(
        values,
        acc.rows_seen,
        acc.dim,
    ))
}
