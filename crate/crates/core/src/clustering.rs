//! Mini-batch k-means with k-means++ seeding, and the two cluster-quality
//! measures computed from a fitted model: inertia (WCSS) and the
//! Davies-Bouldin index.
//!
//! Frames are clustered as-is; there is no normalization or whitening.
//! Nearest-centroid ties go to the lowest centroid index. Every reduction
//! over frames is performed sequentially in frame order, so results do not
//! depend on the number of worker threads.

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ErrorCategory;
use crate::matrix::{squared_distance, MatRef, Matrix};
use crate::rng::{self, Stream};

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("no frames to cluster")]
    EmptyFrames,
    #[error("insufficient frames for k: {frames} frames, k = {k}")]
    InsufficientFrames { frames: usize, k: usize },
    #[error("insufficient frames for k: only {distinct} distinct frames, k = {k}")]
    InsufficientDistinctFrames { distinct: usize, k: usize },
    #[error("dimension mismatch: model has dim {expected}, frames have dim {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid cluster config: {0}")]
    InvalidConfig(String),
    #[error("davies-bouldin needs at least 2 populated clusters, found {populated}")]
    TooFewClusters { populated: usize },
    #[error("degenerate centroids: populated clusters {0} and {1} coincide")]
    DegenerateCentroids(usize, usize),
}

impl ClusterError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            ClusterError::TooFewClusters { .. } | ClusterError::DegenerateCentroids(..) => {
                ErrorCategory::Math
            }
            _ => ErrorCategory::Precondition,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub k: usize,
    /// Frames per mini-batch; a value `>=` the frame count means full batch.
    pub batch_frames: usize,
    pub max_iterations: usize,
    /// Stop once the largest centroid move over one batch is at most this
    /// fraction of the RMS centroid norm.
    pub center_move_tol: f64,
    pub seed: u64,
    /// Lower `k` to the number of distinct frames instead of failing.
    pub allow_k_reduction: bool,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            k: 1024,
            batch_frames: 10240,
            max_iterations: 300,
            center_move_tol: 1e-4,
            seed: 0,
            allow_k_reduction: false,
        }
    }
}

impl ClusterConfig {
    fn validate(&self) -> Result<(), ClusterError> {
        if self.k == 0 {
            return Err(ClusterError::InvalidConfig("k must be positive".into()));
        }
        if self.batch_frames == 0 {
            return Err(ClusterError::InvalidConfig(
                "batch_frames must be positive".into(),
            ));
        }
        if self.max_iterations == 0 {
            return Err(ClusterError::InvalidConfig(
                "max_iterations must be positive".into(),
            ));
        }
        if !(self.center_move_tol >= 0.0 && self.center_move_tol.is_finite()) {
            return Err(ClusterError::InvalidConfig(
                "center_move_tol must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Output of [`kmeanspp_seed`].
#[derive(Debug, Clone, PartialEq)]
pub struct SeedResult {
    pub centroids: Matrix,
    /// Row of `frames` each centroid was copied from, in draw order.
    pub indices: Vec<usize>,
    pub requested_k: usize,
}

impl SeedResult {
    pub fn k(&self) -> usize {
        self.indices.len()
    }

    pub fn reduced(&self) -> bool {
        self.k() < self.requested_k
    }
}

/// Squared distance from every frame to its nearest chosen center: the
/// sampling weights for the next k-means++ draw.
pub fn d2_weights(frames: MatRef<'_>, centers: &[usize]) -> Vec<f64> {
    (0..frames.rows())
        .into_par_iter()
        .map(|i| {
            centers
                .iter()
                .map(|&c| squared_distance(frames.row(i), frames.row(c)))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// k-means++ seeding: the first center is a uniform draw, each further one is
/// drawn with probability proportional to its squared distance to the
/// nearest center already chosen.
pub fn kmeanspp_seed(
    frames: MatRef<'_>,
    k: usize,
    seed: u64,
    allow_k_reduction: bool,
) -> Result<SeedResult, ClusterError> {
    let n = frames.rows();
    if n == 0 {
        return Err(ClusterError::EmptyFrames);
    }
    if k == 0 {
        return Err(ClusterError::InvalidConfig("k must be positive".into()));
    }
    if n < k && !allow_k_reduction {
        return Err(ClusterError::InsufficientFrames { frames: n, k });
    }
    let mut rng = rng::stream(seed, Stream::KMeansSeed);
    let first = rng.random_range(0..n);
    let mut indices = vec![first];
    let mut min_d = d2_weights(frames, &indices);

    while indices.len() < k {
        let total: f64 = min_d.iter().sum();
        if total <= 0.0 {
            // every remaining frame duplicates a chosen center
            if allow_k_reduction {
                log::warn!("k reduced from {k} to {} distinct frames", indices.len());
                break;
            }
            return Err(ClusterError::InsufficientDistinctFrames {
                distinct: indices.len(),
                k,
            });
        }
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &w) in min_d.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            pick = Some(i);
            if acc > target {
                break;
            }
        }
        let pick = pick.expect("positive total implies a positive weight");
        indices.push(pick);
        let new_row = frames.row(pick);
        min_d.par_iter_mut().enumerate().for_each(|(i, d)| {
            let nd = squared_distance(frames.row(i), new_row);
            if nd < *d {
                *d = nd;
            }
        });
    }

    let mut centroids = Matrix::zeros(indices.len(), frames.cols());
    for (c, &i) in indices.iter().enumerate() {
        centroids.row_mut(c).copy_from_slice(frames.row(i));
    }
    Ok(SeedResult {
        centroids,
        indices,
        requested_k: k,
    })
}

/// A fitted (or hand-specified) set of centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    centroids: Matrix,
    counts: Vec<u64>,
    config: ClusterConfig,
    converged: bool,
    iterations: usize,
}

impl ClusterModel {
    /// A model with fixed centroids and no training history.
    pub fn from_centroids(centroids: Matrix) -> Self {
        let k = centroids.rows();
        Self {
            centroids,
            counts: vec![0; k],
            config: ClusterConfig {
                k,
                ..ClusterConfig::default()
            },
            converged: true,
            iterations: 0,
        }
    }

    pub fn centroids(&self) -> &Matrix {
        &self.centroids
    }

    /// Assignments per centroid accumulated during fitting.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn config(&self) -> &ClusterConfig {
        &self.config
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Number of centroids actually used; below `config().k` after reduction.
    pub fn k(&self) -> usize {
        self.centroids.rows()
    }

    pub fn dim(&self) -> usize {
        self.centroids.cols()
    }

    /// Nearest centroid and its squared distance, lowest index on ties.
    pub fn nearest(&self, frame: &[f64]) -> (usize, f64) {
        nearest(&self.centroids, frame)
    }

    fn check_dim(&self, frames: MatRef<'_>) -> Result<(), ClusterError> {
        if frames.cols() != self.dim() {
            return Err(ClusterError::DimensionMismatch {
                expected: self.dim(),
                got: frames.cols(),
            });
        }
        if frames.rows() == 0 {
            return Err(ClusterError::EmptyFrames);
        }
        Ok(())
    }

    fn assign(&self, frames: MatRef<'_>) -> Vec<(usize, f64)> {
        (0..frames.rows())
            .into_par_iter()
            .map(|i| self.nearest(frames.row(i)))
            .collect()
    }
}

fn nearest(centroids: &Matrix, frame: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centroids.rows() {
        let d = squared_distance(frame, centroids.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Mini-batch k-means with per-center count-based learning rates.
///
/// Each iteration draws `batch_frames` frames without replacement (or takes
/// all frames when the batch covers them), assigns them to their nearest
/// centroid in parallel, then applies
/// `centroid += (frame - centroid) / count` serially in batch order, where
/// `count` is the center's running assignment count. Fitting stops after
/// `max_iterations` batches or once the largest centroid move in a batch is
/// at most `center_move_tol` times the RMS centroid norm.
pub fn fit_minibatch(
    frames: MatRef<'_>,
    config: &ClusterConfig,
) -> Result<ClusterModel, ClusterError> {
    config.validate()?;
    let seed = kmeanspp_seed(frames, config.k, config.seed, config.allow_k_reduction)?;
    let n = frames.rows();
    let dim = frames.cols();
    let k = seed.k();
    let mut centroids = seed.centroids;
    let mut counts = vec![0u64; k];
    let mut rng = rng::stream(config.seed, Stream::MiniBatch);
    let full_batch = config.batch_frames >= n;
    let all: Vec<usize> = if full_batch {
        (0..n).collect()
    } else {
        Vec::new()
    };

    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iterations {
        iterations += 1;
        let drawn;
        let batch: &[usize] = if full_batch {
            &all
        } else {
            drawn = index::sample(&mut rng, n, config.batch_frames).into_vec();
            &drawn
        };
        let assigned: Vec<usize> = batch
            .par_iter()
            .map(|&i| nearest(&centroids, frames.row(i)).0)
            .collect();

        let before = centroids.clone();
        for (&i, &c) in batch.iter().zip(&assigned) {
            counts[c] += 1;
            let eta = 1.0 / counts[c] as f64;
            for (m, &x) in centroids.row_mut(c).iter_mut().zip(frames.row(i)) {
                *m += eta * (x - *m);
            }
        }

        let max_move = (0..k)
            .map(|c| squared_distance(centroids.row(c), before.row(c)))
            .fold(0.0, f64::max)
            .sqrt();
        let rms = (centroids.as_slice().iter().map(|v| v * v).sum::<f64>() / k as f64).sqrt();
        if max_move <= config.center_move_tol * rms {
            converged = true;
            break;
        }
    }
    debug_assert!(centroids.as_slice().iter().all(|v| v.is_finite()));
    debug_assert_eq!(dim, centroids.cols());

    Ok(ClusterModel {
        centroids,
        counts,
        config: config.clone(),
        converged,
        iterations,
    })
}

/// Within-cluster sum of squared distances, with each frame assigned to its
/// nearest centroid. This is the plain sum, not an average.
pub fn wcss(model: &ClusterModel, frames: MatRef<'_>) -> Result<f64, ClusterError> {
    model.check_dim(frames)?;
    Ok(model.assign(frames).iter().map(|&(_, d)| d).sum())
}

/// [`wcss`] divided by the number of frames.
pub fn wcss_per_frame(model: &ClusterModel, frames: MatRef<'_>) -> Result<f64, ClusterError> {
    Ok(wcss(model, frames)? / frames.rows() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterQuality {
    pub wcss: f64,
    pub db_index: f64,
    pub populated_clusters: usize,
}

struct Dispersion {
    populated: Vec<usize>,
    scatter: Vec<f64>,
}

fn dispersion(model: &ClusterModel, assignments: &[(usize, f64)]) -> Dispersion {
    let k = model.k();
    let mut dist_sum = vec![0.0; k];
    let mut members = vec![0usize; k];
    for &(c, d2) in assignments {
        dist_sum[c] += d2.sqrt();
        members[c] += 1;
    }
    let populated: Vec<usize> = (0..k).filter(|&c| members[c] > 0).collect();
    let scatter = populated
        .iter()
        .map(|&c| dist_sum[c] / members[c] as f64)
        .collect();
    Dispersion { populated, scatter }
}

fn davies_bouldin(model: &ClusterModel, disp: &Dispersion) -> Result<f64, ClusterError> {
    let kp = disp.populated.len();
    if kp < 2 {
        return Err(ClusterError::TooFewClusters { populated: kp });
    }
    let mut total = 0.0;
    for a in 0..kp {
        let ca = model.centroids.row(disp.populated[a]);
        let mut worst = f64::NEG_INFINITY;
        for b in 0..kp {
            if a == b {
                continue;
            }
            let d = squared_distance(ca, model.centroids.row(disp.populated[b])).sqrt();
            if d == 0.0 {
                let (i, j) = (disp.populated[a.min(b)], disp.populated[a.max(b)]);
                return Err(ClusterError::DegenerateCentroids(i, j));
            }
            worst = worst.max((disp.scatter[a] + disp.scatter[b]) / d);
        }
        total += worst;
    }
    Ok(total / kp as f64)
}

/// Davies-Bouldin index over the clusters that receive at least one frame.
///
/// A cluster's dispersion is the mean Euclidean distance of its members to
/// its centroid; empty clusters are left out of both the average and the
/// inner maximum.
pub fn db_index(model: &ClusterModel, frames: MatRef<'_>) -> Result<f64, ClusterError> {
    model.check_dim(frames)?;
    let assignments = model.assign(frames);
    davies_bouldin(model, &dispersion(model, &assignments))
}

/// WCSS and Davies-Bouldin from one assignment pass.
pub fn evaluate(model: &ClusterModel, frames: MatRef<'_>) -> Result<ClusterQuality, ClusterError> {
    model.check_dim(frames)?;
    let assignments = model.assign(frames);
    let wcss = assignments.iter().map(|&(_, d)| d).sum();
    let disp = dispersion(model, &assignments);
    Ok(ClusterQuality {
        wcss,
        db_index: davies_bouldin(model, &disp)?,
        populated_clusters: disp.populated.len(),
    })
}
