//! Synthetic embedding sets with planted intrinsic rank and cluster
//! structure, and cohorts of such sets with planted downstream scores.
//!
//! A frame is `B·z + a·η`: `B` is a `d x r` matrix with orthonormal columns,
//! `z` an `r`-dimensional standard normal draw (shifted onto a cluster center
//! when clusters are requested), `η` a `d`-dimensional standard normal draw
//! and `a` the noise amplitude. Randomness comes from the streams in
//! [`crate::rng`], one per purpose.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::correlation::{DownstreamRow, DownstreamTable, ScoreKind};
use crate::embedstore::EmbeddingSet;
use crate::matrix::{dot, Matrix};
use crate::rng::{self, Stream};

/// Planted score for rank `r` is `SCORE_MAX - SCORE_SLOPE * r + ε`.
pub const SCORE_MAX: f64 = 100.0;
pub const SCORE_SLOPE: f64 = 1.0;

/// Minimum distance between cluster centers, in units of the RMS radius
/// `sqrt(r)` of a unit-variance cluster.
pub const CLUSTER_SEPARATION: f64 = 20.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub dim: usize,
    pub intrinsic_rank: usize,
    pub n_sequences: usize,
    pub frames_per_sequence: usize,
    pub noise_amplitude: f64,
    /// 0 draws unclustered Gaussian frames.
    pub cluster_count: usize,
    pub seed: u64,
}

impl SynthSpec {
    pub fn total_frames(&self) -> usize {
        self.n_sequences * self.frames_per_sequence
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.dim == 0 {
            return Err("dim must be positive".into());
        }
        if self.intrinsic_rank == 0 || self.intrinsic_rank > self.dim {
            return Err(format!(
                "intrinsic rank {} must be in 1..={}",
                self.intrinsic_rank, self.dim
            ));
        }
        if self.n_sequences == 0 || self.frames_per_sequence == 0 {
            return Err("need at least one sequence of at least one frame".into());
        }
        if !(self.noise_amplitude >= 0.0 && self.noise_amplitude.is_finite()) {
            return Err("noise amplitude must be finite and nonnegative".into());
        }
        if self.cluster_count > self.total_frames() {
            return Err(format!(
                "cluster count {} exceeds total frames {}",
                self.cluster_count,
                self.total_frames()
            ));
        }
        Ok(())
    }
}

/// `rows x cols` matrix (`cols <= rows`) with orthonormal columns, from
/// Gram-Schmidt (applied twice) on a Gaussian draw. Each column is
/// sign-fixed so its first nonzero entry is positive.
pub fn orthonormal_basis(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    assert!(
        cols <= rows,
        "cannot fit {cols} orthonormal columns in dimension {rows}"
    );
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(cols);
    while basis.len() < cols {
        let mut v: Vec<f64> = (0..rows).map(|_| rng.sample(StandardNormal)).collect();
        for _ in 0..2 {
            for b in &basis {
                let proj = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= proj * y);
            }
        }
        let norm = dot(&v, &v).sqrt();
        // a draw (numerically) inside the current span is discarded
        if norm < 1e-8 {
            continue;
        }
        let sign = match v.iter().find(|x| **x != 0.0) {
            Some(x) if *x < 0.0 => -1.0,
            _ => 1.0,
        };
        v.iter_mut().for_each(|x| *x *= sign / norm);
        basis.push(v);
    }
    let mut m = Matrix::zeros(rows, cols);
    for (j, b) in basis.iter().enumerate() {
        for (i, &x) in b.iter().enumerate() {
            m[(i, j)] = x;
        }
    }
    m
}

fn cluster_centers(count: usize, rank: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let min_sep = CLUSTER_SEPARATION * (rank as f64).sqrt();
    let mut spread = min_sep * count as f64;
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(count);
    let mut misses = 0;
    while centers.len() < count {
        let c: Vec<f64> = (0..rank)
            .map(|_| spread * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let far = centers.iter().all(|o| {
            let d2: f64 = o.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum();
            d2 >= min_sep * min_sep
        });
        if far {
            centers.push(c);
        } else {
            misses += 1;
            if misses % 100 == 0 {
                spread *= 1.5;
            }
        }
    }
    centers
}

pub fn generate(spec: &SynthSpec) -> Result<EmbeddingSet, String> {
    spec.validate()?;
    let (d, r) = (spec.dim, spec.intrinsic_rank);
    let basis = orthonormal_basis(d, r, &mut rng::stream(spec.seed, Stream::Subspace));
    let centers = cluster_centers(
        spec.cluster_count,
        r,
        &mut rng::stream(spec.seed, Stream::ClusterCenters),
    );
    let mut draws = rng::stream(spec.seed, Stream::Draws);
    let mut noise = rng::stream(spec.seed, Stream::Noise);

    let total = spec.total_frames();
    let mut data = vec![0.0; total * d];
    let mut z = vec![0.0; r];
    for (f, frame) in data.chunks_exact_mut(d).enumerate() {
        for zi in z.iter_mut() {
            *zi = draws.sample(StandardNormal);
        }
        if !centers.is_empty() {
            let c = &centers[f % centers.len()];
            z.iter_mut().zip(c).for_each(|(zi, ci)| *zi += ci);
        }
        for (i, x) in frame.iter_mut().enumerate() {
            *x = dot(basis.row(i), &z);
        }
        if spec.noise_amplitude > 0.0 {
            for x in frame.iter_mut() {
                *x += spec.noise_amplitude * noise.sample::<f64, _>(StandardNormal);
            }
        }
    }
    EmbeddingSet::new(d, vec![spec.frames_per_sequence; spec.n_sequences], data)
        .map_err(|e| e.to_string())
}

/// Parameters for a cohort of synthetic "models" whose intrinsic ranks are
/// spread linearly over `[rank_low, rank_high]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortSpec {
    pub n_models: usize,
    pub rank_low: usize,
    pub rank_high: usize,
    /// Bound on the uniform score perturbation |ε|.
    pub score_noise: f64,
    pub seed: u64,
    pub dim: usize,
    pub n_sequences: usize,
    pub frames_per_sequence: usize,
    pub noise_amplitude: f64,
    pub cluster_count: usize,
    pub task: String,
}

impl Default for CohortSpec {
    fn default() -> Self {
        Self {
            n_models: 12,
            rank_low: 4,
            rank_high: 48,
            score_noise: 0.5,
            seed: 0,
            dim: 64,
            n_sequences: 200,
            frames_per_sequence: 100,
            noise_amplitude: 0.0,
            cluster_count: 0,
            task: "synthetic".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortMember {
    pub model_id: String,
    pub spec: SynthSpec,
    pub score: f64,
}

/// Per-model generation specs and planted scores, without generating frames.
pub fn cohort_plan(spec: &CohortSpec) -> Result<Vec<CohortMember>, String> {
    if spec.n_models < 3 {
        return Err("a cohort needs at least 3 models".into());
    }
    if spec.rank_low > spec.rank_high {
        return Err("rank_low exceeds rank_high".into());
    }
    if !(spec.score_noise >= 0.0 && spec.score_noise.is_finite()) {
        return Err("score noise must be finite and nonnegative".into());
    }
    let mut seeds = rng::stream(spec.seed, Stream::ModelSeeds);
    let mut eps = rng::stream(spec.seed, Stream::Scores);
    let span = (spec.rank_high - spec.rank_low) as f64;
    let mut members = Vec::with_capacity(spec.n_models);
    for i in 0..spec.n_models {
        let t = i as f64 / (spec.n_models - 1) as f64;
        let rank = (spec.rank_low as f64 + span * t).round() as usize;
        let synth = SynthSpec {
            dim: spec.dim,
            intrinsic_rank: rank,
            n_sequences: spec.n_sequences,
            frames_per_sequence: spec.frames_per_sequence,
            noise_amplitude: spec.noise_amplitude,
            cluster_count: spec.cluster_count,
            seed: seeds.random(),
        };
        synth.validate()?;
        let e = if spec.score_noise > 0.0 {
            eps.random_range(-spec.score_noise..=spec.score_noise)
        } else {
            0.0
        };
        members.push(CohortMember {
            model_id: format!("model_{i:03}"),
            score: SCORE_MAX - SCORE_SLOPE * rank as f64 + e,
            spec: synth,
        });
    }
    Ok(members)
}

pub fn cohort_downstream(task: &str, members: &[CohortMember]) -> DownstreamTable {
    DownstreamTable::new(
        members
            .iter()
            .map(|m| DownstreamRow {
                model_id: m.model_id.clone(),
                task: task.to_string(),
                score: m.score,
                score_kind: ScoreKind::Wer,
            })
            .collect(),
    )
    .expect("generated model ids are unique")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub members: Vec<CohortMember>,
    pub sets: Vec<EmbeddingSet>,
    pub downstream: DownstreamTable,
}

pub fn generate_cohort(spec: &CohortSpec) -> Result<Cohort, String> {
    let members = cohort_plan(spec)?;
    let sets = members
        .iter()
        .map(|m| generate(&m.spec))
        .collect::<Result<Vec<_>, _>>()?;
    let downstream = cohort_downstream(&spec.task, &members);
    Ok(Cohort {
        members,
        sets,
        downstream,
    })
}
