//! Reference implementations used only by tests. None of these call into the
//! code paths they check.

#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use ssleval_core::{EmbeddingSet, MatRef, Matrix};

/// Singular values from nalgebra's bidiagonalization SVD, sorted descending.
pub fn reference_singular_values(m: MatRef<'_>) -> Vec<f64> {
    let dm = DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice());
    let mut s: Vec<f64> = dm.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// exp(-Σ p ln p) with p = σ / Σσ, summed term by term.
pub fn hand_erank(values: &[f64]) -> f64 {
    let total: f64 = values.iter().sum();
    let mut h = 0.0;
    for v in values {
        if *v > 0.0 {
            let p = v / total;
            h += -p * p.ln();
        }
    }
    h.exp()
}

pub fn reference_erank(m: MatRef<'_>) -> f64 {
    hand_erank(&reference_singular_values(m))
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    Matrix::from_row_major(rows, cols, data)
}

pub fn random_set(rng: &mut impl Rng, n_seq: usize, max_len: usize, dim: usize) -> EmbeddingSet {
    let seqs: Vec<Vec<f64>> = (0..n_seq)
        .map(|_| {
            let len = rng.random_range(1..=max_len);
            (0..len * dim)
                .map(|_| rng.random_range(-1.0..1.0))
                .collect()
        })
        .collect();
    EmbeddingSet::from_sequences(dim, &seqs).unwrap()
}

/// Random orthogonal matrix via nalgebra's QR.
pub fn random_orthogonal(rng: &mut impl Rng, n: usize) -> Matrix {
    let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let q = g.qr().q();
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = q[(i, j)];
        }
    }
    m
}

fn sqdist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Sum over frames of squared distance to the nearest centroid.
pub fn brute_wcss(frames: &Matrix, centroids: &Matrix) -> f64 {
    (0..frames.rows())
        .map(|i| {
            (0..centroids.rows())
                .map(|c| sqdist(frames.row(i), centroids.row(c)))
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

/// Full-batch Lloyd iterations from `init` until assignments stop changing.
/// Returns the final centroids and their WCSS.
#[allow(clippy::needless_range_loop)]
pub fn lloyd(frames: &Matrix, init: &Matrix, max_iter: usize) -> (Matrix, f64) {
    let (n, d, k) = (frames.rows(), frames.cols(), init.rows());
    let mut centroids = init.clone();
    let mut assign = vec![usize::MAX; n];
    for _ in 0..max_iter {
        let mut changed = false;
        for i in 0..n {
            let mut best = (0, f64::INFINITY);
            for c in 0..k {
                let dd = sqdist(frames.row(i), centroids.row(c));
                if dd < best.1 {
                    best = (c, dd);
                }
            }
            if assign[i] != best.0 {
                assign[i] = best.0;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![0.0; k * d];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[assign[i]] += 1;
            for j in 0..d {
                sums[assign[i] * d + j] += frames.row(i)[j];
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for j in 0..d {
                    centroids[(c, j)] = sums[c * d + j] / counts[c] as f64;
                }
            }
        }
    }
    let w = brute_wcss(frames, &centroids);
    (centroids, w)
}

/// Best 2-partition of 1-D points by exhaustive enumeration; returns the two
/// cluster means in ascending order.
pub fn best_two_partition_1d(points: &[f64]) -> (f64, f64, f64) {
    let n = points.len();
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for mask in 1..(1u32 << n) - 1 {
        let (a, b): (Vec<f64>, Vec<f64>) = {
            let mut a = Vec::new();
            let mut b = Vec::new();
            for (i, &p) in points.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    a.push(p)
                } else {
                    b.push(p)
                }
            }
            (a, b)
        };
        let ma = a.iter().sum::<f64>() / a.len() as f64;
        let mb = b.iter().sum::<f64>() / b.len() as f64;
        let cost: f64 = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>()
            + b.iter().map(|x| (x - mb).powi(2)).sum::<f64>();
        if cost < best.0 {
            best = (cost, ma.min(mb), ma.max(mb));
        }
    }
    (best.1, best.2, best.0)
}

/// Frames from `k` isotropic Gaussians (unit std) whose centers are at least
/// `separation` apart, in round-robin order.
pub fn gaussian_blobs(
    rng: &mut impl Rng,
    k: usize,
    per_cluster: usize,
    dim: usize,
    separation: f64,
) -> Matrix {
    let mut centers: Vec<Vec<f64>> = Vec::new();
    let side = separation * (k as f64).sqrt() * 3.0;
    while centers.len() < k {
        let c: Vec<f64> = (0..dim).map(|_| rng.random_range(-side..side)).collect();
        if centers.iter().all(|o| sqdist(o, &c).sqrt() >= separation) {
            centers.push(c);
        }
    }
    let mut m = Matrix::zeros(k * per_cluster, dim);
    for i in 0..k * per_cluster {
        let c = &centers[i % k];
        for j in 0..dim {
            // Box-Muller, kept local so the oracle data does not depend on
            // the crate's generators
            let u1: f64 = rng.random_range(f64::EPSILON..1.0);
            let u2: f64 = rng.random();
            let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
            m[(i, j)] = c[j] + z;
        }
    }
    m
}
