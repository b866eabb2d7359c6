//! Acceptance suite. Each test checks one criterion and prints a single
//! `PASS`/`FAIL` line to stderr (written directly so the harness does not
//! swallow it). Criteria run one at a time so their runtime limits are
//! measured without contention.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use common::{
    brute_wcss, gaussian_blobs, hand_erank, lloyd, random_matrix, random_orthogonal, random_set,
    reference_erank,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ssleval_core::correlation::{read_measures_csv, read_report_csv};
use ssleval_core::{
    db_index, dense_spectrum, effective_rank, fit_minibatch, generate, global_effective_rank,
    kmeanspp_seed, pearson, rankme_t, wcss, write_embeddings, ClusterConfig, EmbeddingSet, MatRef,
    Matrix, SingularSpectrum, SynthSpec,
};

static SERIAL: Mutex<()> = Mutex::new(());

/// Runs `check` under the suite lock, prints the verdict line and fails the
/// test on a miss. `check` returns a detail string or the reason it failed.
fn criterion(
    n: u32,
    title: &str,
    limit: Option<Duration>,
    check: impl FnOnce() -> Result<String, String>,
) {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let mut result = check();
    let elapsed = start.elapsed();
    if let (Ok(_), Some(limit)) = (&result, limit) {
        if elapsed > limit {
            result = Err(format!("took {elapsed:.1?}, limit {limit:?}"));
        }
    }
    let (verdict, detail) = match &result {
        Ok(d) => ("PASS", d.as_str()),
        Err(d) => ("FAIL", d.as_str()),
    };
    let _ = writeln!(
        std::io::stderr(),
        "{verdict} criterion {n} ({title}): {detail} [{elapsed:.2?}]"
    );
    if let Err(e) = result {
        panic!("criterion {n} failed: {e}");
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn scaled(m: &Matrix, c: f64) -> Matrix {
    let mut out = m.clone();
    out.scale(c);
    out
}

fn erank_of(m: MatRef<'_>) -> f64 {
    effective_rank(&dense_spectrum(m).unwrap()).unwrap().value
}

#[test]
fn criterion_1_effective_rank_properties() {
    criterion(
        1,
        "effective-rank properties",
        Some(Duration::from_secs(60)),
        || {
            let oracle = hand_erank(&[2.0, 1.0, 1.0]);
            let ours = effective_rank(&SingularSpectrum::from_values(vec![2.0, 1.0, 1.0], 3, 3))
                .unwrap()
                .value;
            ensure(
                (ours - 2.828427).abs() < 1e-6 && (ours - oracle).abs() < 1e-6,
                || format!("diag(2,1,1) gave {ours}, oracle {oracle}"),
            )?;

            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let mut worst_rot = 0.0f64;
            let mut worst_ref = 0.0f64;
            for case in 0..1000 {
                let n = rng.random_range(1..=200);
                let m = rng.random_range(1..=64);
                let a = random_matrix(&mut rng, n, m);
                let e = erank_of(a.view());
                ensure(e >= 1.0 && e <= n.min(m) as f64 + 1e-12, || {
                    format!("case {case}: erank {e} outside [1, {}]", n.min(m))
                })?;
                worst_ref = worst_ref.max((e - reference_erank(a.view())).abs());

                let p = 2f64.powi(rng.random_range(-20..=20));
                let es = erank_of(scaled(&a, p).view());
                ensure(es.to_bits() == e.to_bits(), || {
                    format!("case {case}: scaling by {p} changed erank {e} -> {es}")
                })?;
                let c = rng.random_range(1e-3..1e3);
                let es = erank_of(scaled(&a, c).view());
                ensure(rel(es, e) < 1e-10, || {
                    format!("case {case}: scaling by {c} changed erank {e} -> {es}")
                })?;

                let right = random_orthogonal(&mut rng, m);
                let mut rotated = a.matmul(&right);
                if n <= 64 {
                    rotated = random_orthogonal(&mut rng, n).matmul(&rotated);
                }
                let r = erank_of(rotated.view());
                worst_rot = worst_rot.max((r - e).abs());
                ensure((r - e).abs() < 1e-8, || {
                    format!("case {case}: rotation changed erank {e} -> {r}")
                })?;
            }
            ensure(worst_ref < 1e-8, || {
                format!("max deviation from SVD oracle {worst_ref:e}")
            })?;
            Ok(format!(
            "1000 matrices; max rotation drift {worst_rot:.1e}, max oracle deviation {worst_ref:.1e}"
        ))
        },
    );
}

#[test]
fn criterion_2_streaming_matches_dense() {
    criterion(
        2,
        "streaming/dense equivalence",
        Some(Duration::from_secs(120)),
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            let mut worst = 0.0f64;
            for case in 0..200 {
                let dim = rng.random_range(1..=64);
                let n_seq = rng.random_range(1..=50);
                let max_len = rng.random_range(1..=5000 / n_seq);
                let set = random_set(&mut rng, n_seq, max_len, dim);
                assert!(set.total_frames() <= 5000);
                let streamed = global_effective_rank(&set).unwrap().value;
                let dense = reference_erank(set.pooled());
                let err = rel(streamed, dense);
                worst = worst.max(err);
                ensure(err < 1e-6, || {
                    format!("case {case}: gram path {streamed} vs dense {dense}")
                })?;
            }
            Ok(format!("200 sets; max relative error {worst:.1e}"))
        },
    );
}

#[test]
fn criterion_3_rankme_t_oracle() {
    criterion(3, "RankMe-t oracle", None, || {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut worst = 0.0f64;
        for case in 0..100 {
            let dim = rng.random_range(1..=48);
            let n_seq = rng.random_range(1..=120);
            let set = random_set(&mut rng, n_seq, 40, dim);
            let mut z = Matrix::zeros(set.n_sequences(), dim);
            for (i, seq) in set.sequences().enumerate() {
                for t in 0..seq.len() {
                    for j in 0..dim {
                        z[(i, j)] += seq.row(t)[j];
                    }
                }
            }
            let oracle = reference_erank(z.view());
            let ours = rankme_t(&set).unwrap().value;
            worst = worst.max((ours - oracle).abs());
            ensure((ours - oracle).abs() < 1e-9, || {
                format!("case {case}: rankme_t {ours} vs oracle {oracle}")
            })?;
        }
        let mut worst_single = 0.0f64;
        for case in 0..100 {
            let n = rng.random_range(1..=300);
            let dim = rng.random_range(1..=48);
            let frames = random_matrix(&mut rng, n, dim);
            let set = EmbeddingSet::from_frames(frames.view()).unwrap();
            let (r, g) = (
                rankme_t(&set).unwrap().value,
                global_effective_rank(&set).unwrap().value,
            );
            worst_single = worst_single.max((r - g).abs());
            ensure((r - g).abs() < 1e-9, || {
                format!("length-1 case {case}: rankme_t {r} vs ger {g}")
            })?;
        }
        Ok(format!(
            "100 sets max error {worst:.1e}; length-1 sets max |rankme_t - ger| {worst_single:.1e}"
        ))
    });
}

#[test]
fn criterion_4_clustering_oracles() {
    criterion(
        4,
        "clustering oracles",
        Some(Duration::from_secs(300)),
        || {
            let frames = Matrix::from_row_major(4, 1, vec![0.0, 1.0, 10.0, 11.0]);
            // a seed whose k-means++ draw puts one center in each group
            let seed = (0..)
                .find(|&s| {
                    let picks = kmeanspp_seed(frames.view(), 2, s, false).unwrap().indices;
                    (picks[0] < 2) != (picks[1] < 2)
                })
                .unwrap();
            let config = ClusterConfig {
                k: 2,
                seed,
                ..ClusterConfig::default()
            };
            let model = fit_minibatch(frames.view(), &config).unwrap();
            let w = wcss(&model, frames.view()).unwrap();
            let db = db_index(&model, frames.view()).unwrap();
            ensure((w - 1.0).abs() < 1e-12 && (db - 0.1).abs() < 1e-12, || {
                format!("four-point fixture gave wcss {w}, db {db}")
            })?;

            let mut rng = ChaCha8Rng::seed_from_u64(4);
            let mut worst = 0.0f64;
            for case in 0..20 {
                let frames = gaussian_blobs(&mut rng, 16, 125, 8, 20.0);
                let config = ClusterConfig {
                    k: 16,
                    seed: case,
                    ..ClusterConfig::default()
                };
                let model = fit_minibatch(frames.view(), &config).unwrap();
                let init = kmeanspp_seed(frames.view(), 16, case, false).unwrap();
                let (_, reference) = lloyd(&frames, &init.centroids, 1000);
                let ours = wcss(&model, frames.view()).unwrap();
                ensure(
                    rel(ours, brute_wcss(&frames, model.centroids())) < 1e-9,
                    || format!("case {case}: wcss disagrees with brute force"),
                )?;
                worst = worst.max(ours / reference);
                ensure(ours <= 1.1 * reference, || {
                    format!("case {case}: minibatch wcss {ours} vs lloyd {reference}")
                })?;
            }
            Ok(format!(
                "fixture wcss {w}, db {db}; 20 blob sets, worst minibatch/lloyd ratio {worst:.4}"
            ))
        },
    );
}

/// r from exact integer sums, one rounding at the end.
fn integer_pearson(x: &[i64], y: &[i64]) -> f64 {
    let n = x.len() as i128;
    let sx: i128 = x.iter().map(|&v| v as i128).sum();
    let sy: i128 = y.iter().map(|&v| v as i128).sum();
    let sxy: i128 = x.iter().zip(y).map(|(&a, &b)| a as i128 * b as i128).sum();
    let sxx: i128 = x.iter().map(|&a| a as i128 * a as i128).sum();
    let syy: i128 = y.iter().map(|&b| b as i128 * b as i128).sum();
    let num = n * sxy - sx * sy;
    let dx = n * sxx - sx * sx;
    let dy = n * syy - sy * sy;
    num as f64 / ((dx as f64) * (dy as f64)).sqrt()
}

#[test]
fn criterion_5_pearson_oracle() {
    criterion(5, "Pearson oracle", None, || {
        let mut fixtures: Vec<(Vec<i64>, Vec<i64>)> = vec![
            (vec![1, 2, 3], vec![1, 2, 3]),
            (vec![1, 2, 3], vec![3, 2, 1]),
            (vec![1, 2, 3, 4], vec![1, 3, 2, 4]),
            (vec![1, 2, 3, 4, 5], vec![2, 4, 5, 4, 5]),
            (vec![-3, 0, 3], vec![1, 0, 1]),
            (vec![10, 20, 30, 40, 50, 60], vec![7, 3, 9, 1, 12, 4]),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        while fixtures.len() < 16 {
            let n = rng.random_range(3..=40);
            let x: Vec<i64> = (0..n).map(|_| rng.random_range(-1000..=1000)).collect();
            let y: Vec<i64> = (0..n).map(|_| rng.random_range(-1000..=1000)).collect();
            fixtures.push((x, y));
        }
        for (i, (x, y)) in fixtures.iter().enumerate() {
            let oracle = integer_pearson(x, y);
            let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
            let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
            let ours = pearson(&xf, &yf).unwrap();
            ensure((ours - oracle).abs() < 1e-12, || {
                format!("fixture {i}: {ours} vs {oracle}")
            })?;
        }
        ensure(
            pearson(&[-3.0, 0.0, 3.0], &[1.0, 0.0, 1.0]).unwrap() == 0.0,
            || "uncorrelated fixture not zero".into(),
        )?;

        let mut worst = 0.0f64;
        for case in 0..1000 {
            let n = rng.random_range(3..=100);
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
            let y: Vec<f64> = x
                .iter()
                .map(|v| v * 0.3 + rng.random_range(-5.0..5.0))
                .collect();
            let r = pearson(&x, &y).unwrap();
            ensure(pearson(&y, &x).unwrap().to_bits() == r.to_bits(), || {
                format!("case {case}: asymmetric")
            })?;
            let (a, b) = (rng.random_range(0.01..100.0), rng.random_range(-50.0..50.0));
            let (c, d) = (rng.random_range(0.01..100.0), rng.random_range(-50.0..50.0));
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let xa: Vec<f64> = x.iter().map(|v| sign * a * v + b).collect();
            let yc: Vec<f64> = y.iter().map(|v| c * v + d).collect();
            let ra = pearson(&xa, &yc).unwrap();
            worst = worst.max((ra - sign * r).abs());
            ensure((ra - sign * r).abs() < 1e-10, || {
                format!("case {case}: affine map changed r {r} -> {ra}")
            })?;
        }
        Ok(format!(
            "{} fixtures exact; 1000 pairs symmetric, max affine drift {worst:.1e}",
            fixtures.len()
        ))
    });
}

fn ssleval(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssleval"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Result<Output, String> {
    let out = ssleval(args);
    if out.status.success() {
        Ok(out)
    } else {
        Err(format!(
            "`ssleval {}` exited {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn criterion_6_synthetic_cohort_pipeline() {
    criterion(
        6,
        "end-to-end synthetic cohort",
        Some(Duration::from_secs(300)),
        || {
            let dir = tempfile::tempdir().unwrap();
            let cohort = dir.path().join("cohort");
            let measures = dir.path().join("measures.csv");
            let report = dir.path().join("report.csv");
            ok(&[
                "synth",
                "cohort",
                "--models",
                "12",
                "--rank-low",
                "4",
                "--rank-high",
                "48",
                "--dim",
                "64",
                "--sequences",
                "200",
                "--frames-per-seq",
                "100",
                "--score-noise",
                "0.5",
                "--seed",
                "6",
                "--task",
                "synthetic",
                "--out",
                s(&cohort),
            ])?;
            ok(&[
                "sweep",
                "--manifest",
                s(&cohort.join("manifest.json")),
                "--k",
                "64",
                "--batch-frames",
                "2048",
                "--max-iter",
                "50",
                "--jobs",
                "4",
                "--out",
                s(&measures),
            ])?;
            let records = read_measures_csv(&measures).map_err(|e| e.to_string())?;
            ensure(
                records.len() == 12 && records.iter().all(|r| r.measures.len() == 4),
                || format!("expected 12 models with 4 measures, got {records:?}"),
            )?;
            ok(&[
                "correlate",
                "--measures",
                s(&measures),
                "--downstream",
                s(&cohort.join("downstream.csv")),
                "--task",
                "synthetic",
                "--measure-step",
                "0",
                "--out",
                s(&report),
            ])?;
            let rows = read_report_csv(&report).map_err(|e| e.to_string())?;
            let r_of = |m: &str| {
                rows.iter()
                    .find(|r| r.measure == m)
                    .map(|r| r.pearson_r)
                    .ok_or_else(|| format!("{m} missing from report"))
            };
            let (ger, rmt) = (r_of("ger")?, r_of("rankme_t")?);
            ensure(ger <= -0.95, || format!("r(ger) = {ger}"))?;
            ensure(rmt <= -0.8, || format!("r(rankme_t) = {rmt}"))?;
            ensure(rows.iter().all(|r| r.n == 12), || {
                "not every model matched".into()
            })?;
            Ok(format!(
                "r(ger) = {ger:.4}, r(rankme_t) = {rmt:.4}, r(wcss) = {:.4}, r(db_index) = {:.4}",
                r_of("wcss")?,
                r_of("db_index")?
            ))
        },
    );
}

fn same_bytes(a: &Path, b: &Path) -> Result<(), String> {
    let (x, y) = (fs::read(a).unwrap(), fs::read(b).unwrap());
    ensure(x == y, || {
        format!("{} and {} differ", a.display(), b.display())
    })
}

fn tree_files(root: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = fs::read_dir(root)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    files
}

#[test]
fn criterion_7_determinism() {
    criterion(7, "determinism", None, || {
        let dir = tempfile::tempdir().unwrap();
        let p = |name: &str| dir.path().join(name);
        let mut compared = 0;

        // synth set, twice
        for name in ["a.embd", "b.embd"] {
            ok(&[
                "synth",
                "set",
                "--rank",
                "5",
                "--dim",
                "16",
                "--sequences",
                "30",
                "--frames-per-seq",
                "20",
                "--clusters",
                "6",
                "--noise",
                "0.01",
                "--seed",
                "9",
                "--out",
                s(&p(name)),
            ])?;
        }
        same_bytes(&p("a.embd"), &p("b.embd"))?;
        compared += 1;

        // cohorts at different job counts
        for (name, jobs) in [("c1", "1"), ("c8", "8")] {
            ok(&[
                "synth",
                "cohort",
                "--models",
                "6",
                "--rank-low",
                "2",
                "--rank-high",
                "12",
                "--dim",
                "16",
                "--sequences",
                "40",
                "--frames-per-seq",
                "25",
                "--clusters",
                "8",
                "--seed",
                "7",
                "--jobs",
                jobs,
                "--out",
                s(&p(name)),
            ])?;
        }
        let (c1, c8) = (tree_files(&p("c1")), tree_files(&p("c8")));
        ensure(c1.len() == c8.len() && c1.len() == 9, || {
            "cohort file sets differ".into()
        })?;
        for (a, b) in c1.iter().zip(&c8) {
            same_bytes(a, b)?;
            compared += 1;
        }
        // one unreadable entry so the sidecar is exercised too
        fs::write(p("c1").join("model_003.embd"), b"not an embd file").unwrap();

        for (out, jobs) in [("m1.csv", "1"), ("m8.csv", "8"), ("m8b.csv", "8")] {
            ok(&[
                "sweep",
                "--manifest",
                s(&p("c1").join("manifest.json")),
                "--k",
                "8",
                "--max-frames",
                "600",
                "--seed",
                "3",
                "--jobs",
                jobs,
                "--out",
                s(&p(out)),
            ])?;
        }
        for other in ["m8.csv", "m8b.csv"] {
            same_bytes(&p("m1.csv"), &p(other))?;
            same_bytes(&p("m1.csv.errors.csv"), &p(&format!("{other}.errors.csv")))?;
            compared += 2;
        }
        let rows = fs::read_to_string(p("m1.csv")).unwrap().lines().count() - 1;
        ensure(rows == 20, || {
            format!("expected 20 measure rows, got {rows}")
        })?;

        for name in ["r1.csv", "r2.csv"] {
            ok(&[
                "correlate",
                "--measures",
                s(&p("m1.csv")),
                "--downstream",
                s(&p("c1").join("downstream.csv")),
                "--task",
                "synthetic",
                "--measure-step",
                "0",
                "--out",
                s(&p(name)),
            ])?;
        }
        same_bytes(&p("r1.csv"), &p("r2.csv"))?;
        same_bytes(&p("r1.json"), &p("r2.json"))?;
        compared += 2;

        let file = p("a.embd");
        let runs: [&[&str]; 3] = [
            &["rank", "--input", s(&file), "--measure", "ger"],
            &[
                "rank",
                "--input",
                s(&file),
                "--measure",
                "rankme-t",
                "--max-frames",
                "200",
                "--seed",
                "4",
            ],
            &[
                "cluster",
                "--input",
                s(&file),
                "--k",
                "6",
                "--batch-frames",
                "128",
                "--seed",
                "2",
            ],
        ];
        for args in runs {
            let (a, b) = (ok(args)?, ok(args)?);
            ensure(a.stdout == b.stdout, || {
                format!("`{}` output differs", args.join(" "))
            })?;
            compared += 1;
        }
        Ok(format!(
            "{compared} outputs byte-identical across reruns and job counts"
        ))
    });
}

fn small_set(seed: u64) -> EmbeddingSet {
    generate(&SynthSpec {
        dim: 8,
        intrinsic_rank: 3,
        n_sequences: 10,
        frames_per_sequence: 6,
        noise_amplitude: 0.1,
        cluster_count: 0,
        seed,
    })
    .unwrap()
}

fn corrupt_magic(path: &Path) {
    let mut bytes = fs::read(path).unwrap();
    bytes[..4].copy_from_slice(b"EMBX");
    fs::write(path, bytes).unwrap();
}

fn corrupt_truncate(path: &Path) {
    let bytes = fs::read(path).unwrap();
    fs::write(path, &bytes[..bytes.len() - 12]).unwrap();
}

fn corrupt_nan(path: &Path, n_sequences: usize) {
    let mut bytes = fs::read(path).unwrap();
    let at = 32 + 8 * n_sequences + 8 * 5;
    bytes[at..at + 8].copy_from_slice(&f64::NAN.to_le_bytes());
    fs::write(path, bytes).unwrap();
}

#[test]
fn criterion_8_format_robustness() {
    criterion(8, "format robustness", None, || {
        let dir = tempfile::tempdir().unwrap();
        let p = |name: &str| dir.path().join(name);
        let mut seen = Vec::new();
        type Corruptor = fn(&Path);
        let cases: [(&str, Corruptor, &str, &str); 3] = [
            (
                "magic",
                corrupt_magic,
                "error[bad_magic]",
                "unrecognized format",
            ),
            (
                "truncated",
                corrupt_truncate,
                "error[truncated]",
                "truncated payload",
            ),
            (
                "nan",
                |f: &Path| corrupt_nan(f, 10),
                "error[non_finite]",
                "non-finite",
            ),
        ];
        for (name, corrupt, tag, phrase) in cases {
            let file = p(&format!("{name}.embd"));
            write_embeddings(&small_set(1), &file).unwrap();
            corrupt(&file);
            let out = ssleval(&["rank", "--input", s(&file), "--measure", "ger"]);
            let stderr = String::from_utf8_lossy(&out.stderr).into_owned();
            ensure(out.status.code() == Some(1), || {
                format!("{name}: exit {:?}, stderr {stderr}", out.status.code())
            })?;
            ensure(stderr.contains(tag) && stderr.contains(phrase), || {
                format!("{name}: unexpected message {stderr}")
            })?;
            seen.push(tag);
        }

        let mut entries = Vec::new();
        for i in 0..60 {
            let file = p(&format!("m{i:02}.embd"));
            write_embeddings(&small_set(100 + i), &file).unwrap();
            match i {
                7 => corrupt_magic(&file),
                23 => corrupt_truncate(&file),
                41 => corrupt_nan(&file, 10),
                _ => {}
            }
            entries.push(serde_json::json!({
                "model_id": format!("m{i:02}"),
                "checkpoint_step": 1000,
                "layer": 4,
                "path": format!("m{i:02}.embd"),
                "dataset_tag": "fixture",
            }));
        }
        fs::write(p("manifest.json"), serde_json::to_string(&entries).unwrap()).unwrap();
        let out = p("sweep.csv");
        ok(&[
            "sweep",
            "--manifest",
            s(&p("manifest.json")),
            "--measure",
            "ger",
            "--jobs",
            "4",
            "--out",
            s(&out),
        ])?;
        let rows = fs::read_to_string(&out).unwrap().lines().count() - 1;
        let errors: Vec<String> = fs::read_to_string(p("sweep.csv.errors.csv"))
            .unwrap()
            .lines()
            .skip(1)
            .map(str::to_string)
            .collect();
        ensure(rows == 57 && errors.len() == 3, || {
            format!("{rows} rows, {} errors", errors.len())
        })?;
        for (row, (model, tag)) in errors.iter().zip([
            ("m07", "bad_magic"),
            ("m23", "truncated"),
            ("m41", "non_finite"),
        ]) {
            ensure(row.starts_with(model) && row.contains(tag), || {
                format!("unexpected sidecar row {row}")
            })?;
        }
        Ok(format!(
            "distinct errors {seen:?} with exit 1; 60-entry sweep gave {rows} rows and {} sidecar errors",
            errors.len()
        ))
    });
}
