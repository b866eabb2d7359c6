use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use ssleval_core::correlation::write_measures_csv;
use ssleval_core::{
    db_index, fit_minibatch, global_effective_rank, rankme_t, wcss, ClusterConfig, Manifest,
    ManifestEntry, Measure, MeasureRecord, SampleSpec,
};

use super::{load_sampled, thread_pool};
use crate::args::SweepArgs;
use crate::CommandError;

pub const ERRORS_HEADER: [&str; 6] = [
    "model_id",
    "checkpoint_step",
    "layer",
    "measure",
    "path",
    "error",
];

/// One failed entry, or one failed measure of an entry. `measure` is `*`
/// when the entry could not be loaded at all.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SweepFailure {
    pub model_id: String,
    pub checkpoint_step: i64,
    pub layer: i64,
    pub measure: String,
    pub path: PathBuf,
    pub error: String,
}

#[derive(Debug, Default)]
pub struct SweepOutcome {
    pub records: Vec<MeasureRecord>,
    pub failures: Vec<SweepFailure>,
}

pub fn errors_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".errors.csv");
    PathBuf::from(s)
}

pub fn run(args: &SweepArgs, out: &mut dyn Write) -> Result<(), CommandError> {
    let manifest = Manifest::load(&args.manifest).map_err(|e| {
        CommandError::from(e).context(format!("loading {}", args.manifest.display()))
    })?;
    let mut measures = args.measure.clone();
    measures.sort();
    measures.dedup();
    if measures.is_empty() {
        return Err(CommandError::precondition(anyhow::anyhow!(
            "no measures requested"
        )));
    }
    let pool = thread_pool(args.jobs)?;
    let config = args.cluster.config(args.sample.seed);
    let spec = args.sample.spec();
    let outcome = pool.install(|| sweep(&manifest, &measures, &spec, &config));

    let file = File::create(&args.out)?;
    write_measures_csv(&outcome.records, BufWriter::new(file))?;
    let errors = errors_path(&args.out);
    write_failures(&outcome.failures, &errors)?;

    let rows: usize = outcome.records.iter().map(|r| r.measures.len()).sum();
    writeln!(
        out,
        "{} entries, {} measure rows, {} failures",
        manifest.entries.len(),
        rows,
        outcome.failures.len()
    )?;
    if !outcome.failures.is_empty() {
        log::warn!(
            "{} failures recorded in {}",
            outcome.failures.len(),
            errors.display()
        );
    }
    Ok(())
}

/// Processes every entry in the current rayon pool. Results are sorted, so
/// the outcome does not depend on the number of threads.
pub fn sweep(
    manifest: &Manifest,
    measures: &[Measure],
    spec: &SampleSpec,
    config: &ClusterConfig,
) -> SweepOutcome {
    let per_entry: Vec<(Option<MeasureRecord>, Vec<SweepFailure>)> = manifest
        .entries
        .par_iter()
        .map(|e| process_entry(e, measures, spec, config))
        .collect();
    let mut outcome = SweepOutcome::default();
    for (record, failures) in per_entry {
        outcome.records.extend(record);
        outcome.failures.extend(failures);
    }
    outcome.records.sort_by(|a, b| {
        (&a.model_id, a.checkpoint_step, a.layer).cmp(&(&b.model_id, b.checkpoint_step, b.layer))
    });
    outcome.failures.sort();
    outcome
}

fn process_entry(
    entry: &ManifestEntry,
    measures: &[Measure],
    spec: &SampleSpec,
    config: &ClusterConfig,
) -> (Option<MeasureRecord>, Vec<SweepFailure>) {
    let fail = |measure: &str, error: String| SweepFailure {
        model_id: entry.model_id.clone(),
        checkpoint_step: entry.checkpoint_step,
        layer: entry.layer,
        measure: measure.to_string(),
        path: entry.path.clone(),
        error,
    };
    let set = match load_sampled(&entry.path, spec) {
        Ok(s) => s,
        Err(e) => return (None, vec![fail("*", e.to_string())]),
    };

    let mut values = BTreeMap::new();
    let mut failures = Vec::new();
    let frames = set.pooled();

    if measures.iter().any(|m| m.is_cluster_measure()) {
        match fit_minibatch(frames, config) {
            Ok(model) => {
                for &m in measures.iter().filter(|m| m.is_cluster_measure()) {
                    let v = match m {
                        Measure::Wcss => wcss(&model, frames),
                        _ => db_index(&model, frames),
                    };
                    match v {
                        Ok(v) => {
                            values.insert(m.as_str().to_string(), v);
                        }
                        Err(e) => failures.push(fail(m.as_str(), e.to_string())),
                    }
                }
            }
            Err(e) => {
                for m in measures.iter().filter(|m| m.is_cluster_measure()) {
                    failures.push(fail(m.as_str(), e.to_string()));
                }
            }
        }
    }
    for &m in measures.iter().filter(|m| !m.is_cluster_measure()) {
        let r = match m {
            Measure::RankmeT => rankme_t(&set),
            _ => global_effective_rank(&set),
        };
        match r {
            Ok(r) => {
                values.insert(m.as_str().to_string(), r.value);
            }
            Err(e) => failures.push(fail(m.as_str(), e.to_string())),
        }
    }

    let record = (!values.is_empty()).then(|| MeasureRecord {
        model_id: entry.model_id.clone(),
        checkpoint_step: entry.checkpoint_step,
        layer: entry.layer,
        measures: values,
    });
    (record, failures)
}

fn write_failures(failures: &[SweepFailure], path: &Path) -> Result<(), CommandError> {
    let mut w = csv::Writer::from_path(path).map_err(CommandError::format)?;
    let io = |e: csv::Error| CommandError::format(e);
    w.write_record(ERRORS_HEADER).map_err(io)?;
    for f in failures {
        w.write_record([
            f.model_id.as_str(),
            &f.checkpoint_step.to_string(),
            &f.layer.to_string(),
            &f.measure,
            &f.path.to_string_lossy(),
            &f.error,
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
