pub mod cluster;
pub mod correlate;
pub mod rank;
pub mod sweep;
pub mod synth;

use std::io::Write;
use std::path::Path;

use ssleval_core::{read_embeddings, subsample, EmbeddingSet, SampleSpec};

use crate::CommandError;

pub(crate) fn load_sampled(path: &Path, spec: &SampleSpec) -> Result<EmbeddingSet, CommandError> {
    let set = read_embeddings(path)
        .map_err(|e| CommandError::from(e).context(format!("reading {}", path.display())))?;
    let sampled = subsample(&set, spec);
    if sampled.total_frames() < set.total_frames() {
        log::info!(
            "{}: using {} of {} frames",
            path.display(),
            sampled.total_frames(),
            set.total_frames()
        );
    }
    Ok(sampled)
}

pub(crate) fn print_json(
    out: &mut dyn Write,
    value: &serde_json::Value,
) -> Result<(), CommandError> {
    let text = serde_json::to_string_pretty(value).expect("json values serialize");
    writeln!(out, "{text}")?;
    Ok(())
}

pub(crate) fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool, CommandError> {
    if jobs == 0 {
        return Err(CommandError::precondition(anyhow::anyhow!(
            "--jobs must be at least 1"
        )));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CommandError::precondition(anyhow::anyhow!("thread pool: {e}")))
}
