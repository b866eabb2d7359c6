use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use serde_json::json;
use ssleval_core::rng::RNG_ALGORITHM;
use ssleval_core::synth::{cohort_downstream, cohort_plan};
use ssleval_core::{generate, write_embeddings, CohortSpec, Manifest, ManifestEntry, SynthSpec};

use super::{print_json, thread_pool};
use crate::args::{SynthCohortArgs, SynthCommand, SynthSetArgs};
use crate::CommandError;

pub fn run(cmd: &SynthCommand, out: &mut dyn Write) -> Result<(), CommandError> {
    match cmd {
        SynthCommand::Set(a) => run_set(a, out),
        SynthCommand::Cohort(a) => run_cohort(a, out),
    }
}

fn invalid(msg: String) -> CommandError {
    CommandError::precondition(anyhow::anyhow!(msg))
}

fn run_set(args: &SynthSetArgs, out: &mut dyn Write) -> Result<(), CommandError> {
    let s = &args.shape;
    let spec = SynthSpec {
        dim: s.dim,
        intrinsic_rank: args.rank,
        n_sequences: s.sequences,
        frames_per_sequence: s.frames_per_seq,
        noise_amplitude: s.noise,
        cluster_count: s.clusters,
        seed: s.seed,
    };
    let set = generate(&spec).map_err(invalid)?;
    write_embeddings(&set, &args.out)?;
    print_json(
        out,
        &json!({
            "path": args.out,
            "dim": spec.dim,
            "intrinsic_rank": spec.intrinsic_rank,
            "frames": set.total_frames(),
            "seed": spec.seed,
            "rng": RNG_ALGORITHM,
        }),
    )
}

fn run_cohort(args: &SynthCohortArgs, out: &mut dyn Write) -> Result<(), CommandError> {
    let s = &args.shape;
    let spec = CohortSpec {
        n_models: args.models,
        rank_low: args.rank_low,
        rank_high: args.rank_high,
        score_noise: args.score_noise,
        seed: s.seed,
        dim: s.dim,
        n_sequences: s.sequences,
        frames_per_sequence: s.frames_per_seq,
        noise_amplitude: s.noise,
        cluster_count: s.clusters,
        task: args.task.clone(),
    };
    let members = cohort_plan(&spec).map_err(invalid)?;
    std::fs::create_dir_all(&args.out)?;

    let pool = thread_pool(args.jobs)?;
    pool.install(|| {
        members
            .par_iter()
            .try_for_each(|m| -> Result<(), CommandError> {
                let set = generate(&m.spec).map_err(invalid)?;
                write_embeddings(&set, args.out.join(format!("{}.embd", m.model_id)))?;
                Ok(())
            })
    })?;

    let entries = members
        .iter()
        .map(|m| ManifestEntry {
            model_id: m.model_id.clone(),
            checkpoint_step: args.step,
            layer: args.layer,
            path: PathBuf::from(format!("{}.embd", m.model_id)),
            dataset_tag: "synthetic".into(),
        })
        .collect();
    Manifest::new(entries)?.save(args.out.join("manifest.json"))?;
    cohort_downstream(&args.task, &members).write_csv(args.out.join("downstream.csv"))?;

    let summary = json!({
        "rng": RNG_ALGORITHM,
        "seed": spec.seed,
        "task": spec.task,
        "models": members
            .iter()
            .map(|m| json!({
                "model_id": m.model_id,
                "intrinsic_rank": m.spec.intrinsic_rank,
                "seed": m.spec.seed,
                "score": m.score,
            }))
            .collect::<Vec<_>>(),
    });
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    std::fs::write(args.out.join("cohort.json"), text)?;
    print_json(out, &summary)
}
