use std::io::Write;

use serde_json::json;
use ssleval_core::clustering::evaluate;
use ssleval_core::fit_minibatch;

use super::{load_sampled, print_json};
use crate::args::ClusterArgs;
use crate::CommandError;

pub fn run(args: &ClusterArgs, out: &mut dyn Write) -> Result<(), CommandError> {
    let set = load_sampled(&args.input, &args.sample.spec())?;
    let config = args.cluster.config(args.sample.seed);
    let frames = set.pooled();
    let model = fit_minibatch(frames, &config)?;
    if !model.converged() {
        log::warn!(
            "k-means stopped after {} iterations without converging",
            model.iterations()
        );
    }
    let quality = evaluate(&model, frames)?;
    print_json(
        out,
        &json!({
            "wcss": quality.wcss,
            "db_index": quality.db_index,
            "populated_clusters": quality.populated_clusters,
            "k": model.k(),
            "converged": model.converged(),
            "iterations": model.iterations(),
            "frames_used": set.total_frames(),
            "seed": config.seed,
        }),
    )
}
