use std::io::Write;

use serde_json::json;
use ssleval_core::{global_effective_rank, rankme_t};

use super::{load_sampled, print_json};
use crate::args::{RankArgs, RankMeasure};
use crate::CommandError;

pub fn run(args: &RankArgs, out: &mut dyn Write) -> Result<(), CommandError> {
    let set = load_sampled(&args.input, &args.sample.spec())?;
    let (name, result) = match args.measure {
        RankMeasure::RankmeT => ("rankme_t", rankme_t(&set)?),
        RankMeasure::Ger => ("ger", global_effective_rank(&set)?),
    };
    print_json(
        out,
        &json!({
            "measure": name,
            "value": result.value,
            "frames_used": set.total_frames(),
            "sequences_used": set.n_sequences(),
            "seed": args.sample.seed,
        }),
    )
}
