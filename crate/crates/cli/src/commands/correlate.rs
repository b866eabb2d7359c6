use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};

use ssleval_core::correlation::{read_measures_csv, REPORT_HEADER};
use ssleval_core::{correlate, CorrelationReport, DownstreamTable};

use crate::args::CorrelateArgs;
use crate::CommandError;

pub fn run(args: &CorrelateArgs, out: &mut dyn Write) -> Result<(), CommandError> {
    let records = read_measures_csv(&args.measures).map_err(|e| {
        CommandError::from(e).context(format!("reading {}", args.measures.display()))
    })?;
    let downstream = DownstreamTable::read_csv(&args.downstream).map_err(|e| {
        CommandError::from(e).context(format!("reading {}", args.downstream.display()))
    })?;

    let layers: Vec<i64> = match args.layer {
        Some(l) => vec![l],
        None => records
            .iter()
            .filter(|r| r.checkpoint_step == args.measure_step)
            .map(|r| r.layer)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
    };
    if layers.is_empty() {
        return Err(CommandError::precondition(anyhow::anyhow!(
            "no measures recorded at checkpoint step {}",
            args.measure_step
        )));
    }

    let mut reports = Vec::with_capacity(layers.len());
    for layer in layers {
        let mut report = correlate(&records, &downstream, &args.task, args.measure_step, layer)
            .map_err(|e| CommandError::from(e).context(format!("layer {layer}")))?;
        if let Some(label) = &args.score_label {
            report.score_label = label.clone();
        }
        for m in &report.dropped_models {
            log::warn!("layer {layer}: model {m} has no match and was dropped");
        }
        for (m, why) in &report.excluded_measures {
            log::warn!("layer {layer}: measure {m} excluded: {why}");
        }
        reports.push(report);
    }

    write_reports(&reports, File::create(&args.out)?)?;
    let json_path = args.out.with_extension("json");
    let mut text = serde_json::to_string_pretty(&reports).expect("reports serialize");
    text.push('\n');
    std::fs::write(&json_path, text)?;

    for r in &reports {
        for (m, c) in &r.per_measure {
            writeln!(
                out,
                "layer {} {m}: r = {:.4} (n = {})",
                r.layer, c.pearson_r, c.n
            )?;
        }
    }
    Ok(())
}

/// All reports in one CSV under a single header.
fn write_reports(reports: &[CorrelationReport], w: impl Write) -> Result<(), CommandError> {
    let mut buf = Vec::new();
    for (i, r) in reports.iter().enumerate() {
        let mut one = Vec::new();
        r.write_csv(&mut one)?;
        let body = if i == 0 {
            &one[..]
        } else {
            let skip = one
                .iter()
                .position(|&b| b == b'\n')
                .map_or(one.len(), |p| p + 1);
            &one[skip..]
        };
        buf.extend_from_slice(body);
    }
    debug_assert!(reports.is_empty() || buf.starts_with(REPORT_HEADER[0].as_bytes()));
    let mut w = BufWriter::new(w);
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}
