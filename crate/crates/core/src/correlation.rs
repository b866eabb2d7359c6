//! Pearson correlation of unsupervised measures against downstream scores.
//!
//! Measures for one `(checkpoint_step, layer)` are joined with one task's
//! downstream scores on `model_id`. The step the scores were measured at is
//! not part of the join, so measures taken early in training can be
//! correlated with final scores.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ErrorCategory;

/// Fewest matched models for which a coefficient is reported.
pub const MIN_MATCHED: usize = 3;

#[derive(Debug, Error)]
pub enum CorrelationError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {MIN_MATCHED} points, got {0}")]
    TooFewPoints(usize),
    #[error("constant series")]
    ConstantSeries,
    #[error("non-finite value in series")]
    NonFinite,
    #[error("insufficient matched models: {matched} matched, need {MIN_MATCHED}")]
    InsufficientMatches { matched: usize },
    #[error("duplicate {0}")]
    Duplicate(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("malformed csv: {0}")]
    Csv(String),
}

impl From<csv::Error> for CorrelationError {
    fn from(e: csv::Error) -> Self {
        match e.kind() {
            csv::ErrorKind::Io(_) => match e.into_kind() {
                csv::ErrorKind::Io(io) => CorrelationError::Io(io),
                _ => unreachable!(),
            },
            _ => CorrelationError::Csv(e.to_string()),
        }
    }
}

impl CorrelationError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            CorrelationError::ConstantSeries | CorrelationError::NonFinite => ErrorCategory::Math,
            CorrelationError::Io(_) | CorrelationError::Csv(_) | CorrelationError::Duplicate(_) => {
                ErrorCategory::Format
            }
            _ => ErrorCategory::Precondition,
        }
    }
}

/// Sample Pearson coefficient, computed in two passes (means, then centered
/// products).
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, CorrelationError> {
    if x.len() != y.len() {
        return Err(CorrelationError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < MIN_MATCHED {
        return Err(CorrelationError::TooFewPoints(n));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(CorrelationError::NonFinite);
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(CorrelationError::ConstantSeries);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Measures of one `(model, checkpoint_step, layer)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureRecord {
    pub model_id: String,
    pub checkpoint_step: i64,
    pub layer: i64,
    pub measures: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    Wer,
    ErrorRate,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DownstreamRow {
    pub model_id: String,
    pub task: String,
    pub score: f64,
    pub score_kind: ScoreKind,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DownstreamTable {
    rows: Vec<DownstreamRow>,
}

impl DownstreamTable {
    pub fn new(rows: Vec<DownstreamRow>) -> Result<Self, CorrelationError> {
        let mut seen = HashSet::new();
        for r in &rows {
            if !seen.insert((r.model_id.as_str(), r.task.as_str())) {
                return Err(CorrelationError::Duplicate(format!(
                    "downstream row for model {} task {}",
                    r.model_id, r.task
                )));
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[DownstreamRow] {
        &self.rows
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self, CorrelationError> {
        let mut rdr = csv::Reader::from_path(path)?;
        let rows = rdr
            .deserialize()
            .collect::<Result<Vec<DownstreamRow>, _>>()?;
        Self::new(rows)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), CorrelationError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["model_id", "task", "score", "score_kind"])?;
        for r in &self.rows {
            let kind = match r.score_kind {
                ScoreKind::Wer => "wer",
                ScoreKind::ErrorRate => "error_rate",
                ScoreKind::Other => "other",
            };
            w.write_record([&r.model_id, &r.task, &fmt_f64(r.score), kind])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureCorrelation {
    pub pearson_r: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub task: String,
    /// Free-form name of the score column, e.g. which step it was measured at.
    pub score_label: String,
    pub checkpoint_step: i64,
    pub layer: i64,
    pub per_measure: BTreeMap<String, MeasureCorrelation>,
    /// Models present on only one side of the join.
    pub dropped_models: Vec<String>,
    /// Measures left out, with the reason.
    pub excluded_measures: BTreeMap<String, String>,
}

/// Correlates every measure recorded at `(checkpoint_step, layer)` with the
/// downstream scores of `task`.
pub fn correlate(
    measures: &[MeasureRecord],
    downstream: &DownstreamTable,
    task: &str,
    checkpoint_step: i64,
    layer: i64,
) -> Result<CorrelationReport, CorrelationError> {
    let mut by_model: BTreeMap<&str, &MeasureRecord> = BTreeMap::new();
    for r in measures
        .iter()
        .filter(|r| r.checkpoint_step == checkpoint_step && r.layer == layer)
    {
        if by_model.insert(&r.model_id, r).is_some() {
            return Err(CorrelationError::Duplicate(format!(
                "measure record for model {} step {checkpoint_step} layer {layer}",
                r.model_id
            )));
        }
    }
    let scores: BTreeMap<&str, f64> = downstream
        .rows
        .iter()
        .filter(|r| r.task == task)
        .map(|r| (r.model_id.as_str(), r.score))
        .collect();

    let matched: Vec<&str> = by_model
        .keys()
        .filter(|m| scores.contains_key(*m))
        .copied()
        .collect();
    let dropped_models: Vec<String> = by_model
        .keys()
        .chain(scores.keys())
        .filter(|m| !(by_model.contains_key(*m) && scores.contains_key(*m)))
        .map(|m| m.to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    for m in &dropped_models {
        log::warn!("model {m} has no match on the other side of the join; dropped");
    }
    if matched.len() < MIN_MATCHED {
        return Err(CorrelationError::InsufficientMatches {
            matched: matched.len(),
        });
    }

    let names: BTreeSet<&str> = matched
        .iter()
        .flat_map(|m| by_model[m].measures.keys().map(String::as_str))
        .collect();
    let y: Vec<f64> = matched.iter().map(|m| scores[m]).collect();
    let mut per_measure = BTreeMap::new();
    let mut excluded_measures = BTreeMap::new();
    for name in names {
        let x: Vec<f64> = matched
            .iter()
            .filter_map(|m| by_model[m].measures.get(name).copied())
            .collect();
        if x.len() != matched.len() {
            let reason = format!("present in {} of {} matched models", x.len(), matched.len());
            log::warn!("measure {name} excluded: {reason}");
            excluded_measures.insert(name.to_string(), reason);
            continue;
        }
        match pearson(&x, &y) {
            Ok(r) => {
                per_measure.insert(
                    name.to_string(),
                    MeasureCorrelation {
                        pearson_r: r,
                        n: x.len(),
                    },
                );
            }
            Err(e) => {
                log::warn!("measure {name} excluded: {e}");
                excluded_measures.insert(name.to_string(), e.to_string());
            }
        }
    }
    Ok(CorrelationReport {
        task: task.to_string(),
        score_label: task.to_string(),
        checkpoint_step,
        layer,
        per_measure,
        dropped_models,
        excluded_measures,
    })
}

/// Lossless decimal rendering with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Deserialize)]
struct MeasureRow {
    model_id: String,
    checkpoint_step: i64,
    layer: i64,
    measure: String,
    value: f64,
}

pub const MEASURES_HEADER: [&str; 5] = ["model_id", "checkpoint_step", "layer", "measure", "value"];

/// Reads the long-format measures CSV and groups rows into records.
pub fn read_measures_csv(path: impl AsRef<Path>) -> Result<Vec<MeasureRecord>, CorrelationError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut grouped: BTreeMap<(String, i64, i64), BTreeMap<String, f64>> = BTreeMap::new();
    for row in rdr.deserialize() {
        let row: MeasureRow = row?;
        if !row.value.is_finite() {
            return Err(CorrelationError::NonFinite);
        }
        let key = (row.model_id, row.checkpoint_step, row.layer);
        let entry = grouped.entry(key.clone()).or_default();
        if entry.insert(row.measure.clone(), row.value).is_some() {
            return Err(CorrelationError::Duplicate(format!(
                "measure {} for model {} step {} layer {}",
                row.measure, key.0, key.1, key.2
            )));
        }
    }
    Ok(grouped
        .into_iter()
        .map(
            |((model_id, checkpoint_step, layer), measures)| MeasureRecord {
                model_id,
                checkpoint_step,
                layer,
                measures,
            },
        )
        .collect())
}

/// Writes records in long format, sorted by model, step, layer and measure.
pub fn write_measures_csv(
    records: &[MeasureRecord],
    w: impl io::Write,
) -> Result<(), CorrelationError> {
    let mut rows: Vec<(&str, i64, i64, &str, f64)> = records
        .iter()
        .flat_map(|r| {
            r.measures.iter().map(move |(m, &v)| {
                (
                    r.model_id.as_str(),
                    r.checkpoint_step,
                    r.layer,
                    m.as_str(),
                    v,
                )
            })
        })
        .collect();
    rows.sort_by(|a, b| (a.0, a.1, a.2, a.3).cmp(&(b.0, b.1, b.2, b.3)));
    let mut w = csv::Writer::from_writer(w);
    w.write_record(MEASURES_HEADER)?;
    for (model, step, layer, measure, value) in rows {
        w.write_record([
            model,
            &step.to_string(),
            &layer.to_string(),
            measure,
            &fmt_f64(value),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub const REPORT_HEADER: [&str; 6] = [
    "task",
    "checkpoint_step",
    "layer",
    "measure",
    "pearson_r",
    "n",
];

/// One line of the report CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub task: String,
    pub checkpoint_step: i64,
    pub layer: i64,
    pub measure: String,
    pub pearson_r: f64,
    pub n: usize,
}

impl CorrelationReport {
    pub fn rows(&self) -> Vec<ReportRow> {
        self.per_measure
            .iter()
            .map(|(m, c)| ReportRow {
                task: self.task.clone(),
                checkpoint_step: self.checkpoint_step,
                layer: self.layer,
                measure: m.clone(),
                pearson_r: c.pearson_r,
                n: c.n,
            })
            .collect()
    }

    pub fn write_csv(&self, w: impl io::Write) -> Result<(), CorrelationError> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(REPORT_HEADER)?;
        for r in self.rows() {
            w.write_record([
                r.task.as_str(),
                &r.checkpoint_step.to_string(),
                &r.layer.to_string(),
                &r.measure,
                &fmt_f64(r.pearson_r),
                &r.n.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn read_report_csv(path: impl AsRef<Path>) -> Result<Vec<ReportRow>, CorrelationError> {
    let mut rdr = csv::Reader::from_path(path)?;
    Ok(rdr.deserialize().collect::<Result<Vec<ReportRow>, _>>()?)
}
