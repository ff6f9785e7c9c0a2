//! File formats: observations CSV, fit-report JSON, shard-plan JSON, and the
//! segmentation and plot-data outputs.
//!
//! Reals are written in their shortest round-trip form, so reading a file
//! back yields bit-identical values.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::curve::{CurveObservation, PowerLawCurve, DEFAULT_LOSS_EPSILON};
use crate::error::{Error, Result};
use crate::fitting::{FitKind, FitReport};
use crate::regions::{GuessBaseline, RegionSegmentation};
use crate::sharding::ShardPlan;

pub const OBSERVATIONS_HEADER: [&str; 6] = [
    "shard_size",
    "loss_value",
    "metric_name",
    "model_params",
    "seed",
    "split_tag",
];

/// Shortest decimal string that parses back to exactly `x`.
pub fn format_real(x: f64) -> String {
    let mut buf = ryu::Buffer::new();
    buf.format(x).to_string()
}

pub fn write_observations<W: Write>(writer: W, observations: &[CurveObservation]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(OBSERVATIONS_HEADER)?;
    for o in observations {
        w.write_record([
            o.shard_size.to_string(),
            format_real(o.loss_value),
            o.metric_name.clone(),
            o.model_params.map(|p| p.to_string()).unwrap_or_default(),
            o.seed.map(|s| s.to_string()).unwrap_or_default(),
            o.split_tag.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn observations_to_string(observations: &[CurveObservation]) -> Result<String> {
    let mut buf = Vec::new();
    write_observations(&mut buf, observations)?;
    String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
}

fn parse_field<T: std::str::FromStr>(value: &str, column: &str, line: u64) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: bad {column} value {value:?}")))
}

fn parse_optional<T: std::str::FromStr>(value: &str, column: &str, line: u64) -> Result<Option<T>> {
    if value.trim().is_empty() {
        Ok(None)
    } else {
        parse_field(value, column, line).map(Some)
    }
}

/// Reads an observations CSV. Zero losses are clamped to
/// [`DEFAULT_LOSS_EPSILON`] and flagged; negative losses are rejected.
pub fn read_observations<R: Read>(reader: R) -> Result<Vec<CurveObservation>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = r.headers()?.clone();
    if header.iter().map(str::trim).ne(OBSERVATIONS_HEADER) {
        return Err(Error::Parse(format!(
            "expected header {:?}, got {:?}",
            OBSERVATIONS_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for record in r.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != OBSERVATIONS_HEADER.len() {
            return Err(Error::Parse(format!(
                "line {line}: expected 6 fields, got {}",
                record.len()
            )));
        }
        let o = CurveObservation {
            shard_size: parse_field(&record[0], "shard_size", line)?,
            loss_value: parse_field(&record[1], "loss_value", line)?,
            metric_name: record[2].to_string(),
            model_params: parse_optional(&record[3], "model_params", line)?,
            seed: parse_optional(&record[4], "seed", line)?,
            split_tag: record[5].to_string(),
            clamped: false,
        };
        out.push(o.ingest(DEFAULT_LOSS_EPSILON)?);
    }
    Ok(out)
}

pub fn parse_observations(text: &str) -> Result<Vec<CurveObservation>> {
    read_observations(text.as_bytes())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalsDocument {
    pub alpha: [f64; 2],
    pub beta: [f64; 2],
    pub gamma: [f64; 2],
}

/// Serialized fit report. Field order is part of the format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReportDocument {
    pub fit_kind: FitKind,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub rrmse: f64,
    pub n_observations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci: Option<IntervalsDocument>,
    pub residuals: Vec<f64>,
    pub warnings: Vec<String>,
}

impl From<&FitReport> for FitReportDocument {
    fn from(r: &FitReport) -> Self {
        FitReportDocument {
            fit_kind: r.fit_kind,
            alpha: r.alpha(),
            beta: r.beta(),
            gamma: r.gamma(),
            rrmse: r.rrmse,
            n_observations: r.n_observations,
            ci: r.ci.as_ref().map(|ci| IntervalsDocument {
                alpha: [ci.alpha.0, ci.alpha.1],
                beta: [ci.beta.0, ci.beta.1],
                gamma: [ci.gamma.0, ci.gamma.1],
            }),
            residuals: r.residuals.clone(),
            warnings: r.warnings.iter().map(|w| w.to_string()).collect(),
        }
    }
}

impl FitReportDocument {
    /// Value predicted by the fitted law at size `m`.
    pub fn predict(&self, m: f64) -> f64 {
        self.alpha * m.powf(self.beta) + self.gamma
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn parse_fit_report(text: &str) -> Result<FitReportDocument> {
    Ok(serde_json::from_str(text)?)
}

/// Parses a shard-plan document and checks the plan invariants.
pub fn parse_shard_plan(text: &str) -> Result<ShardPlan> {
    let plan: ShardPlan = serde_json::from_str(text)?;
    plan.validate()?;
    Ok(plan)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveDocument {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl From<&PowerLawCurve> for CurveDocument {
    fn from(c: &PowerLawCurve) -> Self {
        CurveDocument {
            alpha: c.alpha(),
            beta: c.beta(),
            gamma: c.gamma(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentationDocument {
    pub baseline: GuessBaseline,
    pub labels: Vec<&'static str>,
    pub power_law_range: [u64; 2],
    pub fitted_curve: Option<CurveDocument>,
    pub fit_rrmse: Option<f64>,
    pub caveats: Vec<String>,
}

impl SegmentationDocument {
    pub fn new(baseline: &GuessBaseline, s: &RegionSegmentation) -> Self {
        SegmentationDocument {
            baseline: *baseline,
            labels: s.labels.iter().map(|l| l.as_str()).collect(),
            power_law_range: [s.power_law_range.0, s.power_law_range.1],
            fitted_curve: s.fitted_curve.as_ref().map(CurveDocument::from),
            fit_rrmse: s.fit_rrmse,
            caveats: s.caveats.clone(),
        }
    }
}

/// Per-point labels as `shard_size,loss_value,label`.
pub fn labels_csv(observations: &[CurveObservation], s: &RegionSegmentation) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["shard_size", "loss_value", "label"])?;
    for (o, l) in observations.iter().zip(&s.labels) {
        w.write_record([
            o.shard_size.to_string(),
            format_real(o.loss_value),
            l.as_str().to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

/// `log10 size, log10 observed, log10 fitted` rows for log-log plotting.
pub fn plot_data_csv(observations: &[CurveObservation], fit: &FitReportDocument) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["log10_size", "log10_observed", "log10_fitted"])?;
    for o in observations {
        let m = o.shard_size as f64;
        w.write_record([
            format_real(m.log10()),
            format_real(o.loss_value.log10()),
            format_real(fit.predict(m).log10()),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}
