//! Data, model-size and relative-compute requirements for a target loss.
//!
//! Compute is modelled as `params * samples` for one pass over the data and
//! is only ever reported relative to a reference point.

use std::cmp::Ordering;

use serde::Serialize;

use crate::curve::{ModelSizeCurve, PowerLawCurve};
use crate::error::{Error, Result};

/// Projections reaching further than this beyond the reference size carry a
/// warning.
pub const EXTRAPOLATION_WARNING_FACTOR: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionResult {
    pub target_loss: f64,
    pub feasible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub required_data: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub required_params: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relative_compute: Option<f64>,
    /// `required_data / reference_size`, never below 1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extrapolation_factor: Option<f64>,
    pub warnings: Vec<String>,
}

/// Answers "how much data (and model, and compute) reaches `target_loss`?".
///
/// `reference_size` is normally the largest observed shard; relative compute
/// is normalized to the params-times-data product there.
pub fn project(
    learning: &PowerLawCurve,
    sizing: Option<&ModelSizeCurve>,
    target_loss: f64,
    reference_size: f64,
) -> Result<ProjectionResult> {
    if learning.beta() >= 0.0 {
        return Err(Error::InvalidCurve(format!(
            "projection needs a decreasing learning curve, beta = {}",
            learning.beta()
        )));
    }
    if !(reference_size.is_finite() && reference_size >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "reference size must be at least 1, got {reference_size}"
        )));
    }
    if !(target_loss.is_finite() && target_loss > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "target loss must be positive, got {target_loss}"
        )));
    }

    if target_loss <= learning.gamma() {
        return Ok(ProjectionResult {
            target_loss,
            feasible: false,
            required_data: None,
            required_params: None,
            relative_compute: None,
            extrapolation_factor: None,
            warnings: vec![format!(
                "target is at or below the irreducible error {}",
                learning.gamma()
            )],
        });
    }

    let required_data = learning.invert_for_data(target_loss)?;
    let required_params = sizing.map(|s| s.evaluate(required_data));
    let relative_compute =
        sizing.map(|s| (s.evaluate(required_data) * required_data) / (s.evaluate(reference_size) * reference_size));
    let extrapolation_factor = (required_data / reference_size).max(1.0);

    let mut warnings = Vec::new();
    if extrapolation_factor > EXTRAPOLATION_WARNING_FACTOR {
        warnings.push(format!(
            "projection extrapolates {extrapolation_factor:.3e}x beyond the reference size"
        ));
    }

    Ok(ProjectionResult {
        target_loss,
        feasible: true,
        required_data: Some(required_data),
        required_params,
        relative_compute,
        extrapolation_factor: Some(extrapolation_factor),
        warnings,
    })
}

/// `1 - 2^beta`: fraction of the above-floor loss removed per data doubling.
pub fn improvement_per_doubling(learning: &PowerLawCurve) -> Result<f64> {
    if learning.beta() >= 0.0 {
        return Err(Error::InvalidCurve(format!(
            "improvement per doubling needs beta < 0, got {}",
            learning.beta()
        )));
    }
    Ok(-(learning.beta() * std::f64::consts::LN_2).exp_m1())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainRank {
    pub name: String,
    pub beta: f64,
    pub improvement_per_doubling: f64,
}

/// Ranks domains by improvement per doubling, steepest first; ties go to
/// the lexicographically smaller name.
pub fn compare_domains(curves: &[(String, PowerLawCurve)]) -> Result<Vec<DomainRank>> {
    if curves.is_empty() {
        return Err(Error::InvalidArgument("no curves to compare".into()));
    }
    let mut ranks = curves
        .iter()
        .map(|(name, c)| {
            Ok(DomainRank {
                name: name.clone(),
                beta: c.beta(),
                improvement_per_doubling: improvement_per_doubling(c)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ranks.sort_by(
        |a, b| match b.improvement_per_doubling.total_cmp(&a.improvement_per_doubling) {
            Ordering::Equal => a.name.cmp(&b.name),
            other => other,
        },
    );
    Ok(ranks)
}
