//! Best-guess baselines and the three-region segmentation of a learning
//! curve: small-data plateau, power-law region, irreducible-error floor.

use serde::{Deserialize, Serialize};

use crate::curve::{CurveObservation, PowerLawCurve};
use crate::error::{Error, Result};
use crate::fitting::{fit_with_floor, FloorMode};

pub const DEFAULT_PLATEAU_TOLERANCE: f64 = 0.05;
pub const DEFAULT_FLOOR_IMPROVEMENT: f64 = 0.01;

pub const CLIFF_CAVEAT: &str = "small-data labels cannot be told apart from an accuracy cliff \
     caused by optimization difficulty on small shards";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    CrossEntropyNaturalLog,
    TopKClassificationError,
    /// Caller-supplied level for metrics with no class count (e.g. CER).
    Custom,
}

/// Loss achieved by guessing without learning anything.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuessBaseline {
    pub metric_kind: MetricKind,
    pub class_count: Option<u64>,
    pub k: Option<u64>,
    pub value: f64,
}

/// `ln(K)` for cross-entropy, `1 - k/K` for top-k error.
pub fn guess_baseline(metric_kind: MetricKind, classes: u64, k: u64) -> Result<GuessBaseline> {
    match metric_kind {
        MetricKind::CrossEntropyNaturalLog => GuessBaseline::cross_entropy(classes),
        MetricKind::TopKClassificationError => GuessBaseline::top_k_error(classes, k),
        MetricKind::Custom => Err(Error::InvalidArgument(
            "custom baselines take a value, not a class count".into(),
        )),
    }
}

impl GuessBaseline {
    pub fn cross_entropy(classes: u64) -> Result<Self> {
        if classes < 2 {
            return Err(Error::InvalidClassCount { classes, k: 1 });
        }
        Ok(GuessBaseline {
            metric_kind: MetricKind::CrossEntropyNaturalLog,
            class_count: Some(classes),
            k: None,
            value: (classes as f64).ln(),
        })
    }

    pub fn top_k_error(classes: u64, k: u64) -> Result<Self> {
        if classes < 2 || k < 1 || k >= classes {
            return Err(Error::InvalidClassCount { classes, k });
        }
        Ok(GuessBaseline {
            metric_kind: MetricKind::TopKClassificationError,
            class_count: Some(classes),
            k: Some(k),
            value: 1.0 - k as f64 / classes as f64,
        })
    }

    pub fn custom(value: f64) -> Result<Self> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "baseline must be positive, got {value}"
            )));
        }
        Ok(GuessBaseline {
            metric_kind: MetricKind::Custom,
            class_count: None,
            k: None,
            value,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    SmallData,
    PowerLaw,
    Irreducible,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::SmallData => "small_data",
            Region::PowerLaw => "power_law",
            Region::Irreducible => "irreducible",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentOptions {
    /// A point is on the plateau when `loss >= (1 - tol) * baseline`.
    pub plateau_tolerance: f64,
    /// Per-doubling relative improvement below which the tail is a floor.
    pub floor_improvement_threshold: f64,
}

impl Default for SegmentOptions {
    fn default() -> Self {
        SegmentOptions {
            plateau_tolerance: DEFAULT_PLATEAU_TOLERANCE,
            floor_improvement_threshold: DEFAULT_FLOOR_IMPROVEMENT,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionSegmentation {
    pub labels: Vec<Region>,
    /// Smallest and largest shard size labelled power-law.
    pub power_law_range: (u64, u64),
    pub fitted_curve: Option<PowerLawCurve>,
    pub fit_rrmse: Option<f64>,
    pub caveats: Vec<String>,
}

impl RegionSegmentation {
    pub fn count(&self, region: Region) -> usize {
        self.labels.iter().filter(|&&l| l == region).count()
    }

    /// Index of the first power-law point.
    pub fn power_law_start(&self) -> usize {
        self.count(Region::SmallData)
    }
}

/// Relative reduction of loss per doubling of data between two points.
pub fn improvement_per_doubling_between(m0: f64, l0: f64, m1: f64, l1: f64) -> f64 {
    let doublings = (m1 / m0).log2();
    1.0 - (l1 / l0).powf(1.0 / doublings)
}

/// Labels each observation with its region and fits the power-law part.
///
/// The small-data region is the leading run of points at or above the
/// plateau level; the irreducible region is the trailing run whose
/// per-doubling improvement stays below the threshold. Whatever lies between
/// is the power-law region. The first point that breaks a run ends it, so
/// labels are always ordered small-data, power-law, irreducible.
pub fn segment(
    observations: &[CurveObservation],
    baseline: &GuessBaseline,
    options: SegmentOptions,
) -> Result<RegionSegmentation> {
    let n = observations.len();
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    for (name, v) in [
        ("plateau_tolerance", options.plateau_tolerance),
        ("floor_improvement_threshold", options.floor_improvement_threshold),
    ] {
        if !(v > 0.0 && v < 0.5) {
            return Err(Error::InvalidArgument(format!("{name} must lie in (0, 0.5), got {v}")));
        }
    }
    for w in observations.windows(2) {
        if w[1].shard_size <= w[0].shard_size {
            return Err(Error::InvalidArgument(
                "observations must have strictly increasing shard sizes".into(),
            ));
        }
    }
    for o in observations {
        if !(o.loss_value.is_finite() && o.loss_value > 0.0) {
            return Err(Error::NonPositiveLoss {
                shard_size: o.shard_size,
                value: o.loss_value,
            });
        }
    }

    let plateau = (1.0 - options.plateau_tolerance) * baseline.value;
    let small_end = observations.iter().position(|o| o.loss_value < plateau).unwrap_or(n);

    let mut floor_start = n;
    while floor_start >= 2 {
        let (a, b) = (&observations[floor_start - 2], &observations[floor_start - 1]);
        let imp =
            improvement_per_doubling_between(a.shard_size as f64, a.loss_value, b.shard_size as f64, b.loss_value);
        if imp < options.floor_improvement_threshold {
            floor_start -= 1;
        } else {
            break;
        }
    }
    let floor_start = floor_start.max(small_end);

    let power_law = &observations[small_end..floor_start];
    if power_law.len() < 2 {
        return Err(Error::NoPowerLawRegion(format!(
            "{} point(s) between the plateau ({} points) and the floor ({} points)",
            power_law.len(),
            small_end,
            n - floor_start
        )));
    }

    let floor = if floor_start < n && power_law.len() >= 4 {
        FloorMode::Free
    } else {
        FloorMode::Zero
    };
    let fit = fit_with_floor(power_law, floor)?;

    let labels = (0..n)
        .map(|j| {
            if j < small_end {
                Region::SmallData
            } else if j < floor_start {
                Region::PowerLaw
            } else {
                Region::Irreducible
            }
        })
        .collect();

    let mut caveats = Vec::new();
    if small_end > 0 {
        caveats.push(CLIFF_CAVEAT.to_string());
    }

    Ok(RegionSegmentation {
        labels,
        power_law_range: (power_law[0].shard_size, power_law[power_law.len() - 1].shard_size),
        fitted_curve: fit.learning_curve().copied(),
        fit_rrmse: Some(fit.rrmse),
        caveats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_region(alpha: f64) -> Vec<CurveObservation> {
        let mut o = vec![CurveObservation::new(10, 6.90), CurveObservation::new(20, 6.88)];
        let c = PowerLawCurve::zero_floor(alpha, -0.35).unwrap();
        for k in 0..8 {
            let m = 100u64 << k;
            o.push(CurveObservation::new(m, c.evaluate(m as f64)));
        }
        o
    }

    fn opts(plateau: f64) -> SegmentOptions {
        SegmentOptions {
            plateau_tolerance: plateau,
            ..SegmentOptions::default()
        }
    }

    #[test]
    fn baselines() {
        let xent = guess_baseline(MetricKind::CrossEntropyNaturalLog, 1000, 1).unwrap();
        assert!((xent.value - 6.9078).abs() < 1e-4);
        assert_eq!(xent.value, 1000f64.ln());
        let top1 = guess_baseline(MetricKind::TopKClassificationError, 1000, 1).unwrap();
        assert!((top1.value - 0.999).abs() < 1e-15);
        let coin = GuessBaseline::top_k_error(2, 1).unwrap();
        assert_eq!(coin.value, 0.5);
        assert!(matches!(
            GuessBaseline::top_k_error(1, 1),
            Err(Error::InvalidClassCount { .. })
        ));
        assert!(GuessBaseline::top_k_error(5, 5).is_err());
        assert!(GuessBaseline::cross_entropy(1).is_err());
        assert!(GuessBaseline::custom(0.0).is_err());
    }

    #[test]
    fn three_region_fixture_as_written() {
        // 40 * 100^-0.35 = 7.98 sits above the baseline, so m=100 is also plateau.
        let b = GuessBaseline::cross_entropy(1000).unwrap();
        let s = segment(&three_region(40.0), &b, opts(0.02)).unwrap();
        assert_eq!(s.count(Region::SmallData), 3);
        assert_eq!(s.count(Region::PowerLaw), 7);
        assert!((s.fitted_curve.unwrap().beta() + 0.35).abs() < 0.01);
        assert_eq!(s.power_law_range, (200, 12800));
        assert_eq!(s.caveats.len(), 1);
    }

    #[test]
    fn three_region_fixture_two_plateau_points() {
        let b = GuessBaseline::cross_entropy(1000).unwrap();
        let s = segment(&three_region(30.0), &b, opts(0.02)).unwrap();
        let mut expected = vec![Region::SmallData; 2];
        expected.extend(vec![Region::PowerLaw; 8]);
        assert_eq!(s.labels, expected);
        assert!((s.fitted_curve.unwrap().beta() + 0.35).abs() < 0.01);
    }

    #[test]
    fn all_plateau_has_no_power_law() {
        let b = GuessBaseline::cross_entropy(1000).unwrap();
        let o: Vec<_> = (0..5).map(|k| CurveObservation::new(10 << k, b.value)).collect();
        assert!(matches!(
            segment(&o, &b, SegmentOptions::default()),
            Err(Error::NoPowerLawRegion(_))
        ));
    }

    #[test]
    fn pure_power_law_is_all_power_law() {
        let b = GuessBaseline::cross_entropy(1000).unwrap();
        let c = PowerLawCurve::zero_floor(2.0, -0.3).unwrap();
        let o: Vec<_> = (0..8)
            .map(|k| {
                let m = 1000u64 << k;
                CurveObservation::new(m, c.evaluate(m as f64))
            })
            .collect();
        let s = segment(&o, &b, SegmentOptions::default()).unwrap();
        assert!(s.labels.iter().all(|&l| l == Region::PowerLaw));
        assert!(s.caveats.is_empty());
    }

    #[test]
    fn floor_is_detected_and_fitted_with_free_floor() {
        let b = GuessBaseline::custom(10.0).unwrap();
        let c = PowerLawCurve::new(5.0, -0.5, 1.0).unwrap();
        let o: Vec<_> = (0..16)
            .map(|k| {
                let m = 10u64 << k;
                CurveObservation::new(m, c.evaluate(m as f64))
            })
            .collect();
        let s = segment(&o, &b, SegmentOptions::default()).unwrap();
        let irr = s.count(Region::Irreducible);
        assert!(irr > 0);
        // everything labelled irreducible improves by less than 1% per doubling
        let start = o.len() - irr;
        for j in start.max(1)..o.len() {
            let imp = improvement_per_doubling_between(
                o[j - 1].shard_size as f64,
                o[j - 1].loss_value,
                o[j].shard_size as f64,
                o[j].loss_value,
            );
            assert!(imp < 0.01);
        }
        let fitted = s.fitted_curve.unwrap();
        assert!((fitted.beta() + 0.5).abs() < 0.01, "{fitted:?}");
    }

    #[test]
    fn argument_validation() {
        let b = GuessBaseline::cross_entropy(10).unwrap();
        let o = vec![CurveObservation::new(10, 1.0), CurveObservation::new(20, 0.5)];
        assert!(matches!(
            segment(&o, &b, SegmentOptions::default()),
            Err(Error::InsufficientData { .. })
        ));
        let o = vec![
            CurveObservation::new(20, 1.0),
            CurveObservation::new(10, 0.5),
            CurveObservation::new(40, 0.2),
        ];
        assert!(segment(&o, &b, SegmentOptions::default()).is_err());
        let o = vec![
            CurveObservation::new(10, 1.0),
            CurveObservation::new(20, 0.5),
            CurveObservation::new(40, 0.2),
        ];
        assert!(segment(&o, &b, opts(0.5)).is_err());
    }
}
