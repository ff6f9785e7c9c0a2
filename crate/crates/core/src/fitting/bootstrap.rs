use crate::curve::CurveObservation;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, SplitMix64};

use super::{distinct_sizes, fit, required_sizes, ConfidenceIntervals, FitReport, FitSpec, FitWarning};

/// Linear-interpolation quantile of sorted data (Hyndman–Fan type 7).
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn interval(mut values: Vec<f64>, confidence: f64, point: f64) -> (f64, f64) {
    values.sort_by(f64::total_cmp);
    let tail = (1.0 - confidence) / 2.0;
    let low = percentile(&values, tail);
    let high = percentile(&values, 1.0 - tail);
    // Keep the point estimate inside its own interval.
    (low.min(point), high.max(point))
}

/// Percentile-bootstrap confidence intervals for every fitted parameter.
///
/// Resample `r` draws its indices from the substream `(seed, r)`, so the
/// result is a pure function of the inputs. Resamples with too few distinct
/// sizes for the fit (or whose refit fails) are skipped and counted.
pub fn bootstrap_ci(
    observations: &[CurveObservation],
    spec: FitSpec,
    n_resamples: usize,
    confidence: f64,
    seed: u64,
) -> Result<FitReport> {
    if n_resamples < 100 {
        return Err(Error::InvalidArgument(format!(
            "bootstrap needs at least 100 resamples, got {n_resamples}"
        )));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "confidence must lie in (0, 1), got {confidence}"
        )));
    }
    let mut report = fit(observations, spec)?;
    let needed = required_sizes(spec);
    let n = observations.len();

    let mut alphas = Vec::with_capacity(n_resamples);
    let mut betas = Vec::with_capacity(n_resamples);
    let mut gammas = Vec::with_capacity(n_resamples);
    let mut degenerate = 0;
    let mut sample = Vec::with_capacity(n);

    for r in 0..n_resamples {
        let mut rng = SplitMix64::new(derive_seed(seed, &[r as u64]));
        sample.clear();
        sample.extend((0..n).map(|_| observations[rng.below(n as u64) as usize].clone()));
        if distinct_sizes(&sample) < needed {
            degenerate += 1;
            continue;
        }
        match fit(&sample, spec) {
            Ok(refit) => {
                alphas.push(refit.alpha());
                betas.push(refit.beta());
                gammas.push(refit.gamma());
            }
            Err(_) => degenerate += 1,
        }
    }

    if alphas.is_empty() {
        return Err(Error::InsufficientData {
            needed,
            got: distinct_sizes(observations),
        });
    }

    report.ci = Some(ConfidenceIntervals {
        confidence,
        alpha: interval(alphas, confidence, report.alpha()),
        beta: interval(betas, confidence, report.beta()),
        gamma: interval(gammas, confidence, report.gamma()),
        n_resamples,
        degenerate_resamples: degenerate,
    });
    if degenerate > 0 {
        report.warnings.push(FitWarning::DegenerateResamples(degenerate));
    }
    Ok(report)
}
