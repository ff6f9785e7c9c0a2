//! The counting-model coin estimator: a learner whose expected validation
//! loss is known in closed form, used as ground truth for the fitter and the
//! experiment harness.
//!
//! A counting model trained on `i` flips predicts `P[1] = heads / i`. Its
//! total loss is the true-probability-weighted average of a per-outcome loss,
//! `L = sum_x l(P_hat[x], P[x]) * P[x]`. For a fair coin under L1 the
//! expectation is `C(i, i/2) / 2^(i+1)` for even `i` (odd `i` share the value
//! of `i - 1`), which decays like `1 / sqrt(2 pi i)`.

use std::fmt;
use std::str::FromStr;

use statrs::function::factorial::ln_binomial;

use crate::curve::{CurveObservation, DEFAULT_LOSS_EPSILON};
use crate::error::{Error, Result};
use crate::fitting::{fit_zero_floor, FitReport};
use crate::rng::{derive_seed, SplitMix64};

/// Largest `i` for which binomial coefficients are computed exactly.
pub const EXACT_LIMIT: u64 = 64;

/// Fits with a relative RMSE above this are reported as not power-law-like.
pub const POWER_LAW_RRMSE_LIMIT: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoinDistribution {
    p: f64,
}

impl CoinDistribution {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "coin probability must lie in (0, 1), got {p}"
            )));
        }
        Ok(CoinDistribution { p })
    }

    pub fn fair() -> Self {
        CoinDistribution { p: 0.5 }
    }

    /// Probability of outcome 1.
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn is_fair(&self) -> bool {
        self.p == 0.5
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    L1,
    /// Euclidean norm of the per-outcome error vector.
    L2Norm,
    /// `sum_x P[x] * |ln P[x] - ln P_hat[x]|`, estimate clamped away from 0 and 1.
    AbsKl,
}

impl LossKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LossKind::L1 => "l1",
            LossKind::L2Norm => "l2",
            LossKind::AbsKl => "kl",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(LossKind::L1),
            "l2" | "l2_norm" => Ok(LossKind::L2Norm),
            "kl" | "abs_kl" => Ok(LossKind::AbsKl),
            other => Err(Error::InvalidArgument(format!("unknown loss kind {other:?}"))),
        }
    }
}

/// A counting model trained on `i` flips that saw `heads` ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountingEstimate {
    pub i: u64,
    pub heads: u64,
}

impl CountingEstimate {
    pub fn new(i: u64, heads: u64) -> Result<Self> {
        if i == 0 || heads > i {
            return Err(Error::InvalidArgument(format!("invalid estimate {heads}/{i}")));
        }
        Ok(CountingEstimate { i, heads })
    }

    /// `heads / i`, rounded once to the nearest double.
    pub fn probability_of_one(&self) -> f64 {
        self.heads as f64 / self.i as f64
    }

    /// Weighted total loss of this estimate against the true coin.
    pub fn total_loss(&self, coin: &CoinDistribution, loss: LossKind) -> f64 {
        let truth = [1.0 - coin.p(), coin.p()];
        let q1 = self.probability_of_one();
        let estimate = [1.0 - q1, q1];
        match loss {
            // Both outcomes carry the same error magnitude, and the weights sum to one.
            LossKind::L1 => (q1 - coin.p()).abs(),
            LossKind::L2Norm => {
                let norm = ((estimate[0] - truth[0]).powi(2) + (estimate[1] - truth[1]).powi(2)).sqrt();
                weighted_total(&truth, |_| norm)
            }
            LossKind::AbsKl => {
                let clamp = 1.0 / (self.i as f64 + 2.0);
                let q1c = q1.clamp(clamp, 1.0 - clamp);
                let estimate = [1.0 - q1c, q1c];
                weighted_total(&truth, |x| (truth[x].ln() - estimate[x].ln()).abs())
            }
        }
    }
}

/// `sum_x l(x) * P[x]` over the two outcomes.
pub fn weighted_total(truth: &[f64; 2], per_outcome: impl Fn(usize) -> f64) -> f64 {
    (0..2).map(|x| per_outcome(x) * truth[x]).sum()
}

/// Exact `C(n, k)` for `n <= 64`.
pub fn binomial_exact(n: u64, k: u64) -> u128 {
    assert!(n <= EXACT_LIMIT, "exact binomials are limited to n <= {EXACT_LIMIT}");
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for j in 0..k {
        // exact at every step: c * (n - j) is divisible by (j + 1)
        c = c * (n - j) as u128 / (j + 1) as u128;
    }
    c
}

/// Expected fair-coin L1 loss as an exact dyadic rational `num / 2^exp`,
/// for `i <= 65` (odd `i` shares the value of `i - 1`).
pub fn exact_expected_loss_fair_l1_dyadic(i: u64) -> Option<(u128, u32)> {
    let even = i - (i % 2);
    if i == 0 || even > EXACT_LIMIT {
        return None;
    }
    Some((binomial_exact(even, even / 2), even as u32 + 1))
}

/// `ln( C(2h, h) / 4^h )`, accurate to a few ulps for every `h`.
///
/// Uses `C(2h, h) / 4^h = Gamma(h + 1/2) / (sqrt(pi) Gamma(h + 1))` and
/// expands the log-gamma difference so the large Stirling terms cancel
/// analytically rather than numerically.
pub fn ln_central_binomial_over_pow4(h: u64) -> f64 {
    if h <= EXACT_LIMIT / 2 {
        let c = binomial_exact(2 * h, h) as f64;
        return c.ln() - (2 * h) as f64 * std::f64::consts::LN_2;
    }
    ln_central_asymptotic(h as f64)
}

fn ln_central_asymptotic(h: f64) -> f64 {
    let x = h + 0.5;
    let y = h + 1.0;
    // Stirling remainder 1/(12z) - 1/(360z^3) + 1/(1260z^5) - 1/(1680z^7) + 1/(1188z^9)
    let series = |z: f64| {
        let z2 = z * z;
        (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - (1.0 / 1680.0 - 1.0 / (1188.0 * z2)) / z2) / z2) / z2) / z
    };
    let main = h * (-0.5 / y).ln_1p() + 0.5 - 0.5 * y.ln();
    main + (series(x) - series(y)) - 0.5 * std::f64::consts::PI.ln()
}

/// Closed-form `E[L_i]` for the fair coin under L1.
///
/// Exact (single rounding) for `i <= 65`; beyond that a cancellation-free
/// log-gamma expansion keeps the relative error near 1e-15.
pub fn exact_expected_loss_fair_l1(i: u64) -> f64 {
    assert!(i >= 1, "training-set size must be at least 1");
    let even = i - (i % 2);
    if let Some((num, exp)) = exact_expected_loss_fair_l1_dyadic(i) {
        return num as f64 / 2f64.powi(exp as i32);
    }
    0.5 * ln_central_binomial_over_pow4(even / 2).exp()
}

/// `P(k heads in i flips)`.
pub fn binomial_pmf(i: u64, k: u64, p: f64) -> f64 {
    if k > i {
        return 0.0;
    }
    let ki = k as i32;
    let rest = (i - k) as i32;
    if i <= EXACT_LIMIT {
        binomial_exact(i, k) as f64 * p.powi(ki) * (1.0 - p).powi(rest)
    } else {
        (ln_binomial(i, k) + k as f64 * p.ln() + (i - k) as f64 * (-p).ln_1p()).exp()
    }
}

/// `E[L_i] = sum_k C(i,k) p^k (1-p)^(i-k) L(k/i)`.
pub fn expected_loss_binomial_sum(i: u64, coin: &CoinDistribution, loss: LossKind) -> f64 {
    assert!(i >= 1, "training-set size must be at least 1");
    (0..=i)
        .map(|k| binomial_pmf(i, k, coin.p()) * CountingEstimate { i, heads: k }.total_loss(coin, loss))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    /// `None` when a single trial leaves the spread undefined.
    pub standard_error: Option<f64>,
    pub trials: u64,
}

/// Draws one training set of `i` flips from the substream of trial `t`.
fn sample_heads(i: u64, p: f64, seed: u64, trial: u64) -> u64 {
    let mut rng = SplitMix64::new(derive_seed(seed, &[trial]));
    (0..i).filter(|_| rng.next_f64() < p).count() as u64
}

/// Monte Carlo estimate of `E[L_i]` from `trials` simulated training sets.
pub fn monte_carlo_expected_loss(
    i: u64,
    coin: &CoinDistribution,
    loss: LossKind,
    trials: u64,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if i == 0 {
        return Err(Error::InvalidArgument("training-set size must be at least 1".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for t in 0..trials {
        let heads = sample_heads(i, coin.p(), seed, t);
        let l = CountingEstimate { i, heads }.total_loss(coin, loss);
        sum += l;
        sum_sq += l * l;
    }
    let n = trials as f64;
    let mean = sum / n;
    let standard_error = (trials > 1).then(|| {
        let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    });
    Ok(MonteCarloEstimate {
        estimate: mean,
        standard_error,
        trials,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    BinomialSum,
    MonteCarlo { trials: u64, seed: u64 },
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::BinomialSum => "binomial_sum",
            Method::MonteCarlo { .. } => "monte_carlo",
        }
    }
}

/// `(i, E[L_i])` pairs as observations ready for fitting.
pub fn expected_loss_curve(
    i_values: &[u64],
    coin: &CoinDistribution,
    loss: LossKind,
    method: Method,
) -> Result<Vec<CurveObservation>> {
    if i_values.is_empty() {
        return Err(Error::InvalidArgument("no training-set sizes given".into()));
    }
    if i_values.contains(&0) {
        return Err(Error::InvalidArgument("training-set sizes must be at least 1".into()));
    }
    if i_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "training-set sizes must be strictly ascending".into(),
        ));
    }
    if method == Method::ClosedForm && !(coin.is_fair() && loss == LossKind::L1) {
        return Err(Error::MethodMismatch(format!(
            "closed form covers only the fair coin under l1 (got p={}, loss={})",
            coin.p(),
            loss
        )));
    }
    let metric = format!("counting-{loss}");
    i_values
        .iter()
        .map(|&i| {
            let (value, seed) = match method {
                Method::ClosedForm => (exact_expected_loss_fair_l1(i), None),
                Method::BinomialSum => (expected_loss_binomial_sum(i, coin, loss), None),
                Method::MonteCarlo { trials, seed } => {
                    let mc = monte_carlo_expected_loss(i, coin, loss, trials, seed)?;
                    (mc.estimate, Some(seed))
                }
            };
            let mut o = CurveObservation::new(i, value)
                .with_metric(metric.clone())
                .with_split(method.tag());
            o.seed = seed;
            o.ingest(DEFAULT_LOSS_EPSILON)
        })
        .collect()
}

/// Measured scaling of one loss kind over a range of training-set sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct LossScaling {
    pub loss: LossKind,
    pub fit: FitReport,
    /// False when the log-log fit misses by more than 2% relative RMSE.
    pub power_law_like: bool,
}

/// Fits the exponent of `E[L_i]` for a loss kind from exact binomial sums.
pub fn measure_loss_scaling(i_values: &[u64], coin: &CoinDistribution, loss: LossKind) -> Result<LossScaling> {
    let curve = expected_loss_curve(i_values, coin, loss, Method::BinomialSum)?;
    let fit = fit_zero_floor(&curve)?;
    Ok(LossScaling {
        loss,
        power_law_like: fit.rrmse <= POWER_LAW_RRMSE_LIMIT,
        fit,
    })
}
