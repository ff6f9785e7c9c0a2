//! Scaling-law functional forms: the learning curve `alpha * m^beta + gamma`
//! and the model-size curve `alpha_p * m^beta_p`, plus observation records.
//!
//! Data size `m` is real-valued throughout. Shard sizes are integers, but
//! projections land between shards, so integer coercion only happens when a
//! shard plan is built.
//!
//! Loss values are unitless. Rescaling every loss by `c > 0` scales `alpha`
//! and `gamma` by `c` and leaves `beta` untouched, so exponents do not depend
//! on the log base used for cross-entropy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Losses of exactly zero are replaced by this value at ingestion.
pub const DEFAULT_LOSS_EPSILON: f64 = 1e-12;

/// Generalization error as a function of training-set size:
/// `loss(m) = alpha * m^beta + gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawCurve {
    alpha: f64,
    beta: f64,
    gamma: f64,
}

impl PowerLawCurve {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidCurve(format!("alpha must be positive, got {alpha}")));
        }
        if !beta.is_finite() || beta == 0.0 {
            return Err(Error::InvalidCurve(format!(
                "beta must be finite and nonzero, got {beta}"
            )));
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidCurve(format!("gamma must be non-negative, got {gamma}")));
        }
        Ok(PowerLawCurve { alpha, beta, gamma })
    }

    /// Pure power law with no floor.
    pub fn zero_floor(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(alpha, beta, 0.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn evaluate(&self, m: f64) -> f64 {
        self.alpha * m.powf(self.beta) + self.gamma
    }

    /// The above-floor part `alpha * m^beta`.
    pub fn reducible(&self, m: f64) -> f64 {
        self.alpha * m.powf(self.beta)
    }

    /// Data size at which the curve reaches `target_loss`.
    pub fn invert_for_data(&self, target_loss: f64) -> Result<f64> {
        if self.beta >= 0.0 {
            return Err(Error::InvalidCurve(format!(
                "inversion needs a decreasing curve, beta = {}",
                self.beta
            )));
        }
        if !target_loss.is_finite() || target_loss <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "target loss must be positive, got {target_loss}"
            )));
        }
        if target_loss <= self.gamma {
            return Err(Error::InfeasibleTarget {
                target: target_loss,
                gamma: self.gamma,
            });
        }
        let ratio = (target_loss - self.gamma) / self.alpha;
        Ok(ratio.powf(self.beta.recip()))
    }

    /// Data growth factor that halves the above-floor loss: `2^(-1/beta)`.
    pub fn halving_factor(&self) -> f64 {
        2f64.powf(-1.0 / self.beta)
    }
}

/// Best-fit model size as a function of training-set size:
/// `params(m) = alpha_p * m^beta_p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSizeCurve {
    alpha_p: f64,
    beta_p: f64,
}

impl ModelSizeCurve {
    pub fn new(alpha_p: f64, beta_p: f64) -> Result<Self> {
        if !(alpha_p.is_finite() && alpha_p > 0.0) {
            return Err(Error::InvalidCurve(format!("alpha_p must be positive, got {alpha_p}")));
        }
        if !beta_p.is_finite() {
            return Err(Error::InvalidCurve(format!("beta_p must be finite, got {beta_p}")));
        }
        Ok(ModelSizeCurve { alpha_p, beta_p })
    }

    pub fn alpha_p(&self) -> f64 {
        self.alpha_p
    }

    pub fn beta_p(&self) -> f64 {
        self.beta_p
    }

    pub fn evaluate(&self, m: f64) -> f64 {
        self.alpha_p * m.powf(self.beta_p)
    }
}

/// One measured point of a learning curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveObservation {
    /// Training-set size in whatever unit the caller counts (samples,
    /// tokens, hours). Units are never converted.
    pub shard_size: u64,
    pub loss_value: f64,
    pub metric_name: String,
    pub model_params: Option<u64>,
    pub seed: Option<u64>,
    pub split_tag: String,
    /// Set when a zero loss was replaced by the clamp epsilon.
    pub clamped: bool,
}

impl CurveObservation {
    pub fn new(shard_size: u64, loss_value: f64) -> Self {
        CurveObservation {
            shard_size,
            loss_value,
            metric_name: "loss".to_string(),
            model_params: None,
            seed: None,
            split_tag: String::new(),
            clamped: false,
        }
    }

    pub fn with_metric(mut self, metric: impl Into<String>) -> Self {
        self.metric_name = metric.into();
        self
    }

    pub fn with_params(mut self, params: u64) -> Self {
        self.model_params = Some(params);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_split(mut self, tag: impl Into<String>) -> Self {
        self.split_tag = tag.into();
        self
    }

    /// Validates a raw record. Zero losses are clamped to `epsilon` and
    /// flagged; negative or non-finite losses and zero sizes are rejected.
    pub fn ingest(mut self, epsilon: f64) -> Result<Self> {
        if self.shard_size == 0 {
            return Err(Error::InvalidArgument("shard_size must be at least 1".into()));
        }
        if self.model_params == Some(0) {
            return Err(Error::InvalidArgument(format!(
                "model_params must be positive at shard size {}",
                self.shard_size
            )));
        }
        if self.loss_value == 0.0 {
            self.loss_value = epsilon;
            self.clamped = true;
        }
        if !(self.loss_value.is_finite() && self.loss_value > 0.0) {
            return Err(Error::NonPositiveLoss {
                shard_size: self.shard_size,
                value: self.loss_value,
            });
        }
        Ok(self)
    }
}

/// Standalone form of [`PowerLawCurve::evaluate`].
pub fn evaluate(curve: &PowerLawCurve, m: f64) -> f64 {
    curve.evaluate(m)
}

/// Standalone form of [`PowerLawCurve::invert_for_data`].
pub fn invert_for_data(curve: &PowerLawCurve, target_loss: f64) -> Result<f64> {
    curve.invert_for_data(target_loss)
}

/// Standalone form of [`ModelSizeCurve::evaluate`].
pub fn evaluate_model_size(curve: &ModelSizeCurve, m: f64) -> f64 {
    curve.evaluate(m)
}
