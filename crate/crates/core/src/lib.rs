//! Power-law learning curves: fitting, region segmentation, shard planning,
//! a counting-model reference learner, and resource projection.

pub mod cli;
pub mod counting;
pub mod curve;
pub mod error;
pub mod fitting;
pub mod harness;
pub mod io;
pub mod projection;
pub mod regions;
pub mod rng;
pub mod sharding;

pub use curve::{CurveObservation, ModelSizeCurve, PowerLawCurve};
pub use error::{Error, Result};
pub use fitting::{bootstrap_ci, fit, fit_with_floor, fit_zero_floor, FitKind, FitReport, FitSpec, FloorMode};
pub use projection::{project, ProjectionResult};
pub use regions::{segment, GuessBaseline, Region, RegionSegmentation};
pub use sharding::{assign_indices, plan_shards, ShardPlan};
