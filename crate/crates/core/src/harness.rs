//! Runs a learner over a shard plan and collects learning-curve points.
//!
//! Every `(shard, capacity, seed)` cell gets its own seed derived from the
//! sweep seed and the cell coordinates, and cells are visited in a fixed
//! order, so a sweep is a pure function of its inputs.

use std::collections::BTreeMap;
use std::error::Error as StdError;

use crate::counting::{CoinDistribution, CountingEstimate, LossKind};
use crate::curve::{CurveObservation, DEFAULT_LOSS_EPSILON};
use crate::error::{Error, Result};
use crate::fitting::select_composite;
use crate::rng::{derive_seed, stream_at, unit_f64};
use crate::sharding::{assign_indices, ShardPlan};

pub type LearnerResult<T> = std::result::Result<T, Box<dyn StdError + Send + Sync>>;

/// A loss within this relative margin of a shard's best counts as best-fit.
pub const FRONTIER_TOLERANCE: f64 = 0.01;

/// Random-access record storage.
pub trait DataSource {
    type Record: Clone;

    fn len(&self) -> u64;

    fn record(&self, index: u64) -> Self::Record;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<T: Clone> DataSource for Vec<T> {
    type Record = T;

    fn len(&self) -> u64 {
        self.as_slice().len() as u64
    }

    fn record(&self, index: u64) -> T {
        self[index as usize].clone()
    }
}

/// A model family with a capacity knob.
pub trait Learner {
    type Record;
    type State;
    /// Whatever the learner precomputes from the validation records.
    type Validation;

    fn prepare_validation(&self, records: &[Self::Record]) -> LearnerResult<Self::Validation>;

    fn train(&self, shard: &[Self::Record], capacity: u64, seed: u64) -> LearnerResult<Self::State>;

    /// Must be deterministic for a given state and validation set.
    fn evaluate(&self, state: &Self::State, validation: &Self::Validation) -> LearnerResult<f64>;

    fn param_count(&self, capacity: u64) -> u64;

    fn metric_name(&self) -> String {
        "loss".to_string()
    }
}

/// How repeated runs of one cell collapse to a single loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    Min,
    /// Median across seeds of each run's loss.
    MedianOfMin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// One capacity list per shard, or a single list shared by every shard.
    pub capacity_grid: Vec<Vec<u64>>,
    pub seeds_per_cell: u32,
    pub reduction: Reduction,
    pub seed: u64,
    /// Restrict each shard's grid to 0.5x..2x of the previous shard's
    /// frontier capacity (falls back to the full grid when nothing fits).
    pub adaptive: bool,
}

impl SweepConfig {
    pub fn single(capacities: Vec<u64>, seed: u64) -> Self {
        SweepConfig {
            capacity_grid: vec![capacities],
            seeds_per_cell: 1,
            reduction: Reduction::Min,
            seed,
            adaptive: false,
        }
    }

    fn grid_for(&self, shard: usize) -> &[u64] {
        if self.capacity_grid.len() == 1 {
            &self.capacity_grid[0]
        } else {
            &self.capacity_grid[shard]
        }
    }

    fn validate(&self, shards: usize) -> Result<()> {
        if self.capacity_grid.is_empty() || self.capacity_grid.iter().any(|g| g.is_empty()) {
            return Err(Error::InvalidArgument("capacity grid must be nonempty".into()));
        }
        if self.capacity_grid.len() != 1 && self.capacity_grid.len() != shards {
            return Err(Error::InvalidArgument(format!(
                "capacity grid has {} lists for {} shards",
                self.capacity_grid.len(),
                shards
            )));
        }
        if self.seeds_per_cell == 0 {
            return Err(Error::InvalidArgument("seeds_per_cell must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// One observation per `(shard, capacity)` cell, in visiting order.
    pub cells: Vec<CurveObservation>,
    /// Best cell per shard.
    pub composite: Vec<CurveObservation>,
}

fn gather<S: DataSource>(source: &S, indices: &[usize]) -> Vec<S::Record> {
    indices.iter().map(|&i| source.record(i as u64)).collect()
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Trains and scores every grid cell on every shard of `plan`.
pub fn run_sweep<L, S>(learner: &L, plan: &ShardPlan, config: &SweepConfig, source: &S) -> Result<SweepResult>
where
    L: Learner,
    S: DataSource<Record = L::Record>,
{
    config.validate(plan.shard_sizes.len())?;
    let assignment = assign_indices(plan, source.len())?;

    let validation_records = gather(source, assignment.validation_indices());
    if validation_records.is_empty() {
        return Err(Error::EmptyShard("validation set".into()));
    }
    let validation = learner
        .prepare_validation(&validation_records)
        .map_err(|e| Error::LearnerFailure {
            shard_size: 0,
            capacity: 0,
            message: format!("preparing validation set: {e}"),
        })?;
    drop(validation_records);

    let nested_records = plan
        .nested
        .then(|| gather(source, assignment.shard_indices(assignment.shard_count() - 1)));

    let metric = learner.metric_name();
    let mut cells = Vec::new();
    let mut previous_frontier: Option<u64> = None;

    for (k, &size) in plan.shard_sizes.iter().enumerate() {
        let owned;
        let shard: &[L::Record] = match &nested_records {
            Some(all) => &all[..size as usize],
            None => {
                owned = gather(source, assignment.shard_indices(k));
                &owned
            }
        };
        if shard.is_empty() {
            return Err(Error::EmptyShard(format!("shard {k}")));
        }

        let base = config.grid_for(k);
        let grid: Vec<(usize, u64)> = match (config.adaptive, previous_frontier) {
            (true, Some(f)) => {
                let window: Vec<(usize, u64)> = base
                    .iter()
                    .copied()
                    .enumerate()
                    .filter(|&(_, c)| 2 * c >= f && c <= 2 * f)
                    .collect();
                if window.is_empty() {
                    base.iter().copied().enumerate().collect()
                } else {
                    window
                }
            }
            _ => base.iter().copied().enumerate().collect(),
        };

        let mut shard_cells: Vec<(u64, CurveObservation)> = Vec::with_capacity(grid.len());
        for (c_idx, capacity) in grid {
            let fail = |message: String| Error::LearnerFailure {
                shard_size: size,
                capacity,
                message,
            };
            let mut runs = Vec::with_capacity(config.seeds_per_cell as usize);
            for s in 0..config.seeds_per_cell {
                let seed = derive_seed(config.seed, &[k as u64, c_idx as u64, s as u64]);
                let state = learner.train(shard, capacity, seed).map_err(|e| fail(e.to_string()))?;
                let loss = learner.evaluate(&state, &validation).map_err(|e| fail(e.to_string()))?;
                runs.push((loss, seed));
            }
            let (loss, seed) = match config.reduction {
                Reduction::Min => {
                    let best = runs
                        .iter()
                        .copied()
                        .min_by(|a, b| a.0.total_cmp(&b.0))
                        .expect("at least one seed");
                    (best.0, Some(best.1))
                }
                Reduction::MedianOfMin => {
                    let mut losses: Vec<f64> = runs.iter().map(|r| r.0).collect();
                    (median(&mut losses), None)
                }
            };
            let mut obs = CurveObservation::new(size, loss)
                .with_metric(metric.clone())
                .with_params(learner.param_count(capacity))
                .with_split("cell");
            obs.seed = seed;
            let obs = obs.ingest(DEFAULT_LOSS_EPSILON).map_err(|e| fail(e.to_string()))?;
            shard_cells.push((capacity, obs));
        }

        let min_loss = shard_cells
            .iter()
            .map(|(_, o)| o.loss_value)
            .fold(f64::INFINITY, f64::min);
        previous_frontier = shard_cells
            .iter()
            .filter(|(_, o)| o.loss_value <= min_loss * (1.0 + FRONTIER_TOLERANCE))
            .map(|(c, _)| *c)
            .min();
        cells.extend(shard_cells.into_iter().map(|(_, o)| o));
    }

    let composite = select_composite(&cells)
        .into_iter()
        .map(|o| o.with_split("composite"))
        .collect();
    Ok(SweepResult { cells, composite })
}

/// Per shard, the smallest parameter count whose loss is within 1% of the
/// shard's best loss. Output is ordered by shard size.
pub fn capacity_frontier(observations: &[CurveObservation]) -> Result<Vec<(u64, u64)>> {
    let mut by_shard: BTreeMap<u64, Vec<(u64, f64)>> = BTreeMap::new();
    for o in observations {
        let params = o.model_params.ok_or(Error::MissingModelParams {
            shard_size: o.shard_size,
        })?;
        by_shard.entry(o.shard_size).or_default().push((params, o.loss_value));
    }
    Ok(by_shard
        .into_iter()
        .map(|(size, cands)| {
            let best = cands.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
            let params = cands
                .iter()
                .filter(|c| c.1 <= best * (1.0 + FRONTIER_TOLERANCE))
                .map(|c| c.0)
                .min()
                .expect("best candidate passes its own test");
            (size, params)
        })
        .collect())
}

/// Frontier points as observations for [`crate::fitting::fit_model_size`].
pub fn frontier_observations(observations: &[CurveObservation]) -> Result<Vec<CurveObservation>> {
    let frontier = capacity_frontier(observations)?;
    Ok(frontier
        .into_iter()
        .map(|(size, params)| {
            let best = observations
                .iter()
                .filter(|o| o.shard_size == size && o.model_params == Some(params))
                .min_by(|a, b| a.loss_value.total_cmp(&b.loss_value))
                .expect("frontier point comes from the input");
            best.clone().with_split("frontier")
        })
        .collect())
}

/// Pointwise mean of several runs of the same curve (same shard sizes, same
/// order). Used when a single run is too noisy to fit, as with the counting
/// learner whose per-run loss is one draw from a folded normal.
pub fn average_curves(runs: &[Vec<CurveObservation>]) -> Result<Vec<CurveObservation>> {
    let first = runs
        .first()
        .ok_or_else(|| Error::InvalidArgument("no runs to average".into()))?;
    let mut out = first.clone();
    for run in &runs[1..] {
        if run.len() != first.len() || run.iter().zip(first).any(|(a, b)| a.shard_size != b.shard_size) {
            return Err(Error::InvalidArgument("runs cover different shard sizes".into()));
        }
        for (acc, o) in out.iter_mut().zip(run) {
            acc.loss_value += o.loss_value;
        }
    }
    let n = runs.len() as f64;
    for o in &mut out {
        o.loss_value /= n;
        o.seed = None;
        o.split_tag = "mean".to_string();
    }
    Ok(out)
}

/// Synthetic coin-flip dataset: record `j` is 1 with probability `p`,
/// drawn from output `j` of the SplitMix64 stream seeded with `seed`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoinFlipSource {
    pub p: f64,
    pub seed: u64,
    pub len: u64,
}

impl DataSource for CoinFlipSource {
    type Record = bool;

    fn len(&self) -> u64 {
        self.len
    }

    fn record(&self, index: u64) -> bool {
        unit_f64(stream_at(self.seed, index)) < self.p
    }
}

/// The counting model as a harness learner. Capacity is ignored and the
/// model has a single parameter. Validation loss treats the validation
/// set's empirical frequency as the true coin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountingLearner {
    pub loss: LossKind,
}

impl Learner for CountingLearner {
    type Record = bool;
    type State = CountingEstimate;
    type Validation = CoinDistribution;

    fn prepare_validation(&self, records: &[bool]) -> LearnerResult<CoinDistribution> {
        let ones = records.iter().filter(|&&b| b).count();
        Ok(CoinDistribution::new(ones as f64 / records.len() as f64)?)
    }

    fn train(&self, shard: &[bool], _capacity: u64, _seed: u64) -> LearnerResult<CountingEstimate> {
        let heads = shard.iter().filter(|&&b| b).count() as u64;
        Ok(CountingEstimate::new(shard.len() as u64, heads)?)
    }

    fn evaluate(&self, state: &CountingEstimate, validation: &CoinDistribution) -> LearnerResult<f64> {
        Ok(state.total_loss(validation, self.loss))
    }

    fn param_count(&self, _capacity: u64) -> u64 {
        1
    }

    fn metric_name(&self) -> String {
        format!("counting-{}", self.loss)
    }
}
