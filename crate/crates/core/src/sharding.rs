//! Geometric shard schedules and the seeded train/validation split.
//!
//! Record counts are whatever the caller says they are. When only part of
//! each record is observed during training (truncated sequences, say), the
//! caller must pass the effective count.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::permutation;

pub const DEFAULT_SMALLEST_FRACTION: f64 = 0.001;
pub const DEFAULT_RATIO: f64 = 2.0;
pub const DEFAULT_MAX_FRACTION: f64 = 0.5;
pub const DEFAULT_VALIDATION_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardPlan {
    pub total_size: u64,
    pub validation_size: u64,
    pub shard_sizes: Vec<u64>,
    pub shuffle_seed: u64,
    /// Each shard is a prefix of the next one under the seeded permutation.
    pub nested: bool,
}

impl ShardPlan {
    pub fn validate(&self) -> Result<()> {
        if self.shard_sizes.is_empty() {
            return Err(Error::InvalidPlan("no shards".into()));
        }
        if self.validation_size == 0 {
            return Err(Error::InvalidPlan("validation set is empty".into()));
        }
        if self.shard_sizes[0] == 0 {
            return Err(Error::InvalidPlan("shard of size 0".into()));
        }
        if self.shard_sizes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPlan("shard sizes must be strictly ascending".into()));
        }
        let training: u64 = if self.nested {
            self.largest_shard()
        } else {
            self.shard_sizes.iter().sum()
        };
        if self
            .validation_size
            .checked_add(training)
            .is_none_or(|used| used > self.total_size)
        {
            return Err(Error::InvalidPlan(format!(
                "validation ({}) plus training ({}) exceeds total size {}",
                self.validation_size, training, self.total_size
            )));
        }
        Ok(())
    }

    pub fn largest_shard(&self) -> u64 {
        self.shard_sizes.last().copied().unwrap_or(0)
    }
}

/// Builds the schedule `round(N * smallest) * ratio^k`, keeping every size
/// not larger than `N * max_fraction`.
pub fn plan_shards(
    total_size: u64,
    smallest_fraction: f64,
    ratio: f64,
    max_fraction: f64,
    validation_fraction: f64,
    seed: u64,
) -> Result<ShardPlan> {
    let fractions_ok = smallest_fraction > 0.0
        && smallest_fraction < max_fraction
        && validation_fraction > 0.0
        && max_fraction <= 1.0 - validation_fraction;
    if !fractions_ok {
        return Err(Error::InvalidFractions(format!(
            "need 0 < smallest ({smallest_fraction}) < max ({max_fraction}) <= 1 - validation ({validation_fraction})"
        )));
    }
    if !(ratio.is_finite() && ratio > 1.0) {
        return Err(Error::InvalidFractions(format!("ratio must exceed 1, got {ratio}")));
    }

    let total = total_size as f64;
    let smallest = (total * smallest_fraction).round() as u64;
    if smallest == 0 {
        return Err(Error::TooSmallDataset(0));
    }
    let validation_size = (total * validation_fraction).round() as u64;
    if validation_size == 0 {
        return Err(Error::TooSmallDataset(0));
    }
    let ceiling = total * max_fraction;

    let mut shard_sizes = Vec::new();
    for k in 0.. {
        let size = (smallest as f64 * ratio.powi(k)).round();
        if size > ceiling {
            break;
        }
        let size = size as u64;
        if shard_sizes.last().is_none_or(|&last| size > last) {
            shard_sizes.push(size);
        }
    }
    if shard_sizes.is_empty() {
        return Err(Error::InvalidFractions(format!(
            "smallest shard {smallest} exceeds the cap {ceiling}"
        )));
    }

    let plan = ShardPlan {
        total_size,
        validation_size,
        shard_sizes,
        shuffle_seed: seed,
        nested: true,
    };
    plan.validate().map_err(|e| Error::InvalidFractions(e.to_string()))?;
    Ok(plan)
}

/// Role of one record under a plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    Validation,
    /// Rank of the smallest shard containing the record.
    Shard(usize),
    Unused,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShardAssignment {
    plan: ShardPlan,
    order: Vec<usize>,
    slots: Vec<Slot>,
}

impl ShardAssignment {
    /// Seeded permutation of all record indices: validation first, then
    /// training records.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn plan(&self) -> &ShardPlan {
        &self.plan
    }

    pub fn validation_indices(&self) -> &[usize] {
        &self.order[..self.plan.validation_size as usize]
    }

    pub fn shard_indices(&self, rank: usize) -> &[usize] {
        let v = self.plan.validation_size as usize;
        let size = self.plan.shard_sizes[rank] as usize;
        if self.plan.nested {
            &self.order[v..v + size]
        } else {
            let offset: u64 = self.plan.shard_sizes[..rank].iter().sum();
            let start = v + offset as usize;
            &self.order[start..start + size]
        }
    }

    pub fn shard_count(&self) -> usize {
        self.plan.shard_sizes.len()
    }
}

/// Assigns every record index to the validation set, a shard, or nothing.
///
/// The permutation is a Fisher–Yates shuffle driven by SplitMix64 seeded with
/// `plan.shuffle_seed` (see [`crate::rng`]). The first `validation_size`
/// permuted indices form the validation set; shards follow.
pub fn assign_indices(plan: &ShardPlan, record_count: u64) -> Result<ShardAssignment> {
    if record_count != plan.total_size {
        return Err(Error::SizeMismatch {
            expected: plan.total_size,
            got: record_count,
        });
    }
    plan.validate()?;
    let order = permutation(record_count as usize, plan.shuffle_seed);
    let mut slots = vec![Slot::Unused; order.len()];
    let v = plan.validation_size as usize;
    for &i in &order[..v] {
        slots[i] = Slot::Validation;
    }
    let mut start = v;
    for (rank, &size) in plan.shard_sizes.iter().enumerate() {
        let end = if plan.nested {
            v + size as usize
        } else {
            start + size as usize
        };
        for &i in &order[start..end] {
            slots[i] = Slot::Shard(rank);
        }
        start = end;
    }
    Ok(ShardAssignment {
        plan: plan.clone(),
        order,
        slots,
    })
}
