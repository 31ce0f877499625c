//! Schedulers: the four-phase water-filling heuristic, the exhaustive
//! proportional-fair search it is measured against, and closed-form
//! complexity counts for both.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Allocation, ModelError, NetworkState, RateVector, Tier};
use crate::waterfill::{Depth, WaterfillError, WaterfillMode};

mod complexity;
mod optimal;
mod phpfs;

pub use complexity::{complexity_estimate, SchedulerKind};
pub use optimal::{block_pattern_count, optimal_pf, optimal_pattern_count};
pub use phpfs::phpfs_schedule;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Waterfill(#[from] WaterfillError),
    #[error("exhaustive search needs {patterns:.3e} patterns, limit is {limit:.3e}")]
    TooLarge { patterns: f64, limit: f64 },
    #[error("invalid scheduler config: {0}")]
    Config(String),
    #[error("outcome was produced without instrumentation")]
    NotInstrumented,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedulerConfig {
    /// Averaging window T.
    pub window: u32,
    /// Maximum number of outer iterations M.
    pub max_iterations: u32,
    /// Tier rate budgets in bits/s; infinity means unconstrained.
    pub cue_rate_budget: f64,
    pub d2d_rate_budget: f64,
    #[serde(skip)]
    pub waterfill_mode: WaterfillMode,
    pub instrument: bool,
    /// Upper bound on jointly enumerated patterns for the exhaustive search.
    pub max_patterns: f64,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self {
            window: 100,
            max_iterations: 1,
            cue_rate_budget: f64::INFINITY,
            d2d_rate_budget: f64::INFINITY,
            waterfill_mode: WaterfillMode::Optimal,
            instrument: true,
            max_patterns: 1e7,
        }
    }
}

impl SchedulerConfig {
    pub fn validate(&self) -> Result<(), ScheduleError> {
        if self.window == 0 {
            return Err(ScheduleError::Config("window T must be >= 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(ScheduleError::Config("max_iterations M must be >= 1".into()));
        }
        for (name, b) in [("cue_rate_budget", self.cue_rate_budget), ("d2d_rate_budget", self.d2d_rate_budget)] {
            if b.is_nan() || b < 0.0 {
                return Err(ScheduleError::Config(format!("{name} must be >= 0")));
            }
        }
        Ok(())
    }
}

/// Operation counts gathered while scheduling.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OpCounter {
    /// Per outer iteration, water-filling evaluations in CUE allocation.
    pub cue_waterfill_calls: Vec<usize>,
    /// Per outer iteration, water-filling evaluations in D2D allocation.
    pub d2d_waterfill_calls: Vec<usize>,
    pub cue_adjust_rounds: Vec<usize>,
    pub d2d_adjust_rounds: Vec<usize>,
    /// Joint patterns scored by the exhaustive search.
    pub patterns_evaluated: u64,
    /// Water-filling evaluations made by the exhaustive search.
    pub search_waterfill_calls: u64,
}

impl OpCounter {
    pub fn total_waterfill_calls(&self) -> u64 {
        self.cue_waterfill_calls.iter().chain(&self.d2d_waterfill_calls).map(|&c| c as u64).sum::<u64>()
            + self.search_waterfill_calls
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleOutcome {
    pub allocation: Allocation,
    pub cue_rates: RateVector,
    pub d2d_rates: RateVector,
    pub utility: f64,
    pub iterations_used: u32,
    pub ops: Option<OpCounter>,
}

impl ScheduleOutcome {
    pub fn rates(&self, tier: Tier) -> &RateVector {
        match tier {
            Tier::Cue => &self.cue_rates,
            Tier::D2d => &self.d2d_rates,
        }
    }
}

/// Water-filling calls per outer iteration, split by allocation phase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WaterfillCallCounts {
    pub cue_phase: Vec<usize>,
    pub d2d_phase: Vec<usize>,
}

impl WaterfillCallCounts {
    pub fn per_iteration(&self) -> impl Iterator<Item = usize> + '_ {
        self.cue_phase.iter().zip(&self.d2d_phase).map(|(a, b)| a + b)
    }
}

pub fn count_wf_calls(outcome: &ScheduleOutcome) -> Result<WaterfillCallCounts, ScheduleError> {
    let ops = outcome.ops.as_ref().ok_or(ScheduleError::NotInstrumented)?;
    Ok(WaterfillCallCounts {
        cue_phase: ops.cue_waterfill_calls.clone(),
        d2d_phase: ops.d2d_waterfill_calls.clone(),
    })
}

/// Stair depths seen by CUE `cue` at the eNB, given the D2D powers already on air.
pub(crate) fn cue_depths(state: &NetworkState, cue: usize, d2d_power: &[Vec<f64>]) -> Vec<Depth> {
    let g = &state.gains;
    (0..g.num_subchannels)
        .map(|k| {
            let interference = g.external_at_bs[k]
                + d2d_power.iter().zip(&g.d2d_to_bs).map(|(p, h)| p[k] * h[k]).sum::<f64>();
            Depth::from_link(g.cue_to_bs[cue][k], g.noise_power(), interference)
        })
        .collect()
}

/// Stair depths seen by the receiver of pair `pair`, given the CUE powers on air.
pub(crate) fn d2d_depths(state: &NetworkState, pair: usize, cue_power: &[Vec<f64>]) -> Vec<Depth> {
    let g = &state.gains;
    (0..g.num_subchannels)
        .map(|k| {
            let interference = g.external_at_d2d_rx[pair][k]
                + cue_power.iter().zip(&g.cue_to_d2d_rx).map(|(p, h)| p[k] * h[pair][k]).sum::<f64>();
            Depth::from_link(g.d2d_link[pair][k], g.noise_power(), interference)
        })
        .collect()
}

pub(crate) fn avg_rates(state: &NetworkState) -> (Vec<f64>, Vec<f64>) {
    (
        state.cues.iter().map(|c| c.avg_rate).collect(),
        state.pairs.iter().map(|d| d.avg_rate).collect(),
    )
}
