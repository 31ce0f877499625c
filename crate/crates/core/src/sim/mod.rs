//! System-level simulation: layout, user drops, mobility and the TTI loop.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{ChannelError, ChannelParams};
use crate::model::{ModelError, Tier};
use crate::scheduler::{ScheduleError, SchedulerConfig, SchedulerKind};

mod drop;
mod layout;
mod mobility;
mod run;

pub use drop::{drop_users, CellPopulation, Population};
pub use layout::{build_layout, Layout, NUM_CELLS};
pub use mobility::{step_mobility, MobilityState, Walker, MAX_FLIGHT, MAX_SPEED, MIN_FLIGHT};
pub use run::{run_scenario, run_scenario_with, TtiContext};

/// Scheduling interval in seconds.
pub const TTI_SECONDS: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LayoutMode {
    /// One cell, no inter-cell interference.
    #[default]
    SingleCell,
    /// 19 cells with wrap-around; each cell hears the others' previous-TTI powers.
    WrapAround,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    /// K
    pub num_subchannels: usize,
    /// N_C, per cell
    pub num_cues: usize,
    /// N_D, per cell
    pub num_pairs: usize,
    /// Simulated TTIs of 1 ms.
    pub ttis: usize,
    pub scheduler: SchedulerKind,
    pub scheduling: SchedulerConfig,
    pub channel: ChannelParams,
    pub layout: LayoutMode,
    pub inter_site_distance_m: f64,
    pub d2d_min_distance_m: f64,
    pub d2d_max_distance_m: f64,
    pub ue_max_power_dbm: f64,
    /// Starting value of every running average rate, bits/s.
    pub initial_avg_rate_bps: f64,
    /// Running averages never drop below this, bits/s.
    pub avg_rate_floor_bps: f64,
    pub mobility: bool,
    /// MCS table file; the bundled table is used when absent.
    pub mcs_table: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            seed: 1,
            num_subchannels: 5,
            num_cues: 5,
            num_pairs: 3,
            ttis: 500,
            scheduler: SchedulerKind::Phpfs,
            scheduling: SchedulerConfig::default(),
            channel: ChannelParams::default(),
            layout: LayoutMode::SingleCell,
            inter_site_distance_m: 500.0,
            d2d_min_distance_m: 3.0,
            d2d_max_distance_m: 50.0,
            ue_max_power_dbm: 23.0,
            initial_avg_rate_bps: 1e3,
            avg_rate_floor_bps: 1e-3,
            mobility: true,
            mcs_table: None,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        if self.num_subchannels == 0 {
            return bad("num_subchannels must be >= 1".into());
        }
        if self.num_subchannels > 64 {
            return bad("num_subchannels must be <= 64".into());
        }
        if !(self.inter_site_distance_m > 0.0 && self.inter_site_distance_m.is_finite()) {
            return bad("inter_site_distance_m must be positive".into());
        }
        if !(self.d2d_min_distance_m > 0.0 && self.d2d_min_distance_m <= self.d2d_max_distance_m) {
            return bad("need 0 < d2d_min_distance_m <= d2d_max_distance_m".into());
        }
        if self.d2d_max_distance_m >= self.inter_site_distance_m / 2.0 {
            return bad("d2d_max_distance_m must be below half the inter-site distance".into());
        }
        if !self.ue_max_power_dbm.is_finite() {
            return bad("ue_max_power_dbm must be finite".into());
        }
        if !(self.avg_rate_floor_bps > 0.0 && self.initial_avg_rate_bps >= self.avg_rate_floor_bps) {
            return bad("need 0 < avg_rate_floor_bps <= initial_avg_rate_bps".into());
        }
        self.scheduling.validate()?;
        self.channel.validate()?;
        Ok(())
    }

    pub fn num_cells(&self) -> usize {
        match self.layout {
            LayoutMode::SingleCell => 1,
            LayoutMode::WrapAround => NUM_CELLS,
        }
    }
}

/// One TTI of results. User vectors run over all cells, cell-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TtiRecord {
    pub tti: u64,
    /// Delivered rates after MCS quantization, bits/s.
    pub cue_rates: Vec<f64>,
    pub d2d_rates: Vec<f64>,
    /// Running averages after this TTI's update.
    pub cue_avg: Vec<f64>,
    pub d2d_avg: Vec<f64>,
    /// Scheduler objective summed over cells.
    pub utility: f64,
    pub wf_calls: u64,
    pub iterations_used: u32,
    /// validate_allocation findings summed over cells.
    pub violations: usize,
}

impl TtiRecord {
    pub fn rates(&self, tier: Tier) -> &[f64] {
        match tier {
            Tier::Cue => &self.cue_rates,
            Tier::D2d => &self.d2d_rates,
        }
    }

    pub fn avg(&self, tier: Tier) -> &[f64] {
        match tier {
            Tier::Cue => &self.cue_avg,
            Tier::D2d => &self.d2d_avg,
        }
    }

    /// Log-sum of the running averages held after this TTI.
    pub fn avg_logsum(&self, tier: Tier) -> f64 {
        self.avg(tier).iter().map(|r| r.ln()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSeries {
    pub scenario: String,
    pub seed: u64,
    pub num_cues: usize,
    pub num_pairs: usize,
    pub records: Vec<TtiRecord>,
}

impl MetricSeries {
    pub fn num_users(&self, tier: Tier) -> usize {
        match tier {
            Tier::Cue => self.num_cues,
            Tier::D2d => self.num_pairs,
        }
    }

    /// Time-mean delivered rate per user.
    pub fn mean_rates(&self, tier: Tier) -> Vec<f64> {
        let n = self.records.len().max(1) as f64;
        let mut acc = vec![0.0; self.num_users(tier)];
        for r in &self.records {
            for (a, x) in acc.iter_mut().zip(r.rates(tier)) {
                *a += x;
            }
        }
        acc.iter().map(|a| a / n).collect()
    }

    /// Sum of the logarithms of the users' mean rates.
    pub fn logsum(&self, tier: Tier) -> f64 {
        self.mean_rates(tier).iter().map(|r| r.ln()).sum()
    }

    /// Sum of the users' mean rates, bits/s.
    pub fn total_rate(&self, tier: Tier) -> f64 {
        self.mean_rates(tier).iter().sum()
    }

    pub fn wf_calls(&self) -> u64 {
        self.records.iter().map(|r| r.wf_calls).sum()
    }

    pub fn iterations_used(&self) -> u64 {
        self.records.iter().map(|r| r.iterations_used as u64).sum()
    }

    pub fn violations(&self) -> usize {
        self.records.iter().map(|r| r.violations).sum()
    }

    /// Scheduler objective summed over TTIs.
    pub fn utility_total(&self) -> f64 {
        self.records.iter().map(|r| r.utility).sum()
    }
}
