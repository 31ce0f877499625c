//! Exhaustive reference for [`adjacent_waterfill`](super::adjacent_waterfill).
//!
//! Enumerates every power vector on a uniform grid of `budget / steps` that
//! is feasible for the contiguous problem: power only from `start` onwards,
//! positive on one unbroken run beginning at `start`, surface non-decreasing
//! along the run. Used by the test suites only; cost grows like `steps^(K-1)`.

use super::{Depth, StairProfile, WaterfillError, WaterfillResult};

pub const ORACLE_MAX_STAIRS: usize = 4;

pub fn waterfill_grid_oracle(profile: &StairProfile, steps: u32) -> Result<WaterfillResult, WaterfillError> {
    profile.validate()?;
    let k = profile.depths.len();
    if k > ORACLE_MAX_STAIRS {
        return Err(WaterfillError::OracleTooLarge(k, ORACLE_MAX_STAIRS));
    }
    if steps == 0 {
        return Err(WaterfillError::InvalidInput("steps must be >= 1".into()));
    }
    if profile.depths[profile.start] == Depth::Blocked {
        return Err(WaterfillError::NoFeasibleChannel);
    }
    let unit = profile.budget / steps as f64;
    let mut search = Search { profile, unit, units: vec![0; k], best: None };
    search.descend(profile.start, steps, 0.0);
    let (rate, units) = search.best.expect("start stair is open, one stair alone is feasible");

    let powers: Vec<f64> = units.iter().map(|&u| u as f64 * unit).collect();
    let first = profile.start;
    let last = (first..k).take_while(|&i| units[i] > 0).last().unwrap_or(first);
    let water_level = (first..=last)
        .map(|i| powers[i] + profile.depths[i].open().unwrap_or(0.0))
        .fold(0.0, f64::max);
    Ok(WaterfillResult { powers, water_level, rate, block: first..last + 1 })
}

struct Search<'a> {
    profile: &'a StairProfile,
    unit: f64,
    units: Vec<u32>,
    best: Option<(f64, Vec<u32>)>,
}

impl Search<'_> {
    // Every complete vector spends the whole budget: spare budget poured on
    // the last stair of the run keeps it feasible and only adds rate.
    fn descend(&mut self, stair: usize, remaining: u32, prev_height: f64) {
        let Depth::Open(depth) = self.profile.depths[stair] else {
            return;
        };
        let next_open = stair + 1 < self.profile.depths.len() && self.profile.depths[stair + 1] != Depth::Blocked;
        for u in 1..=remaining {
            let height = u as f64 * self.unit + depth;
            if height < prev_height {
                continue;
            }
            self.units[stair] = u;
            if u == remaining {
                self.score();
            } else if next_open {
                self.descend(stair + 1, remaining - u, height);
            }
        }
        self.units[stair] = 0;
    }

    fn score(&mut self) {
        let powers: Vec<f64> = self.units.iter().map(|&u| u as f64 * self.unit).collect();
        let rate = self.profile.rate_of(&powers);
        if self.best.as_ref().is_none_or(|b| rate > b.0) {
            self.best = Some((rate, self.units.clone()));
        }
    }
}
