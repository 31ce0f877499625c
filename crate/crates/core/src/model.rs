//! Domain types shared by the schedulers: users, channel gains, allocations,
//! rate vectors, and the proportional-fair utility.
//!
//! Users and subchannels are dense 0-based indices throughout.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn offset(&self, dx: f64, dy: f64) -> Point {
        Point::new(self.x + dx, self.y + dy)
    }
}

/// Which side of the underlay a user belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tier {
    Cue,
    D2d,
}

impl Tier {
    pub fn as_str(&self) -> &'static str {
        match self {
            Tier::Cue => "cue",
            Tier::D2d => "d2d",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A cellular uplink user transmitting to the eNB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CueUser {
    pub id: usize,
    pub position: Point,
    /// Transmit power cap in Watts.
    pub max_power: f64,
    /// Running average rate in bits/s.
    pub avg_rate: f64,
}

/// A transmitter/receiver pair reusing uplink subchannels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct D2dPair {
    pub id: usize,
    pub tx_position: Point,
    pub rx_position: Point,
    pub max_power: f64,
    pub avg_rate: f64,
}

/// Linear power gains for every link the schedulers look at, per subchannel.
///
/// `external_*` carry interference power (Watts) that does not come from
/// users of this cell, e.g. co-channel users of neighbouring cells.
#[derive(Debug, Clone, PartialEq)]
pub struct GainTensor {
    pub num_subchannels: usize,
    /// `[cue][k]`, CUE transmitter to eNB.
    pub cue_to_bs: Vec<Vec<f64>>,
    /// `[pair][k]`, D2D transmitter to its own receiver.
    pub d2d_link: Vec<Vec<f64>>,
    /// `[pair][k]`, D2D transmitter to eNB.
    pub d2d_to_bs: Vec<Vec<f64>>,
    /// `[cue][pair][k]`, CUE transmitter to D2D receiver.
    pub cue_to_d2d_rx: Vec<Vec<Vec<f64>>>,
    /// `[k]`
    pub external_at_bs: Vec<f64>,
    /// `[pair][k]`
    pub external_at_d2d_rx: Vec<Vec<f64>>,
    /// W/Hz, noise figure already folded in.
    pub noise_density: f64,
    /// Hz per subchannel.
    pub bandwidth: f64,
}

impl GainTensor {
    /// All-zero gains (every link blocked) with no external interference.
    pub fn zeros(
        num_cues: usize,
        num_pairs: usize,
        num_subchannels: usize,
        noise_density: f64,
        bandwidth: f64,
    ) -> Self {
        let k = num_subchannels;
        Self {
            num_subchannels: k,
            cue_to_bs: vec![vec![0.0; k]; num_cues],
            d2d_link: vec![vec![0.0; k]; num_pairs],
            d2d_to_bs: vec![vec![0.0; k]; num_pairs],
            cue_to_d2d_rx: vec![vec![vec![0.0; k]; num_pairs]; num_cues],
            external_at_bs: vec![0.0; k],
            external_at_d2d_rx: vec![vec![0.0; k]; num_pairs],
            noise_density,
            bandwidth,
        }
    }

    pub fn num_cues(&self) -> usize {
        self.cue_to_bs.len()
    }

    pub fn num_pairs(&self) -> usize {
        self.d2d_link.len()
    }

    /// Thermal noise power per subchannel, N0 * B.
    pub fn noise_power(&self) -> f64 {
        self.noise_density * self.bandwidth
    }

    fn validate(&self) -> Result<(), ModelError> {
        let k = self.num_subchannels;
        if k == 0 {
            return Err(ModelError::InvalidState("K must be at least 1".into()));
        }
        if !(self.noise_density > 0.0 && self.noise_density.is_finite()) {
            return Err(ModelError::InvalidState(format!(
                "noise density must be positive, got {}",
                self.noise_density
            )));
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(ModelError::InvalidState(format!(
                "bandwidth must be positive, got {}",
                self.bandwidth
            )));
        }
        let (nc, nd) = (self.num_cues(), self.num_pairs());
        let rows_ok = |rows: &[Vec<f64>], n: usize| rows.len() == n && rows.iter().all(|r| r.len() == k);
        if !rows_ok(&self.cue_to_bs, nc)
            || !rows_ok(&self.d2d_link, nd)
            || !rows_ok(&self.d2d_to_bs, nd)
            || !rows_ok(&self.external_at_d2d_rx, nd)
            || self.external_at_bs.len() != k
            || self.cue_to_d2d_rx.len() != nc
            || !self.cue_to_d2d_rx.iter().all(|m| rows_ok(m, nd))
        {
            return Err(ModelError::Dimension("gain tensor shape inconsistent".into()));
        }
        let all = self
            .cue_to_bs
            .iter()
            .chain(&self.d2d_link)
            .chain(&self.d2d_to_bs)
            .chain(&self.external_at_d2d_rx)
            .chain(self.cue_to_d2d_rx.iter().flatten())
            .flatten()
            .chain(&self.external_at_bs);
        for &g in all {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(ModelError::InvalidState(format!("gain/interference must be finite and >= 0, got {g}")));
            }
        }
        Ok(())
    }
}

/// Everything a scheduler needs for one scheduling instant in one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub cues: Vec<CueUser>,
    pub pairs: Vec<D2dPair>,
    pub gains: GainTensor,
}

impl NetworkState {
    pub fn new(cues: Vec<CueUser>, pairs: Vec<D2dPair>, gains: GainTensor) -> Result<Self, ModelError> {
        let state = Self { cues, pairs, gains };
        state.validate()?;
        Ok(state)
    }

    pub fn num_subchannels(&self) -> usize {
        self.gains.num_subchannels
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.gains.num_cues() != self.cues.len() || self.gains.num_pairs() != self.pairs.len() {
            return Err(ModelError::Dimension(format!(
                "gains sized for {} CUEs / {} pairs, state has {} / {}",
                self.gains.num_cues(),
                self.gains.num_pairs(),
                self.cues.len(),
                self.pairs.len()
            )));
        }
        self.gains.validate()?;
        for (i, c) in self.cues.iter().enumerate() {
            if c.id != i {
                return Err(ModelError::InvalidState(format!("CUE ids must be dense: slot {i} holds id {}", c.id)));
            }
            check_user(c.max_power, c.avg_rate, Tier::Cue, i)?;
        }
        for (j, d) in self.pairs.iter().enumerate() {
            if d.id != j {
                return Err(ModelError::InvalidState(format!("pair ids must be dense: slot {j} holds id {}", d.id)));
            }
            if d.tx_position == d.rx_position {
                return Err(ModelError::InvalidState(format!("pair {j} has coincident tx and rx")));
            }
            check_user(d.max_power, d.avg_rate, Tier::D2d, j)?;
        }
        Ok(())
    }
}

fn check_user(max_power: f64, avg_rate: f64, tier: Tier, id: usize) -> Result<(), ModelError> {
    if !(max_power > 0.0 && max_power.is_finite()) {
        return Err(ModelError::InvalidState(format!("{tier} {id}: max_power must be positive")));
    }
    if !(avg_rate >= 0.0 && avg_rate.is_finite()) {
        return Err(ModelError::InvalidState(format!("{tier} {id}: avg_rate must be >= 0")));
    }
    Ok(())
}

/// Per-tier binary assignment plus per-(user, subchannel) transmit powers.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub num_subchannels: usize,
    pub cue_assign: Vec<Vec<bool>>,
    pub d2d_assign: Vec<Vec<bool>>,
    pub cue_power: Vec<Vec<f64>>,
    pub d2d_power: Vec<Vec<f64>>,
}

impl Allocation {
    pub fn empty(num_cues: usize, num_pairs: usize, num_subchannels: usize) -> Self {
        let k = num_subchannels;
        Self {
            num_subchannels: k,
            cue_assign: vec![vec![false; k]; num_cues],
            d2d_assign: vec![vec![false; k]; num_pairs],
            cue_power: vec![vec![0.0; k]; num_cues],
            d2d_power: vec![vec![0.0; k]; num_pairs],
        }
    }

    pub fn assign(&self, tier: Tier) -> &[Vec<bool>] {
        match tier {
            Tier::Cue => &self.cue_assign,
            Tier::D2d => &self.d2d_assign,
        }
    }

    pub fn power(&self, tier: Tier) -> &[Vec<f64>] {
        match tier {
            Tier::Cue => &self.cue_power,
            Tier::D2d => &self.d2d_power,
        }
    }

    /// Give `user` the subchannels in `block` at the given powers (indexed
    /// by absolute subchannel).
    pub fn set_block(&mut self, tier: Tier, user: usize, block: Range<usize>, powers: &[f64]) {
        let (assign, power) = match tier {
            Tier::Cue => (&mut self.cue_assign[user], &mut self.cue_power[user]),
            Tier::D2d => (&mut self.d2d_assign[user], &mut self.d2d_power[user]),
        };
        assign.iter_mut().for_each(|a| *a = false);
        power.iter_mut().for_each(|p| *p = 0.0);
        for k in block {
            assign[k] = true;
            power[k] = powers[k];
        }
    }

    /// The user's assigned subchannels as a range, if they form one run.
    pub fn block(&self, tier: Tier, user: usize) -> Option<Range<usize>> {
        let row = &self.assign(tier)[user];
        let first = row.iter().position(|&a| a)?;
        let last = row.iter().rposition(|&a| a)?;
        row[first..=last].iter().all(|&a| a).then_some(first..last + 1)
    }

    /// User of `tier` holding subchannel `k`, the lowest index if several do.
    pub fn owner(&self, tier: Tier, k: usize) -> Option<usize> {
        self.assign(tier).iter().position(|row| row[k])
    }

    /// The subchannel-to-user maps of both tiers, used to detect when the
    /// outer scheduling loop stops changing anything.
    pub fn pattern(&self) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
        let k = self.num_subchannels;
        (
            (0..k).map(|s| self.owner(Tier::Cue, s)).collect(),
            (0..k).map(|s| self.owner(Tier::D2d, s)).collect(),
        )
    }
}

/// Post-adjustment rates with the per-user caps they were clamped against.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RateVector {
    pub rates: Vec<f64>,
    pub caps: Vec<f64>,
    /// Users clamped to their cap during rate adjustment, in clamp order.
    pub clamped: Vec<usize>,
}

impl RateVector {
    pub fn total(&self) -> f64 {
        self.rates.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Two users of the same tier hold the same subchannel.
    Exclusivity { tier: Tier, subchannel: usize, users: Vec<usize> },
    /// A user's subchannels do not form one contiguous run.
    Adjacency { tier: Tier, user: usize, subchannels: Vec<usize> },
    PowerBudget { tier: Tier, user: usize, total: f64, max_power: f64 },
    /// Positive power on a subchannel the user does not hold.
    PowerOutsideAssignment { tier: Tier, user: usize, subchannel: usize },
    InvalidPower { tier: Tier, user: usize, subchannel: usize, power: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Exclusivity { tier, subchannel, users } => {
                write!(f, "{tier} subchannel {subchannel} held by users {users:?}")
            }
            Violation::Adjacency { tier, user, subchannels } => {
                write!(f, "{tier} {user} holds non-contiguous subchannels {subchannels:?}")
            }
            Violation::PowerBudget { tier, user, total, max_power } => {
                write!(f, "{tier} {user} transmits {total} W over cap {max_power} W")
            }
            Violation::PowerOutsideAssignment { tier, user, subchannel } => {
                write!(f, "{tier} {user} has power on unassigned subchannel {subchannel}")
            }
            Violation::InvalidPower { tier, user, subchannel, power } => {
                write!(f, "{tier} {user} has invalid power {power} on subchannel {subchannel}")
            }
        }
    }
}

/// Relative slack allowed on the per-user power sum.
pub const POWER_TOLERANCE: f64 = 1e-9;

/// Check exclusivity, adjacency and power-budget invariants of `alloc`.
pub fn validate_allocation(alloc: &Allocation, state: &NetworkState) -> Result<Vec<Violation>, ModelError> {
    let k = state.num_subchannels();
    let shape_ok = |rows_a: &[Vec<bool>], rows_p: &[Vec<f64>], n: usize| {
        rows_a.len() == n && rows_p.len() == n && rows_a.iter().all(|r| r.len() == k) && rows_p.iter().all(|r| r.len() == k)
    };
    if alloc.num_subchannels != k
        || !shape_ok(&alloc.cue_assign, &alloc.cue_power, state.cues.len())
        || !shape_ok(&alloc.d2d_assign, &alloc.d2d_power, state.pairs.len())
    {
        return Err(ModelError::Dimension(format!(
            "allocation shape does not match K={k}, N_C={}, N_D={}",
            state.cues.len(),
            state.pairs.len()
        )));
    }

    let mut out = Vec::new();
    for tier in [Tier::Cue, Tier::D2d] {
        let assign = alloc.assign(tier);
        let power = alloc.power(tier);
        let caps: Vec<f64> = match tier {
            Tier::Cue => state.cues.iter().map(|c| c.max_power).collect(),
            Tier::D2d => state.pairs.iter().map(|d| d.max_power).collect(),
        };

        for s in 0..k {
            let holders: Vec<usize> = (0..assign.len()).filter(|&u| assign[u][s]).collect();
            if holders.len() > 1 {
                out.push(Violation::Exclusivity { tier, subchannel: s, users: holders });
            }
        }

        for (u, row) in assign.iter().enumerate() {
            let held: Vec<usize> = (0..k).filter(|&s| row[s]).collect();
            if let (Some(&lo), Some(&hi)) = (held.first(), held.last()) {
                if hi - lo + 1 != held.len() {
                    out.push(Violation::Adjacency { tier, user: u, subchannels: held });
                }
            }
            let mut total = 0.0;
            for s in 0..k {
                let p = power[u][s];
                if !(p >= 0.0 && p.is_finite()) {
                    out.push(Violation::InvalidPower { tier, user: u, subchannel: s, power: p });
                    continue;
                }
                if p > 0.0 && !row[s] {
                    out.push(Violation::PowerOutsideAssignment { tier, user: u, subchannel: s });
                }
                total += p;
            }
            if total > caps[u] * (1.0 + POWER_TOLERANCE) {
                out.push(Violation::PowerBudget { tier, user: u, total, max_power: caps[u] });
            }
        }
    }
    Ok(out)
}

/// Proportional-fair utility of one scheduling decision.
///
/// With `window == 1` this is the plain log-sum of instantaneous rates and a
/// user with zero rate drives the result to `f64::NEG_INFINITY`. For larger
/// windows each user contributes `ln(1 + r / ((T-1) * avg))`.
pub fn pf_utility(
    cue_rates: &[f64],
    d2d_rates: &[f64],
    cue_avg: &[f64],
    d2d_avg: &[f64],
    window: u32,
) -> Result<f64, ModelError> {
    if window == 0 {
        return Err(ModelError::Domain("averaging window must be >= 1".into()));
    }
    if cue_rates.len() != cue_avg.len() || d2d_rates.len() != d2d_avg.len() {
        return Err(ModelError::Dimension("rates and averages differ in length".into()));
    }
    let mut sum = 0.0;
    for (&r, &avg) in cue_rates.iter().zip(cue_avg).chain(d2d_rates.iter().zip(d2d_avg)) {
        if r.is_nan() || r < 0.0 {
            return Err(ModelError::Domain(format!("rate must be >= 0, got {r}")));
        }
        if window == 1 {
            sum += r.ln();
        } else {
            if !(avg > 0.0 && avg.is_finite()) {
                return Err(ModelError::Domain(format!("average rate must be > 0 for T >= 2, got {avg}")));
            }
            sum += (r / ((window - 1) as f64 * avg)).ln_1p();
        }
    }
    Ok(sum)
}

/// Exponential moving average: `avg' = (1 - 1/T) avg + (1/T) r`.
pub fn update_avg_rates(avg: &[f64], achieved: &[f64], window: u32) -> Result<Vec<f64>, ModelError> {
    if window == 0 {
        return Err(ModelError::Domain("averaging window must be >= 1".into()));
    }
    if avg.len() != achieved.len() {
        return Err(ModelError::Dimension("average and achieved rates differ in length".into()));
    }
    let alpha = 1.0 / window as f64;
    Ok(avg.iter().zip(achieved).map(|(&a, &r)| (1.0 - alpha) * a + alpha * r).collect())
}
