//! Water-filling kernels.
//!
//! Two flavours live here:
//!
//! * [`adjacent_waterfill`] / [`best_start`] pour a user's power budget into a
//!   run of adjacent subchannels ("stairs") starting at a fixed index, keeping
//!   the water surface (power + stair depth) non-decreasing across the run so
//!   the allocation stays frequency-contiguous.
//! * [`geometric_waterfill`] / [`capped_rate_adjust`] divide a tier's rate
//!   budget among users so that `sum ln(1 + r_i / w_i)` is maximal, with
//!   `w_i = (T-1) * avg_i` playing the role of the stair depth.

use std::ops::Range;

use thiserror::Error;

use crate::model::RateVector;

pub mod oracle;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaterfillError {
    #[error("no feasible subchannel for this start index")]
    NoFeasibleChannel,
    #[error("invalid stair profile: {0}")]
    InvalidProfile(String),
    #[error("weights must be sorted ascending (index {0} breaks the order)")]
    Unsorted(usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("grid oracle refuses K={0} (limit {1})")]
    OracleTooLarge(usize, usize),
}

/// Effective noise-over-gain of one stair, or a stair whose gain was zeroed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Depth {
    Open(f64),
    Blocked,
}

impl Depth {
    /// Depth of a link with linear `gain` under `noise + interference` Watts.
    pub fn from_link(gain: f64, noise: f64, interference: f64) -> Depth {
        if gain > 0.0 {
            let d = (noise + interference) / gain;
            if d.is_finite() {
                return Depth::Open(d);
            }
        }
        Depth::Blocked
    }

    pub fn open(&self) -> Option<f64> {
        match *self {
            Depth::Open(d) => Some(d),
            Depth::Blocked => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StairProfile {
    pub depths: Vec<Depth>,
    /// Power budget in Watts.
    pub budget: f64,
    /// First stair allowed to receive power.
    pub start: usize,
    /// Hz per stair; rates come out in bits/s. Defaults to 1.
    pub bandwidth: f64,
}

impl StairProfile {
    pub fn new(depths: Vec<Depth>, budget: f64, start: usize) -> Result<Self, WaterfillError> {
        let p = Self { depths, budget, start, bandwidth: 1.0 };
        p.validate()?;
        Ok(p)
    }

    /// Profile from plain depths, `f64::INFINITY` marking a blocked stair.
    pub fn from_depths(depths: &[f64], budget: f64, start: usize) -> Result<Self, WaterfillError> {
        let d = depths
            .iter()
            .map(|&x| if x.is_infinite() { Depth::Blocked } else { Depth::Open(x) })
            .collect();
        Self::new(d, budget, start)
    }

    pub fn with_bandwidth(mut self, bandwidth: f64) -> Self {
        self.bandwidth = bandwidth;
        self
    }

    pub fn validate(&self) -> Result<(), WaterfillError> {
        if self.depths.is_empty() {
            return Err(WaterfillError::InvalidProfile("no stairs".into()));
        }
        if self.start >= self.depths.len() {
            return Err(WaterfillError::InvalidProfile(format!(
                "start {} outside 0..{}",
                self.start,
                self.depths.len()
            )));
        }
        if !(self.budget > 0.0 && self.budget.is_finite()) {
            return Err(WaterfillError::InvalidProfile(format!("budget must be positive, got {}", self.budget)));
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(WaterfillError::InvalidProfile(format!("bandwidth must be positive, got {}", self.bandwidth)));
        }
        for (k, d) in self.depths.iter().enumerate() {
            if let Depth::Open(x) = *d {
                if !(x > 0.0 && x.is_finite()) {
                    return Err(WaterfillError::InvalidProfile(format!("depth {k} must be positive, got {x}")));
                }
            }
        }
        Ok(())
    }

    /// Rate of a power vector on this profile. Blocked stairs contribute nothing.
    pub fn rate_of(&self, powers: &[f64]) -> f64 {
        self.depths
            .iter()
            .zip(powers)
            .filter_map(|(d, &p)| d.open().map(|d| (p / d).ln_1p()))
            .sum::<f64>()
            * self.bandwidth
            / std::f64::consts::LN_2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaterfillResult {
    /// Watts per stair, zero outside `block`.
    pub powers: Vec<f64>,
    pub water_level: f64,
    pub rate: f64,
    /// Stairs with positive power.
    pub block: Range<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WaterfillMode {
    /// Solve the height-monotone contiguous program exactly.
    #[default]
    Optimal,
    /// Evaluate the textbook recurrence `p_k = [mu - p_{k-1} - d_{k-1} + d_k]^+`
    /// with `mu` found by bisection. It alternates on flat stairs and is kept
    /// only for comparison.
    Literal,
}

/// Smallest power a stair inside a block receives, relative to budget / stairs.
/// A stair at the running-maximum depth would otherwise get exactly zero.
const POSITIVE_FLOOR: f64 = 1e-9;

const LITERAL_BISECTION_ITERS: usize = 200;

/// Pour `profile.budget` into adjacent stairs starting at `profile.start`.
pub fn adjacent_waterfill(profile: &StairProfile) -> Result<WaterfillResult, WaterfillError> {
    adjacent_waterfill_with_mode(profile, WaterfillMode::Optimal)
}

pub fn adjacent_waterfill_with_mode(
    profile: &StairProfile,
    mode: WaterfillMode,
) -> Result<WaterfillResult, WaterfillError> {
    profile.validate()?;
    let s = profile.start;
    let run: Vec<f64> = profile.depths[s..].iter().map_while(Depth::open).collect();
    if run.is_empty() {
        return Err(WaterfillError::NoFeasibleChannel);
    }
    let (local, level) = match mode {
        WaterfillMode::Optimal => optimal_run(&run, profile.budget),
        WaterfillMode::Literal => literal_run(&run, profile.budget),
    };
    let mut powers = vec![0.0; profile.depths.len()];
    powers[s..s + local.len()].copy_from_slice(&local);
    let block = s..s + local.len();
    let rate = profile.rate_of(&powers);
    Ok(WaterfillResult { powers, water_level: level, rate, block })
}

/// Best block over every end index of the open run `depths`.
fn optimal_run(depths: &[f64], budget: f64) -> (Vec<f64>, f64) {
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    for len in 1..=depths.len() {
        let Some((powers, level)) = fill_block(&depths[..len], budget) else {
            continue;
        };
        let rate: f64 = powers.iter().zip(depths).map(|(p, d)| (p / d).ln_1p()).sum();
        if best.as_ref().is_none_or(|b| rate > b.0) {
            best = Some((rate, powers, level));
        }
    }
    // a single stair always accepts the whole budget
    let (_, powers, level) = best.expect("first stair is always feasible");
    (powers, level)
}

/// Maximise `sum ln(h_k / d_k)` over heights `h_k = p_k + d_k` that are
/// non-decreasing, with every `p_k >= floor` and `sum p_k = budget`.
///
/// Monotone heights with `h_k >= d_k + floor` means `h_k >= L_k`, the running
/// maximum of `d + floor`. Since `L` is itself non-decreasing, the optimum is
/// `h_k = max(level, L_k)`.
fn fill_block(depths: &[f64], budget: f64) -> Option<(Vec<f64>, f64)> {
    let n = depths.len();
    let floor = POSITIVE_FLOOR * budget / n as f64;
    let mut lower = Vec::with_capacity(n);
    let mut run_max = f64::NEG_INFINITY;
    for &d in depths {
        run_max = run_max.max(d + floor);
        lower.push(run_max);
    }
    let required: f64 = lower.iter().zip(depths).map(|(l, d)| l - d).sum();
    if required > budget {
        return None;
    }
    let target = budget + depths.iter().sum::<f64>();
    // suffix[m] = sum of lower[m..]
    let mut suffix = vec![0.0; n + 1];
    for m in (0..n).rev() {
        suffix[m] = suffix[m + 1] + lower[m];
    }
    let mut level = lower[0];
    for m in 1..=n {
        let mu = (target - suffix[m]) / m as f64;
        if mu >= lower[m - 1] && (m == n || mu <= lower[m]) {
            level = mu;
            break;
        }
    }
    let mut powers: Vec<f64> = depths
        .iter()
        .zip(&lower)
        .map(|(&d, &l)| level.max(l) - d)
        .collect();
    // rounding can leave the sum a few ulps above budget
    let total: f64 = powers.iter().sum();
    if total > budget {
        let excess = total - budget;
        let last = powers.len() - 1;
        powers[last] = (powers[last] - excess).max(floor);
    }
    Some((powers, level))
}

fn literal_powers(depths: &[f64], level: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(depths.len());
    for (k, &d) in depths.iter().enumerate() {
        let p = if k == 0 { level - d } else { level - out[k - 1] - depths[k - 1] + d };
        if p <= 0.0 {
            break;
        }
        out.push(p);
    }
    out
}

fn literal_run(depths: &[f64], budget: f64) -> (Vec<f64>, f64) {
    let (mut lo, mut hi) = (depths[0], depths[0] + budget);
    for _ in 0..LITERAL_BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        if literal_powers(depths, mid).iter().sum::<f64>() <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    let mut powers = literal_powers(depths, lo);
    if powers.is_empty() {
        powers.push(budget);
    }
    (powers, lo)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestStart {
    pub start: usize,
    pub result: WaterfillResult,
    /// Number of [`adjacent_waterfill`] evaluations performed (always K).
    pub evaluations: usize,
}

/// Try every start index and keep the one with the highest rate; ties go to
/// the smallest start.
pub fn best_start(
    depths: &[Depth],
    budget: f64,
    bandwidth: f64,
    mode: WaterfillMode,
) -> Result<BestStart, WaterfillError> {
    let mut best: Option<(usize, WaterfillResult)> = None;
    let mut evaluations = 0;
    for start in 0..depths.len() {
        let profile = StairProfile { depths: depths.to_vec(), budget, start, bandwidth };
        evaluations += 1;
        match adjacent_waterfill_with_mode(&profile, mode) {
            Ok(r) => {
                if best.as_ref().is_none_or(|(_, b)| r.rate > b.rate) {
                    best = Some((start, r));
                }
            }
            Err(WaterfillError::NoFeasibleChannel) => {}
            Err(e) => return Err(e),
        }
    }
    let (start, result) = best.ok_or(WaterfillError::NoFeasibleChannel)?;
    Ok(BestStart { start, result, evaluations })
}

/// Divide `budget` among users whose depths `sorted_weights` are ascending so
/// that `sum ln(1 + r_i / w_i)` is maximal.
///
/// Users `0..=i_hat` share a common surface `w_i + r_i`; the rest get zero.
/// An infinite budget yields infinite rates for every user.
pub fn geometric_waterfill(sorted_weights: &[f64], budget: f64) -> Result<Vec<f64>, WaterfillError> {
    if budget.is_nan() || budget < 0.0 {
        return Err(WaterfillError::InvalidInput(format!("budget must be >= 0, got {budget}")));
    }
    for (i, &w) in sorted_weights.iter().enumerate() {
        if !(w >= 0.0 && w.is_finite()) {
            return Err(WaterfillError::InvalidInput(format!("weight {i} must be finite and >= 0, got {w}")));
        }
        if i > 0 && w < sorted_weights[i - 1] {
            return Err(WaterfillError::Unsorted(i));
        }
    }
    let n = sorted_weights.len();
    if budget.is_infinite() {
        return Ok(vec![f64::INFINITY; n]);
    }
    // i_hat = number of users whose stair is still below the surface.
    let mut prefix = 0.0;
    let mut active = 0;
    for (i, &w) in sorted_weights.iter().enumerate() {
        if budget - (i as f64 * w - prefix) > 0.0 {
            active = i + 1;
        } else {
            break;
        }
        prefix += w;
    }
    let mut rates = vec![0.0; n];
    if active == 0 {
        return Ok(rates);
    }
    let prefix: f64 = sorted_weights[..active].iter().sum();
    let surface = (budget + prefix) / active as f64;
    for (r, &w) in rates.iter_mut().zip(sorted_weights).take(active) {
        *r = (surface - w).max(0.0);
    }
    Ok(rates)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateAdjustment {
    pub rates: RateVector,
    /// Geometric water-filling rounds run before no user exceeded its cap.
    pub rounds: usize,
}

/// Proportional-fair rate split under per-user caps and a tier budget.
///
/// Users are ordered by ascending average rate (index breaks ties) and
/// water-filled with depths `(T-1) * avg`. Anyone pushed above their cap is
/// clamped to it and leaves the pool, the budget shrinks by their caps, and
/// the rest are water-filled again. With `window == 1` every depth is zero and
/// the split is equal, which maximises the plain log-sum.
pub fn capped_rate_adjust(
    avg_rates: &[f64],
    caps: &[f64],
    budget: f64,
    window: u32,
) -> Result<RateAdjustment, WaterfillError> {
    if avg_rates.len() != caps.len() {
        return Err(WaterfillError::InvalidInput("avg_rates and caps differ in length".into()));
    }
    if window == 0 {
        return Err(WaterfillError::InvalidInput("window must be >= 1".into()));
    }
    if let Some(c) = caps.iter().find(|c| c.is_nan() || **c < 0.0) {
        return Err(WaterfillError::InvalidInput(format!("caps must be >= 0, got {c}")));
    }
    if budget.is_nan() || budget < 0.0 {
        return Err(WaterfillError::InvalidInput(format!("budget must be >= 0, got {budget}")));
    }
    let n = caps.len();
    let scale = (window - 1) as f64;
    let mut active = selection_order(avg_rates);
    let mut rates = vec![0.0; n];
    let mut clamped = Vec::new();
    let mut remaining = budget;
    let mut rounds = 0;
    while !active.is_empty() {
        rounds += 1;
        let weights: Vec<f64> = active.iter().map(|&u| scale * avg_rates[u]).collect();
        let wf = geometric_waterfill(&weights, remaining)?;
        let over: Vec<usize> = active
            .iter()
            .zip(&wf)
            .filter(|&(&u, &r)| r > caps[u])
            .map(|(&u, _)| u)
            .collect();
        if over.is_empty() {
            for (&u, &r) in active.iter().zip(&wf) {
                rates[u] = r;
            }
            break;
        }
        for &u in &over {
            rates[u] = caps[u];
            remaining -= caps[u];
        }
        remaining = remaining.max(0.0);
        active.retain(|u| !over.contains(u));
        clamped.extend(over);
    }
    Ok(RateAdjustment { rates: RateVector { rates, caps: caps.to_vec(), clamped }, rounds })
}

/// Users sorted by ascending average rate, lowest index first on ties.
pub fn selection_order(avg_rates: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..avg_rates.len()).collect();
    order.sort_by(|&a, &b| avg_rates[a].total_cmp(&avg_rates[b]).then(a.cmp(&b)));
    order
}

#[cfg(test)]
mod tests {
    use super::oracle::waterfill_grid_oracle;
    use super::*;
    use proptest::prelude::*;

    fn open(ds: &[f64]) -> Vec<Depth> {
        ds.iter().map(|&d| Depth::Open(d)).collect()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    /// Classic water-filling over every open stair from `start`, no contiguity.
    fn unconstrained_rate(p: &StairProfile) -> f64 {
        let mut ds: Vec<f64> = p.depths[p.start..].iter().filter_map(Depth::open).collect();
        ds.sort_by(f64::total_cmp);
        let mut best = 0.0;
        let mut sum = 0.0;
        for (m, &d) in ds.iter().enumerate() {
            sum += d;
            let mu = (p.budget + sum) / (m + 1) as f64;
            if mu > d {
                best = ds[..=m].iter().map(|&x| (mu / x).ln()).sum::<f64>();
            }
        }
        best * p.bandwidth / std::f64::consts::LN_2
    }

    #[test]
    fn single_stair_takes_everything() {
        let p = StairProfile::new(open(&[1.0]), 3.0, 0).unwrap().with_bandwidth(180e3);
        let r = adjacent_waterfill(&p).unwrap();
        assert!(close(r.powers[0], 3.0, 1e-12));
        assert!(close(r.water_level, 4.0, 1e-8));
        assert!(close(r.rate, 2.0 * 180e3, 1e-9));
    }

    #[test]
    fn two_stairs_match_grid_oracle() {
        let p = StairProfile::new(open(&[1.0, 2.0]), 3.0, 0).unwrap();
        // oracle with step budget/1000: best split [2, 1] within one step
        let o = waterfill_grid_oracle(&p, 1000).unwrap();
        assert!((o.powers[0] - 2.0).abs() <= 3e-3 && (o.powers[1] - 1.0).abs() <= 3e-3);
        let r = adjacent_waterfill(&p).unwrap();
        assert!(close(r.powers[0], 2.0, 1e-8) && close(r.powers[1], 1.0, 1e-8));
        assert!(close(r.water_level, 3.0, 1e-8));
        assert!(r.rate >= o.rate - 1e-9);
    }

    #[test]
    fn flat_stairs_split_evenly() {
        let p = StairProfile::new(open(&[1.0, 1.0, 1.0]), 3.0, 0).unwrap();
        let o = waterfill_grid_oracle(&p, 300).unwrap();
        assert!(o.powers.iter().all(|&x| close(x, 1.0, 1e-9)));
        let r = adjacent_waterfill(&p).unwrap();
        assert!(r.powers.iter().all(|&x| close(x, 1.0, 1e-8)));
        assert_eq!(r.block, 0..3);
    }

    #[test]
    fn zero_floor_stair_bridges_to_good_stairs() {
        // The middle stair is deep; crossing it with (almost) no power still
        // reaches the shallow third stair.
        let p = StairProfile::new(open(&[1.0, 3.0, 1.0]), 3.5, 0).unwrap();
        let r = adjacent_waterfill(&p).unwrap();
        let o = waterfill_grid_oracle(&p, 350).unwrap();
        assert_eq!(r.block, 0..3);
        assert!(r.powers[1] > 0.0 && r.powers[1] < 1e-6);
        assert!(r.rate >= o.rate - 1e-9);
        let expected = (2.5f64).log2() + 3f64.log2();
        assert!(close(r.rate, expected, 1e-8));
    }

    #[test]
    fn blocked_start_is_infeasible() {
        let p = StairProfile::new(vec![Depth::Blocked, Depth::Open(1.0)], 1.0, 0).unwrap();
        assert_eq!(adjacent_waterfill(&p), Err(WaterfillError::NoFeasibleChannel));
    }

    #[test]
    fn block_stops_at_blocked_stair() {
        let p = StairProfile::new(vec![Depth::Open(1.0), Depth::Blocked, Depth::Open(0.1)], 1.0, 0).unwrap();
        let r = adjacent_waterfill(&p).unwrap();
        assert_eq!(r.block, 0..1);
        assert_eq!(r.powers[2], 0.0);
    }

    #[test]
    fn invalid_profiles_rejected() {
        assert!(StairProfile::new(open(&[1.0]), 0.0, 0).is_err());
        assert!(StairProfile::new(open(&[1.0]), 1.0, 1).is_err());
        assert!(StairProfile::new(open(&[0.0]), 1.0, 0).is_err());
        assert!(StairProfile::new(vec![], 1.0, 0).is_err());
    }

    #[test]
    fn best_start_examples() {
        let d = vec![Depth::Blocked, Depth::Open(1.0), Depth::Open(1.0)];
        let b = best_start(&d, 2.0, 1.0, WaterfillMode::Optimal).unwrap();
        assert_eq!((b.start, b.result.block.clone()), (1, 1..3));
        assert_eq!(b.evaluations, 3);

        let flat = open(&[0.5; 4]);
        assert_eq!(best_start(&flat, 1.0, 1.0, WaterfillMode::Optimal).unwrap().start, 0);

        // oracle rates per start (200 steps): start 0 -> log2(1.1) region,
        // start 1 -> 2*log2(6), start 2 -> log2(11)
        let deep = open(&[10.0, 0.1, 0.1]);
        let rates: Vec<f64> = (0..3)
            .map(|s| waterfill_grid_oracle(&StairProfile::new(deep.clone(), 1.0, s).unwrap(), 200).unwrap().rate)
            .collect();
        assert!(rates[1] > rates[0] && rates[1] > rates[2]);
        let b = best_start(&deep, 1.0, 1.0, WaterfillMode::Optimal).unwrap();
        assert_eq!(b.start, 1);
        assert!(close(b.result.rate, 2.0 * 6f64.log2(), 1e-8));

        let all_blocked = vec![Depth::Blocked; 3];
        assert_eq!(
            best_start(&all_blocked, 1.0, 1.0, WaterfillMode::Optimal),
            Err(WaterfillError::NoFeasibleChannel)
        );
    }

    #[test]
    fn literal_recurrence_alternates_on_flat_stairs() {
        let p = StairProfile::new(open(&[1.0; 4]), 2.0, 0).unwrap();
        let lit = adjacent_waterfill_with_mode(&p, WaterfillMode::Literal).unwrap();
        let opt = adjacent_waterfill(&p).unwrap();
        // p_1 = mu - 1, p_2 = 1, p_3 = mu - 1 ... never the even split
        assert!(!lit.powers.iter().all(|&x| close(x, 0.5, 1e-6)));
        assert!(opt.powers.iter().all(|&x| close(x, 0.5, 1e-8)));
        assert!(opt.rate >= lit.rate);
        assert!(lit.powers.iter().sum::<f64>() <= 2.0 + 1e-9);
    }

    #[test]
    fn geometric_examples() {
        let r = geometric_waterfill(&[1.0, 2.0], 10.0).unwrap();
        assert!(close(r[0], 5.5, 1e-12) && close(r[1], 4.5, 1e-12));
        let r = geometric_waterfill(&[3.0; 4], 8.0).unwrap();
        assert!(r.iter().all(|&x| close(x, 2.0, 1e-12)));
        assert_eq!(geometric_waterfill(&[1.0, 2.0, 3.0], 0.0).unwrap(), vec![0.0; 3]);
        // deep third stair stays dry
        assert_eq!(geometric_waterfill(&[0.0, 1.0, 10.0], 1.0).unwrap(), vec![1.0, 0.0, 0.0]);
        assert_eq!(geometric_waterfill(&[2.0, 1.0], 1.0), Err(WaterfillError::Unsorted(1)));
    }

    #[test]
    fn geometric_matches_numeric_convex_oracle() {
        // projected-gradient ascent on sum ln(1 + r_i/w_i) over the simplex
        let w = [1.0, 2.0];
        let budget = 10.0;
        let mut best = (f64::NEG_INFINITY, 0.0);
        for i in 0..=100_000 {
            let r0 = budget * i as f64 / 100_000.0;
            let u = (1.0 + r0 / w[0]).ln() + (1.0 + (budget - r0) / w[1]).ln();
            if u > best.0 {
                best = (u, r0);
            }
        }
        let r = geometric_waterfill(&w, budget).unwrap();
        assert!((r[0] - best.1).abs() < 1e-3);
    }

    #[test]
    fn capped_examples() {
        let a = capped_rate_adjust(&[1.0, 1.0], &[3.0, 10.0], 10.0, 2).unwrap();
        assert!(close(a.rates.rates[0], 3.0, 1e-12) && close(a.rates.rates[1], 7.0, 1e-12));
        assert_eq!(a.rates.clamped, vec![0]);
        assert_eq!(a.rounds, 2);

        let avg = [1.0, 4.0, 2.0];
        let inf = capped_rate_adjust(&avg, &[f64::INFINITY; 3], 9.0, 3).unwrap();
        let order = selection_order(&avg);
        let w: Vec<f64> = order.iter().map(|&u| 2.0 * avg[u]).collect();
        let g = geometric_waterfill(&w, 9.0).unwrap();
        for (pos, &u) in order.iter().enumerate() {
            assert!(close(inf.rates.rates[u], g[pos], 1e-12));
        }

        let caps = [1.0, 2.0, 3.0];
        let sat = capped_rate_adjust(&[5.0, 1.0, 3.0], &caps, 100.0, 10).unwrap();
        assert_eq!(sat.rates.rates, caps.to_vec());

        let unlimited = capped_rate_adjust(&[5.0, 1.0], &[2.0, 4.0], f64::INFINITY, 2).unwrap();
        assert_eq!(unlimited.rates.rates, vec![2.0, 4.0]);
    }

    #[test]
    fn window_one_splits_evenly() {
        let a = capped_rate_adjust(&[9.0, 1.0, 4.0], &[f64::INFINITY; 3], 6.0, 1).unwrap();
        assert!(a.rates.rates.iter().all(|&r| close(r, 2.0, 1e-12)));
    }

    fn profile_strategy() -> impl Strategy<Value = StairProfile> {
        (1usize..=4)
            .prop_flat_map(|k| {
                (
                    proptest::collection::vec((-1.0f64..2.0, prop::bool::weighted(0.1)), k),
                    -1.0f64..1.0,
                    0..k,
                )
            })
            .prop_map(|(ds, logb, start)| {
                let depths = ds
                    .into_iter()
                    .map(|(e, blocked)| if blocked { Depth::Blocked } else { Depth::Open(10f64.powf(e)) })
                    .collect();
                StairProfile { depths, budget: 10f64.powf(logb), start, bandwidth: 1.0 }
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn waterfill_invariants(p in profile_strategy()) {
            match adjacent_waterfill(&p) {
                Err(WaterfillError::NoFeasibleChannel) => {
                    prop_assert_eq!(p.depths[p.start], Depth::Blocked);
                }
                Err(e) => prop_assert!(false, "unexpected {e}"),
                Ok(r) => {
                    let total: f64 = r.powers.iter().sum();
                    prop_assert!(total <= p.budget * (1.0 + 1e-12));
                    prop_assert!(close(total, p.budget, 1e-9));
                    prop_assert_eq!(r.block.start, p.start);
                    for (k, &pw) in r.powers.iter().enumerate() {
                        prop_assert_eq!(pw > 0.0, r.block.contains(&k));
                    }
                    let heights: Vec<f64> = r.block.clone()
                        .map(|k| r.powers[k] + p.depths[k].open().unwrap())
                        .collect();
                    for w in heights.windows(2) {
                        prop_assert!(w[1] >= w[0] * (1.0 - 1e-12));
                    }
                    prop_assert!(close(p.rate_of(&r.powers), r.rate, 1e-9));
                    prop_assert!(r.rate <= unconstrained_rate(&p) * (1.0 + 1e-9) + 1e-12);
                    let o = waterfill_grid_oracle(&p, 40).unwrap();
                    prop_assert!(r.rate >= o.rate * (1.0 - 1e-9));
                }
            }
        }

        #[test]
        fn geometric_kkt(
            mut w in proptest::collection::vec(0.0f64..100.0, 1..12),
            budget in 0.0f64..500.0,
        ) {
            w.sort_by(f64::total_cmp);
            let r = geometric_waterfill(&w, budget).unwrap();
            let active: Vec<usize> = (0..w.len()).filter(|&i| r[i] > 0.0).collect();
            if !active.is_empty() {
                let total: f64 = r.iter().sum();
                prop_assert!(close(total, budget, 1e-9));
                let surface = w[active[0]] + r[active[0]];
                for &i in &active {
                    prop_assert!(close(w[i] + r[i], surface, 1e-9));
                }
                for i in 0..w.len() {
                    if r[i] == 0.0 {
                        prop_assert!(w[i] >= surface * (1.0 - 1e-9));
                    }
                }
            }
            for pair in r.windows(2) {
                prop_assert!(pair[0] >= pair[1]);
            }
        }

        #[test]
        fn capped_respects_caps(
            data in proptest::collection::vec((0.1f64..100.0, 0.0f64..50.0), 1..10),
            budget in 0.0f64..300.0,
            window in 1u32..20,
        ) {
            let avg: Vec<f64> = data.iter().map(|d| d.0).collect();
            let caps: Vec<f64> = data.iter().map(|d| d.1).collect();
            let a = capped_rate_adjust(&avg, &caps, budget, window).unwrap();
            prop_assert!(a.rounds <= caps.len());
            for (r, c) in a.rates.rates.iter().zip(&caps) {
                prop_assert!(*r >= 0.0 && *r <= *c);
            }
            prop_assert!(a.rates.total() <= budget * (1.0 + 1e-12) + 1e-12);
        }
    }
}
