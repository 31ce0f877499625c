//! Exhaustive proportional-fair search over contiguous per-tier blocks.
//!
//! Every CUE and every D2D pair independently gets either nothing or one
//! contiguous block, with blocks of the same tier disjoint. Powers inside a
//! block come from adjacent water-filling on that block alone. Interference
//! is resolved in one sweep in the heuristic's phase order: CUE powers are
//! set without D2D interference, then D2D powers see the CUE powers.

use std::ops::Range;

use super::{avg_rates, cue_depths, d2d_depths, OpCounter, ScheduleError, ScheduleOutcome, SchedulerConfig};
use crate::model::{pf_utility, Allocation, NetworkState, RateVector, Tier};
use crate::waterfill::{adjacent_waterfill_with_mode, capped_rate_adjust, Depth, StairProfile, WaterfillError};

/// Number of ways to give each of `users` users either no subchannel or one
/// contiguous block of `k` subchannels, blocks pairwise disjoint.
///
/// Picking `m` disjoint non-empty intervals in `1..=k` is `C(k+m, 2m)`; the
/// `m` intervals then go to `users!/(users-m)!` ordered user choices.
pub fn block_pattern_count(users: usize, k: usize) -> f64 {
    (0..=users.min(k))
        .map(|m| {
            let ordered: f64 = (0..m).map(|i| (users - i) as f64).product();
            ordered * binomial(k + m, 2 * m)
        })
        .sum()
}

/// Joint pattern count for both tiers.
pub fn optimal_pattern_count(num_cues: usize, num_pairs: usize, k: usize) -> f64 {
    block_pattern_count(num_cues, k) * block_pattern_count(num_pairs, k)
}

fn binomial(n: usize, r: usize) -> f64 {
    if r > n {
        return 0.0;
    }
    let r = r.min(n - r);
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// All contiguous blocks in enumeration order (start ascending, then end).
fn all_blocks(k: usize) -> Vec<Range<usize>> {
    (0..k).flat_map(|s| (s + 1..=k).map(move |e| s..e)).collect()
}

/// Tier patterns as per-user block indices (`None` = no block), in the
/// order "no block" first, then blocks in [`all_blocks`] order.
fn tier_patterns(users: usize, blocks: &[Range<usize>]) -> Vec<Vec<Option<usize>>> {
    fn rec(
        u: usize,
        users: usize,
        blocks: &[Range<usize>],
        used: u64,
        cur: &mut Vec<Option<usize>>,
        out: &mut Vec<Vec<Option<usize>>>,
    ) {
        if u == users {
            out.push(cur.clone());
            return;
        }
        cur.push(None);
        rec(u + 1, users, blocks, used, cur, out);
        cur.pop();
        for (bi, b) in blocks.iter().enumerate() {
            let mask = b.clone().fold(0u64, |m, s| m | (1 << s));
            if used & mask == 0 {
                cur.push(Some(bi));
                rec(u + 1, users, blocks, used | mask, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(0, users, blocks, 0, &mut Vec::with_capacity(users), &mut out);
    out
}

/// Water-filling restricted to `block`; stairs outside it are blocked.
fn fill_on_block(
    depths: &[Depth],
    block: &Range<usize>,
    budget: f64,
    bandwidth: f64,
    config: &SchedulerConfig,
) -> Result<Option<(Range<usize>, Vec<f64>, f64)>, ScheduleError> {
    let restricted = depths
        .iter()
        .enumerate()
        .map(|(k, &d)| if block.contains(&k) { d } else { Depth::Blocked })
        .collect();
    let profile = StairProfile { depths: restricted, budget, start: block.start, bandwidth };
    match adjacent_waterfill_with_mode(&profile, config.waterfill_mode) {
        Ok(r) => Ok(Some((r.block, r.powers, r.rate))),
        Err(WaterfillError::NoFeasibleChannel) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

type Filled = Option<(Range<usize>, Vec<f64>, f64)>;

pub fn optimal_pf(state: &NetworkState, config: &SchedulerConfig) -> Result<ScheduleOutcome, ScheduleError> {
    config.validate()?;
    state.validate()?;
    let k = state.num_subchannels();
    let (nc, nd) = (state.cues.len(), state.pairs.len());
    let patterns = optimal_pattern_count(nc, nd, k);
    if patterns > config.max_patterns || k > 63 {
        return Err(ScheduleError::TooLarge { patterns, limit: config.max_patterns });
    }
    let (cue_avg, d2d_avg) = avg_rates(state);
    let bw = state.gains.bandwidth;
    let blocks = all_blocks(k);
    let cue_patterns = tier_patterns(nc, &blocks);
    let d2d_patterns = tier_patterns(nd, &blocks);
    let mut ops = OpCounter::default();

    // CUE fills never see D2D interference in the single sweep, so they
    // depend only on (user, block).
    let silent = vec![vec![0.0; k]; nd];
    let mut cue_fill: Vec<Vec<Filled>> = Vec::with_capacity(nc);
    for (i, cue) in state.cues.iter().enumerate() {
        let depths = cue_depths(state, i, &silent);
        let row = blocks
            .iter()
            .map(|b| fill_on_block(&depths, b, cue.max_power, bw, config))
            .collect::<Result<Vec<_>, _>>()?;
        ops.search_waterfill_calls += blocks.len() as u64;
        cue_fill.push(row);
    }

    struct Best {
        utility: f64,
        cue: usize,
        d2d: usize,
        cue_rates: RateVector,
        d2d_rates: RateVector,
        d2d_fill: Vec<Vec<Filled>>,
    }
    let mut best: Option<Best> = None;

    for (ci, cp) in cue_patterns.iter().enumerate() {
        let mut cue_power = vec![vec![0.0; k]; nc];
        let mut cue_caps = vec![0.0; nc];
        for (i, choice) in cp.iter().enumerate() {
            if let Some(Some((_, powers, rate))) = choice.map(|bi| &cue_fill[i][bi]) {
                cue_power[i].copy_from_slice(powers);
                cue_caps[i] = *rate;
            }
        }
        let cue_adj = capped_rate_adjust(&cue_avg, &cue_caps, config.cue_rate_budget, config.window)?;
        let cue_utility = pf_utility(&cue_adj.rates.rates, &[], &cue_avg, &[], config.window)?;

        let mut d2d_fill: Vec<Vec<Filled>> = Vec::with_capacity(nd);
        for (j, pair) in state.pairs.iter().enumerate() {
            let depths = d2d_depths(state, j, &cue_power);
            let row = blocks
                .iter()
                .map(|b| fill_on_block(&depths, b, pair.max_power, bw, config))
                .collect::<Result<Vec<_>, _>>()?;
            ops.search_waterfill_calls += blocks.len() as u64;
            d2d_fill.push(row);
        }

        for (di, dp) in d2d_patterns.iter().enumerate() {
            let mut d2d_caps = vec![0.0; nd];
            for (j, choice) in dp.iter().enumerate() {
                if let Some(Some((_, _, rate))) = choice.map(|bi| &d2d_fill[j][bi]) {
                    d2d_caps[j] = *rate;
                }
            }
            let d2d_adj = capped_rate_adjust(&d2d_avg, &d2d_caps, config.d2d_rate_budget, config.window)?;
            let d2d_utility = pf_utility(&[], &d2d_adj.rates.rates, &[], &d2d_avg, config.window)?;
            ops.patterns_evaluated += 1;
            let utility = cue_utility + d2d_utility;
            if best.as_ref().is_none_or(|b| utility > b.utility) {
                best = Some(Best {
                    utility,
                    cue: ci,
                    d2d: di,
                    cue_rates: cue_adj.rates.clone(),
                    d2d_rates: d2d_adj.rates,
                    d2d_fill: d2d_fill.clone(),
                });
            }
        }
    }

    let best = best.expect("the empty pattern is always enumerated");
    let mut allocation = Allocation::empty(nc, nd, k);
    for (i, choice) in cue_patterns[best.cue].iter().enumerate() {
        if let Some(Some((block, powers, _))) = choice.map(|bi| &cue_fill[i][bi]) {
            allocation.set_block(Tier::Cue, i, block.clone(), powers);
        }
    }
    for (j, choice) in d2d_patterns[best.d2d].iter().enumerate() {
        if let Some(Some((block, powers, _))) = choice.map(|bi| &best.d2d_fill[j][bi]) {
            allocation.set_block(Tier::D2d, j, block.clone(), powers);
        }
    }
    let utility = pf_utility(&best.cue_rates.rates, &best.d2d_rates.rates, &cue_avg, &d2d_avg, config.window)?;
    Ok(ScheduleOutcome {
        allocation,
        cue_rates: best.cue_rates,
        d2d_rates: best.d2d_rates,
        utility,
        iterations_used: 1,
        ops: config.instrument.then_some(ops),
    })
}
