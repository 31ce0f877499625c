//! Four-phase heuristic: greedy contiguous CUE allocation, CUE rate
//! adjustment, the same two steps for D2D pairs, repeated until the
//! assignment stops changing or `max_iterations` is reached.

use super::{avg_rates, cue_depths, d2d_depths, OpCounter, ScheduleError, ScheduleOutcome, SchedulerConfig};
use crate::model::{pf_utility, Allocation, NetworkState, Tier};
use crate::waterfill::{best_start, capped_rate_adjust, selection_order, Depth, WaterfillError};

type Pattern = (Vec<Option<usize>>, Vec<Option<usize>>);

pub fn phpfs_schedule(state: &NetworkState, config: &SchedulerConfig) -> Result<ScheduleOutcome, ScheduleError> {
    config.validate()?;
    state.validate()?;
    let k = state.num_subchannels();
    let (nc, nd) = (state.cues.len(), state.pairs.len());
    let (cue_avg, d2d_avg) = avg_rates(state);
    // (T-1)*avg orders users the same way as avg; at T = 1 the weight is
    // zero for everyone and the average alone decides.
    let cue_order = selection_order(&cue_avg);
    let d2d_order = selection_order(&d2d_avg);

    let mut ops = OpCounter::default();
    let mut history: Vec<Pattern> = Vec::new();
    let mut current = Allocation::empty(nc, nd, k);
    let mut last = None;

    let mut t = 1usize;
    while t <= config.max_iterations as usize && (t < 3 || history[t - 2] != history[t - 3]) {
        let mut alloc = Allocation::empty(nc, nd, k);

        // CUE allocation: interference from the D2D powers of the previous
        // iteration (none on the first pass).
        let mut cue_caps = vec![0.0; nc];
        let mut taken = vec![false; k];
        let mut calls = 0;
        for &i in &cue_order {
            let mut depths = cue_depths(state, i, &current.d2d_power);
            block_taken(&mut depths, &taken);
            calls += k;
            if let Some((block, powers, rate)) = allocate(&depths, state.cues[i].max_power, state.gains.bandwidth, config)? {
                taken[block.clone()].iter_mut().for_each(|x| *x = true);
                alloc.set_block(Tier::Cue, i, block, &powers);
                cue_caps[i] = rate;
            }
        }
        ops.cue_waterfill_calls.push(calls);
        let cue_adj = capped_rate_adjust(&cue_avg, &cue_caps, config.cue_rate_budget, config.window)?;
        ops.cue_adjust_rounds.push(cue_adj.rounds);

        // D2D allocation against this iteration's CUE powers.
        let mut d2d_caps = vec![0.0; nd];
        let mut taken = vec![false; k];
        let mut calls = 0;
        for &j in &d2d_order {
            let mut depths = d2d_depths(state, j, &alloc.cue_power);
            block_taken(&mut depths, &taken);
            calls += k;
            if let Some((block, powers, rate)) = allocate(&depths, state.pairs[j].max_power, state.gains.bandwidth, config)? {
                taken[block.clone()].iter_mut().for_each(|x| *x = true);
                alloc.set_block(Tier::D2d, j, block, &powers);
                d2d_caps[j] = rate;
            }
        }
        ops.d2d_waterfill_calls.push(calls);
        let d2d_adj = capped_rate_adjust(&d2d_avg, &d2d_caps, config.d2d_rate_budget, config.window)?;
        ops.d2d_adjust_rounds.push(d2d_adj.rounds);

        history.push(alloc.pattern());
        current = alloc;
        last = Some((cue_adj.rates, d2d_adj.rates));
        t += 1;
    }

    let (cue_rates, d2d_rates) = last.expect("at least one iteration runs");
    let utility = pf_utility(&cue_rates.rates, &d2d_rates.rates, &cue_avg, &d2d_avg, config.window)?;
    Ok(ScheduleOutcome {
        allocation: current,
        cue_rates,
        d2d_rates,
        utility,
        iterations_used: history.len() as u32,
        ops: config.instrument.then_some(ops),
    })
}

fn block_taken(depths: &mut [Depth], taken: &[bool]) {
    for (d, &t) in depths.iter_mut().zip(taken) {
        if t {
            *d = Depth::Blocked;
        }
    }
}

/// Best contiguous block for one user, or `None` when every start is blocked.
fn allocate(
    depths: &[Depth],
    max_power: f64,
    bandwidth: f64,
    config: &SchedulerConfig,
) -> Result<Option<(std::ops::Range<usize>, Vec<f64>, f64)>, ScheduleError> {
    match best_start(depths, max_power, bandwidth, config.waterfill_mode) {
        Ok(b) => Ok(Some((b.result.block, b.result.powers, b.result.rate))),
        Err(WaterfillError::NoFeasibleChannel) => Ok(None),
        Err(e) => Err(e.into()),
    }
}
