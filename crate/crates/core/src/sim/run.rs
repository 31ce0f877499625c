use crate::channel::{db_to_linear, linear_to_db, FadingMode, FadingState, LinkKind, McsTable, ShadowingField};
use crate::model::{update_avg_rates, validate_allocation, GainTensor, NetworkState, Point, Tier};
use crate::rng::{self, tag};
use crate::scheduler::{optimal_pattern_count, optimal_pf, phpfs_schedule, ScheduleError, ScheduleOutcome, SchedulerKind};

use super::{
    build_layout, drop_users, step_mobility, Layout, LayoutMode, MetricSeries, Population, ScenarioConfig, SimError,
    TtiRecord, Walker, TTI_SECONDS,
};

/// What an observer sees for each cell in each TTI.
pub struct TtiContext<'a> {
    pub tti: u64,
    pub cell: usize,
    pub state: &'a NetworkState,
    pub outcome: &'a ScheduleOutcome,
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<MetricSeries, SimError> {
    run_scenario_with(config, |_| Ok(()))
}

/// Run the scenario, handing every scheduled cell-TTI to `observe`.
pub fn run_scenario_with<F>(config: &ScenarioConfig, mut observe: F) -> Result<MetricSeries, SimError>
where
    F: FnMut(&TtiContext) -> Result<(), SimError>,
{
    config.validate()?;
    if config.scheduler == SchedulerKind::Optimal {
        let patterns = optimal_pattern_count(config.num_cues, config.num_pairs, config.num_subchannels);
        if patterns > config.scheduling.max_patterns {
            return Err(ScheduleError::TooLarge { patterns, limit: config.scheduling.max_patterns }.into());
        }
    }
    let mut sim = Sim::new(config)?;
    let mut records = Vec::with_capacity(config.ttis);
    for t in 0..config.ttis as u64 {
        if t > 0 && config.mobility {
            sim.move_users();
        }
        records.push(sim.tti(t, &mut observe)?);
    }
    Ok(MetricSeries {
        scenario: config.name.clone(),
        seed: config.seed,
        num_cues: config.num_cues * config.num_cells(),
        num_pairs: config.num_pairs * config.num_cells(),
        records,
    })
}

struct Sim<'c> {
    config: &'c ScenarioConfig,
    layout: Layout,
    pop: Population,
    mcs: McsTable,
    fading: FadingMode,
    bs_shadow: Vec<ShadowingField>,
    rx_shadow: Vec<Vec<ShadowingField>>,
    cue_walkers: Vec<Vec<Walker>>,
    pair_walkers: Vec<Vec<Walker>>,
    /// Powers each cell put on air in the previous TTI: (cue, d2d).
    prev_power: Vec<(Vec<Vec<f64>>, Vec<Vec<f64>>)>,
}

impl<'c> Sim<'c> {
    fn new(config: &'c ScenarioConfig) -> Result<Self, SimError> {
        let layout = build_layout(config.inter_site_distance_m)?;
        let pop = drop_users(config, &layout);
        let mcs = match &config.mcs_table {
            Some(path) => McsTable::from_file(path)?,
            None => McsTable::default_cqi(),
        };
        let ch = &config.channel;
        let (seed, cells, k) = (config.seed, config.num_cells(), config.num_subchannels);
        let l = ch.decorrelation_length_m;
        let bs_shadow = (0..cells)
            .map(|c| ShadowingField::new(seed, &[tag::SHADOW_BS, c as u64], ch.cellular_shadowing_db, l))
            .collect();
        let rx_shadow = (0..cells)
            .map(|c| {
                (0..config.num_pairs)
                    .map(|j| ShadowingField::new(seed, &[tag::SHADOW_D2D_RX, c as u64, j as u64], ch.d2d_shadowing_db, l))
                    .collect()
            })
            .collect();
        let walkers = |t: u64, n: usize| -> Vec<Vec<Walker>> {
            (0..cells)
                .map(|c| (0..n).map(|i| Walker::new(rng::stream(seed, &[t, c as u64, i as u64]))).collect())
                .collect()
        };
        Ok(Self {
            config,
            fading: ch.fading.resolve(k),
            bs_shadow,
            rx_shadow,
            cue_walkers: walkers(tag::CUE_MOBILITY, config.num_cues),
            pair_walkers: walkers(tag::PAIR_MOBILITY, config.num_pairs),
            prev_power: vec![(vec![vec![0.0; k]; config.num_cues], vec![vec![0.0; k]; config.num_pairs]); cells],
            layout,
            pop,
            mcs,
        })
    }

    fn move_users(&mut self) {
        let layout = &self.layout;
        for (cp, (cw, pw)) in self.pop.cells.iter_mut().zip(self.cue_walkers.iter_mut().zip(&mut self.pair_walkers)) {
            let c = cp.cell;
            for (u, w) in cp.cues.iter_mut().zip(cw) {
                u.position = step_mobility(w, u.position, TTI_SECONDS, |p| layout.contains(c, p));
            }
            for (p, w) in cp.pairs.iter_mut().zip(pw) {
                let (tx, rx) = (p.tx_position, p.rx_position);
                let (dx, dy) = w.step(TTI_SECONDS, |dx, dy| {
                    layout.contains(c, tx.offset(dx, dy)) && layout.contains(c, rx.offset(dx, dy))
                });
                p.tx_position = tx.offset(dx, dy);
                p.rx_position = rx.offset(dx, dy);
            }
        }
    }

    /// Per-subchannel gains of one link including shadowing and fast fading.
    fn link(&self, tx: Point, rx: Point, kind: LinkKind, shadow: &ShadowingField, tti: u64, key: &[u64]) -> Vec<f64> {
        let ch = &self.config.channel;
        let base = db_to_linear(ch.large_scale_gain_db(kind, tx.distance(&rx), shadow.value_at(tx)));
        let f = FadingState::for_link(self.config.seed, tti, key, self.fading, self.config.num_subchannels);
        f.powers().iter().map(|p| base * p).collect()
    }

    /// Interference from other cells' previous-TTI powers at `rx` in `cell`,
    /// over path loss alone.
    fn external(&self, cell: usize, rx: Point, kind: LinkKind) -> Vec<f64> {
        let k = self.config.num_subchannels;
        let mut out = vec![0.0; k];
        if self.config.layout != LayoutMode::WrapAround {
            return out;
        }
        let ch = &self.config.channel;
        for (other, cp) in self.pop.cells.iter().enumerate() {
            if other == cell {
                continue;
            }
            let (cue_p, d2d_p) = &self.prev_power[other];
            let txs = cp.cues.iter().map(|u| u.position).zip(cue_p).chain(cp.pairs.iter().map(|p| p.tx_position).zip(d2d_p));
            for (tx, powers) in txs {
                if powers.iter().all(|&p| p == 0.0) {
                    continue;
                }
                let g = db_to_linear(ch.large_scale_gain_db(kind, self.layout.wrap_distance(tx, rx), 0.0));
                for (o, p) in out.iter_mut().zip(powers) {
                    *o += p * g;
                }
            }
        }
        out
    }

    fn cell_state(&self, cell: usize, tti: u64) -> Result<NetworkState, SimError> {
        let cfg = self.config;
        let ch = &cfg.channel;
        let cp = &self.pop.cells[cell];
        let bs = self.layout.centers[cell];
        let (nc, nd, k) = (cp.cues.len(), cp.pairs.len(), cfg.num_subchannels);
        let c = cell as u64;
        let mut g = GainTensor::zeros(nc, nd, k, ch.noise_density_w_hz(), ch.subchannel_bandwidth_hz);
        for (i, u) in cp.cues.iter().enumerate() {
            g.cue_to_bs[i] = self.link(u.position, bs, LinkKind::Cellular, &self.bs_shadow[cell], tti, &[0, c, i as u64]);
            for (j, p) in cp.pairs.iter().enumerate() {
                g.cue_to_d2d_rx[i][j] =
                    self.link(u.position, p.rx_position, LinkKind::D2d, &self.rx_shadow[cell][j], tti, &[3, c, i as u64, j as u64]);
            }
        }
        for (j, p) in cp.pairs.iter().enumerate() {
            g.d2d_to_bs[j] = self.link(p.tx_position, bs, LinkKind::Cellular, &self.bs_shadow[cell], tti, &[1, c, j as u64]);
            g.d2d_link[j] =
                self.link(p.tx_position, p.rx_position, LinkKind::D2d, &self.rx_shadow[cell][j], tti, &[2, c, j as u64]);
            g.external_at_d2d_rx[j] = self.external(cell, p.rx_position, LinkKind::D2d);
        }
        g.external_at_bs = self.external(cell, bs, LinkKind::Cellular);
        Ok(NetworkState::new(cp.cues.clone(), cp.pairs.clone(), g)?)
    }

    /// Rates the receivers can actually decode, given full cross-tier
    /// interference and the MCS table, capped by the scheduled rates.
    fn delivered(&self, state: &NetworkState, out: &ScheduleOutcome) -> (Vec<f64>, Vec<f64>) {
        let g = &state.gains;
        let a = &out.allocation;
        let noise = g.noise_power();
        let quantized = |sinr: f64| g.bandwidth * self.mcs.efficiency(linear_to_db(sinr));
        let cue = (0..state.cues.len())
            .map(|i| {
                let achievable: f64 = a
                    .block(Tier::Cue, i)
                    .into_iter()
                    .flatten()
                    .map(|k| {
                        let interf = g.external_at_bs[k]
                            + (0..state.pairs.len()).map(|j| a.d2d_power[j][k] * g.d2d_to_bs[j][k]).sum::<f64>();
                        quantized(a.cue_power[i][k] * g.cue_to_bs[i][k] / (noise + interf))
                    })
                    .sum();
                achievable.min(out.cue_rates.rates[i])
            })
            .collect();
        let d2d = (0..state.pairs.len())
            .map(|j| {
                let achievable: f64 = a
                    .block(Tier::D2d, j)
                    .into_iter()
                    .flatten()
                    .map(|k| {
                        let interf = g.external_at_d2d_rx[j][k]
                            + (0..state.cues.len()).map(|i| a.cue_power[i][k] * g.cue_to_d2d_rx[i][j][k]).sum::<f64>();
                        quantized(a.d2d_power[j][k] * g.d2d_link[j][k] / (noise + interf))
                    })
                    .sum();
                achievable.min(out.d2d_rates.rates[j])
            })
            .collect();
        (cue, d2d)
    }

    fn tti<F>(&mut self, t: u64, observe: &mut F) -> Result<TtiRecord, SimError>
    where
        F: FnMut(&TtiContext) -> Result<(), SimError>,
    {
        let cfg = self.config;
        let mut rec = TtiRecord {
            tti: t,
            cue_rates: Vec::new(),
            d2d_rates: Vec::new(),
            cue_avg: Vec::new(),
            d2d_avg: Vec::new(),
            utility: 0.0,
            wf_calls: 0,
            iterations_used: 0,
            violations: 0,
        };
        let mut powers = Vec::with_capacity(self.pop.cells.len());
        let mut new_avgs = Vec::with_capacity(self.pop.cells.len());
        for cell in 0..self.pop.cells.len() {
            let state = self.cell_state(cell, t)?;
            let out = match cfg.scheduler {
                SchedulerKind::Phpfs => phpfs_schedule(&state, &cfg.scheduling)?,
                SchedulerKind::Optimal => optimal_pf(&state, &cfg.scheduling)?,
            };
            observe(&TtiContext { tti: t, cell, state: &state, outcome: &out })?;
            rec.violations += validate_allocation(&out.allocation, &state)?.len();
            rec.utility += out.utility;
            rec.iterations_used += out.iterations_used;
            rec.wf_calls += out.ops.as_ref().map_or(0, |o| o.total_waterfill_calls());
            let (cue, d2d) = self.delivered(&state, &out);
            let floor = |v: Vec<f64>| v.into_iter().map(|x| x.max(cfg.avg_rate_floor_bps)).collect::<Vec<_>>();
            let cue_avg: Vec<f64> = state.cues.iter().map(|u| u.avg_rate).collect();
            let d2d_avg: Vec<f64> = state.pairs.iter().map(|p| p.avg_rate).collect();
            let cue_avg = floor(update_avg_rates(&cue_avg, &cue, cfg.scheduling.window)?);
            let d2d_avg = floor(update_avg_rates(&d2d_avg, &d2d, cfg.scheduling.window)?);
            rec.cue_rates.extend(&cue);
            rec.d2d_rates.extend(&d2d);
            rec.cue_avg.extend(&cue_avg);
            rec.d2d_avg.extend(&d2d_avg);
            new_avgs.push((cue_avg, d2d_avg));
            powers.push((out.allocation.cue_power, out.allocation.d2d_power));
        }
        for (cp, (ca, da)) in self.pop.cells.iter_mut().zip(new_avgs) {
            cp.cues.iter_mut().zip(ca).for_each(|(u, a)| u.avg_rate = a);
            cp.pairs.iter_mut().zip(da).for_each(|(p, a)| p.avg_rate = a);
        }
        self.prev_power = powers;
        Ok(rec)
    }
}
