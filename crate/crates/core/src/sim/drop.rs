use std::f64::consts::PI;

use rand::Rng;

use super::{Layout, ScenarioConfig};
use crate::channel::dbm_to_watts;
use crate::model::{CueUser, D2dPair, Point};
use crate::rng::{self, tag};

#[derive(Debug, Clone, PartialEq)]
pub struct CellPopulation {
    pub cell: usize,
    pub cues: Vec<CueUser>,
    pub pairs: Vec<D2dPair>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub cells: Vec<CellPopulation>,
}

/// Drop `num_cues` CUEs and `num_pairs` D2D pairs uniformly in each active
/// cell. Each user draws from its own stream, so changing a count leaves the
/// positions of the other users unchanged.
pub fn drop_users(config: &ScenarioConfig, layout: &Layout) -> Population {
    let power = dbm_to_watts(config.ue_max_power_dbm);
    let cells = (0..config.num_cells())
        .map(|c| {
            let cues = (0..config.num_cues)
                .map(|i| {
                    let mut r = rng::stream(config.seed, &[tag::CUE_DROP, c as u64, i as u64]);
                    CueUser {
                        id: i,
                        position: layout.sample_in_cell(c, &mut r),
                        max_power: power,
                        avg_rate: config.initial_avg_rate_bps,
                    }
                })
                .collect();
            let pairs = (0..config.num_pairs)
                .map(|j| {
                    let mut r = rng::stream(config.seed, &[tag::PAIR_DROP, c as u64, j as u64]);
                    let (tx, rx) = drop_pair(layout, c, config.d2d_min_distance_m, config.d2d_max_distance_m, &mut r);
                    D2dPair { id: j, tx_position: tx, rx_position: rx, max_power: power, avg_rate: config.initial_avg_rate_bps }
                })
                .collect();
            CellPopulation { cell: c, cues, pairs }
        })
        .collect();
    Population { cells }
}

fn drop_pair<R: Rng + ?Sized>(layout: &Layout, cell: usize, min: f64, max: f64, r: &mut R) -> (Point, Point) {
    loop {
        let tx = layout.sample_in_cell(cell, r);
        for _ in 0..64 {
            let d = r.random_range(min * min..=max * max).sqrt();
            let a = r.random_range(0.0..2.0 * PI);
            let rx = tx.offset(d * a.cos(), d * a.sin());
            if layout.contains(cell, rx) {
                return (tx, rx);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{build_layout, LayoutMode};

    #[test]
    fn positions_and_link_lengths() {
        let cfg = ScenarioConfig { num_cues: 20, num_pairs: 20, layout: LayoutMode::WrapAround, ..Default::default() };
        let l = build_layout(cfg.inter_site_distance_m).unwrap();
        let pop = drop_users(&cfg, &l);
        assert_eq!(pop.cells.len(), 19);
        for cp in &pop.cells {
            for u in &cp.cues {
                assert!(l.contains(cp.cell, u.position));
                assert!((u.max_power - 0.199_526).abs() < 1e-6);
            }
            for p in &cp.pairs {
                assert!(l.contains(cp.cell, p.tx_position) && l.contains(cp.cell, p.rx_position));
                let d = p.tx_position.distance(&p.rx_position);
                assert!((3.0..=50.0).contains(&d), "{d}");
            }
        }
    }

    #[test]
    fn adding_cues_keeps_existing_users() {
        let l = build_layout(500.0).unwrap();
        let a = drop_users(&ScenarioConfig { num_cues: 3, ..Default::default() }, &l);
        let b = drop_users(&ScenarioConfig { num_cues: 9, ..Default::default() }, &l);
        assert_eq!(a.cells[0].cues[..], b.cells[0].cues[..3]);
        assert_eq!(a.cells[0].pairs, b.cells[0].pairs);
    }

    #[test]
    fn drops_are_uniform_over_the_cell() {
        let l = build_layout(500.0).unwrap();
        // hex-norm squared is uniform on [0,1]; 60-degree sectors have equal area
        let mut rings = [0f64; 10];
        let mut sectors = [0f64; 6];
        let n = 10_000;
        for seed in 0..n {
            let cfg = ScenarioConfig { seed, num_cues: 1, num_pairs: 0, ..Default::default() };
            let p = drop_users(&cfg, &l).cells[0].cues[0].position;
            let h = l.hex_norm(0, p);
            rings[((h * h * 10.0) as usize).min(9)] += 1.0;
            let a = p.y.atan2(p.x).rem_euclid(2.0 * PI);
            sectors[((a / (PI / 3.0)) as usize).min(5)] += 1.0;
        }
        let chi2 = |obs: &[f64]| {
            let e = n as f64 / obs.len() as f64;
            obs.iter().map(|o| (o - e).powi(2) / e).sum::<f64>()
        };
        // 1% critical values for 9 and 5 degrees of freedom
        assert!(chi2(&rings) < 21.67, "{rings:?}");
        assert!(chi2(&sectors) < 15.09, "{sectors:?}");
    }
}
