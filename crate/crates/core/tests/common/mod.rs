#![allow(dead_code)]

use d2dsched::model::{CueUser, D2dPair, GainTensor, NetworkState, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random instance with log-uniform gains spanning a few decades.
pub fn random_state(seed: u64, nc: usize, nd: usize, k: usize) -> NetworkState {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut g = GainTensor::zeros(nc, nd, k, 1.0, 1.0);
    let draw = |r: &mut ChaCha8Rng, lo: f64, hi: f64| 10f64.powf(r.random_range(lo..hi));
    for row in g.cue_to_bs.iter_mut().chain(g.d2d_link.iter_mut()) {
        row.iter_mut().for_each(|x| *x = draw(&mut r, -1.0, 1.5));
    }
    for row in g.d2d_to_bs.iter_mut().chain(g.cue_to_d2d_rx.iter_mut().flatten()) {
        row.iter_mut().for_each(|x| *x = draw(&mut r, -3.0, -0.5));
    }
    let cues = (0..nc)
        .map(|i| CueUser {
            id: i,
            position: Point::new(i as f64, 0.0),
            max_power: r.random_range(0.5..4.0),
            avg_rate: r.random_range(0.2..5.0),
        })
        .collect();
    let pairs = (0..nd)
        .map(|j| D2dPair {
            id: j,
            tx_position: Point::new(j as f64, 10.0),
            rx_position: Point::new(j as f64, 20.0),
            max_power: r.random_range(0.5..4.0),
            avg_rate: r.random_range(0.2..5.0),
        })
        .collect();
    NetworkState::new(cues, pairs, g).unwrap()
}
