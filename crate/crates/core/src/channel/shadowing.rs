//! Spatially correlated log-normal shadowing.
//!
//! The field is a sum of random cosines whose spatial frequencies are drawn
//! from a bivariate Cauchy law with scale `1 / L`. Its characteristic
//! function is `exp(-|x| / L)`, so over the ensemble of seeds the field has
//! exactly the exponential autocorrelation `sigma^2 exp(-d / L)`, and any
//! point can be queried without a grid.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::model::Point;
use crate::rng;

pub const DEFAULT_COMPONENTS: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct ShadowingField {
    std_db: f64,
    /// (omega_x, omega_y, phase)
    components: Vec<(f64, f64, f64)>,
}

impl ShadowingField {
    /// Field for `seed` and `key`; `std_db == 0` gives a field that is zero everywhere.
    pub fn new(seed: u64, key: &[u64], std_db: f64, decorrelation_length: f64) -> Self {
        Self::with_components(seed, key, std_db, decorrelation_length, DEFAULT_COMPONENTS)
    }

    pub fn with_components(seed: u64, key: &[u64], std_db: f64, decorrelation_length: f64, n: usize) -> Self {
        assert!(decorrelation_length > 0.0, "decorrelation length must be positive");
        assert!(std_db >= 0.0, "shadowing std must be >= 0");
        let mut r = rng::stream(seed, key);
        let components = (0..n)
            .map(|_| {
                let zx: f64 = r.sample(StandardNormal);
                let zy: f64 = r.sample(StandardNormal);
                let g: f64 = r.sample::<f64, _>(StandardNormal).abs().max(1e-300);
                let phase = r.random::<f64>() * 2.0 * PI;
                (zx / (decorrelation_length * g), zy / (decorrelation_length * g), phase)
            })
            .collect();
        Self { std_db, components }
    }

    /// Shadowing in dB at `p`.
    pub fn value_at(&self, p: Point) -> f64 {
        if self.std_db == 0.0 || self.components.is_empty() {
            return 0.0;
        }
        let amp = self.std_db * (2.0 / self.components.len() as f64).sqrt();
        amp * self.components.iter().map(|&(wx, wy, ph)| (wx * p.x + wy * p.y + ph).cos()).sum::<f64>()
    }
}
