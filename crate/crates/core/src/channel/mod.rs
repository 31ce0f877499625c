//! Radio channel: path loss, shadowing, fast fading, link rates and MCS lookup.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Point;
use crate::rng;

mod mcs;
mod shadowing;

pub use mcs::{sinr_to_efficiency, McsEntry, McsTable};
pub use shadowing::{ShadowingField, DEFAULT_COMPONENTS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("invalid channel config: {0}")]
    Config(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Io(String),
}

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Path loss in dB as a function of distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum PathLossModel {
    /// `intercept_db + slope_db * log10(d / 1 km)`
    LogDistance { intercept_db: f64, slope_db: f64 },
    /// Friis at the carrier frequency.
    FreeSpace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FadingMode {
    /// Flat for wide allocations (K >= 25), per-subchannel otherwise.
    #[default]
    Auto,
    /// One Rayleigh draw shared by all subchannels of a link.
    Flat,
    /// Independent Rayleigh draw per subchannel.
    Selective,
    /// No fast fading.
    None,
}

impl FadingMode {
    pub fn resolve(self, num_subchannels: usize) -> FadingMode {
        match self {
            FadingMode::Auto if num_subchannels >= 25 => FadingMode::Flat,
            FadingMode::Auto => FadingMode::Selective,
            m => m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    /// UE to eNB.
    Cellular,
    /// UE to UE.
    D2d,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    pub carrier_frequency_hz: f64,
    pub cellular_pathloss: PathLossModel,
    pub d2d_pathloss: PathLossModel,
    pub cellular_shadowing_db: f64,
    pub d2d_shadowing_db: f64,
    pub decorrelation_length_m: f64,
    pub fading: FadingMode,
    pub enb_antenna_gain_db: f64,
    pub ue_antenna_gain_db: f64,
    pub noise_density_dbm_hz: f64,
    pub noise_figure_db: f64,
    pub subchannel_bandwidth_hz: f64,
    /// Distances are clamped from below to this value.
    pub min_distance_m: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            carrier_frequency_hz: 2.0e9,
            cellular_pathloss: PathLossModel::LogDistance { intercept_db: 128.1, slope_db: 37.6 },
            d2d_pathloss: PathLossModel::LogDistance { intercept_db: 148.0, slope_db: 40.0 },
            cellular_shadowing_db: 8.0,
            d2d_shadowing_db: 6.0,
            decorrelation_length_m: 50.0,
            fading: FadingMode::Auto,
            enb_antenna_gain_db: 15.0,
            ue_antenna_gain_db: 4.0,
            noise_density_dbm_hz: -174.0,
            noise_figure_db: 5.0,
            subchannel_bandwidth_hz: 180e3,
            min_distance_m: 1.0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<(), ChannelError> {
        let positive = [
            ("carrier_frequency_hz", self.carrier_frequency_hz),
            ("decorrelation_length_m", self.decorrelation_length_m),
            ("subchannel_bandwidth_hz", self.subchannel_bandwidth_hz),
            ("min_distance_m", self.min_distance_m),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ChannelError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("cellular_shadowing_db", self.cellular_shadowing_db), ("d2d_shadowing_db", self.d2d_shadowing_db)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(ChannelError::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        for (name, v) in [
            ("enb_antenna_gain_db", self.enb_antenna_gain_db),
            ("ue_antenna_gain_db", self.ue_antenna_gain_db),
            ("noise_density_dbm_hz", self.noise_density_dbm_hz),
            ("noise_figure_db", self.noise_figure_db),
        ] {
            if !v.is_finite() {
                return Err(ChannelError::Config(format!("{name} must be finite")));
            }
        }
        for m in [self.cellular_pathloss, self.d2d_pathloss] {
            if let PathLossModel::LogDistance { intercept_db, slope_db } = m {
                if !intercept_db.is_finite() || !(slope_db > 0.0 && slope_db.is_finite()) {
                    return Err(ChannelError::Config("path loss needs a finite intercept and positive slope".into()));
                }
            }
        }
        Ok(())
    }

    /// Noise density in W/Hz including the receiver noise figure.
    pub fn noise_density_w_hz(&self) -> f64 {
        db_to_linear(self.noise_density_dbm_hz + self.noise_figure_db - 30.0)
    }

    pub fn shadowing_db(&self, kind: LinkKind) -> f64 {
        match kind {
            LinkKind::Cellular => self.cellular_shadowing_db,
            LinkKind::D2d => self.d2d_shadowing_db,
        }
    }

    pub fn rx_antenna_gain_db(&self, kind: LinkKind) -> f64 {
        match kind {
            LinkKind::Cellular => self.enb_antenna_gain_db,
            LinkKind::D2d => self.ue_antenna_gain_db,
        }
    }

    /// Path loss in dB over `distance_m` for the given link kind.
    pub fn pathloss_db(&self, kind: LinkKind, distance_m: f64) -> f64 {
        let d = distance_m.max(self.min_distance_m);
        let model = match kind {
            LinkKind::Cellular => self.cellular_pathloss,
            LinkKind::D2d => self.d2d_pathloss,
        };
        match model {
            PathLossModel::LogDistance { intercept_db, slope_db } => intercept_db + slope_db * (d / 1000.0).log10(),
            PathLossModel::FreeSpace => {
                20.0 * (4.0 * std::f64::consts::PI * d * self.carrier_frequency_hz / SPEED_OF_LIGHT).log10()
            }
        }
    }

    /// Large-scale gain in dB: antenna gain minus path loss minus shadowing.
    pub fn large_scale_gain_db(&self, kind: LinkKind, distance_m: f64, shadow_db: f64) -> f64 {
        self.rx_antenna_gain_db(kind) - self.pathloss_db(kind, distance_m) - shadow_db
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

/// Rayleigh power gains of one link over all subchannels.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingState {
    powers: Vec<f64>,
}

impl FadingState {
    pub fn unit(num_subchannels: usize) -> Self {
        Self { powers: vec![1.0; num_subchannels] }
    }

    pub fn draw<R: Rng + ?Sized>(mode: FadingMode, num_subchannels: usize, rng: &mut R) -> Self {
        let powers = match mode.resolve(num_subchannels) {
            FadingMode::None => vec![1.0; num_subchannels],
            FadingMode::Flat => vec![Exp1.sample(rng); num_subchannels],
            _ => (0..num_subchannels).map(|_| Exp1.sample(rng)).collect(),
        };
        Self { powers }
    }

    /// Draw for a link identified by `key` at scheduling instant `tti`.
    pub fn for_link(seed: u64, tti: u64, key: &[u64], mode: FadingMode, num_subchannels: usize) -> Self {
        let mut path = Vec::with_capacity(key.len() + 2);
        path.push(rng::tag::FADING);
        path.push(tti);
        path.extend_from_slice(key);
        Self::draw(mode, num_subchannels, &mut rng::stream(seed, &path))
    }

    pub fn power(&self, k: usize) -> f64 {
        self.powers[k]
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }
}

/// Linear power gain of the link `tx -> rx` on subchannel `k`. The shadowing
/// field belongs to the receiver and is sampled at the transmitter.
pub fn link_gain(
    tx: Point,
    rx: Point,
    k: usize,
    kind: LinkKind,
    params: &ChannelParams,
    shadow: &ShadowingField,
    fading: &FadingState,
) -> f64 {
    let db = params.large_scale_gain_db(kind, tx.distance(&rx), shadow.value_at(tx));
    db_to_linear(db) * fading.power(k)
}

/// Shannon rate in bits/s on one subchannel.
pub fn instantaneous_rate(power: f64, gain: f64, interference: f64, bandwidth: f64, noise_density: f64) -> f64 {
    let sinr = power * gain / (noise_density * bandwidth + interference);
    bandwidth * (1.0 + sinr).log2()
}
