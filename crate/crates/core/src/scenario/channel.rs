use num_complex::Complex64;
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::topology::{distance, Point, Topology};
use super::ScenarioConfig;
use crate::linalg::CVector;
use crate::rng::{stream, Stream};

/// Distances below this are clamped (1 m).
pub const MIN_DISTANCE_KM: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserDrop {
    pub positions: Vec<Point>,
    /// Indices into `positions`, ascending.
    pub scheduled: Vec<usize>,
}

impl UserDrop {
    pub fn scheduled_positions(&self) -> Vec<Point> {
        self.scheduled.iter().map(|&i| self.positions[i]).collect()
    }
}

/// Aggregated channels of the scheduled users. Entry `n * L + l` of a user's
/// vector is the coefficient from antenna `l` of RU `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelState {
    pub num_rus: usize,
    pub antennas_per_ru: usize,
    pub channels: Vec<CVector>,
    pub distances_km: Vec<Vec<f64>>,
    pub shadowing_db: Vec<Vec<f64>>,
}

impl ChannelState {
    pub fn num_users(&self) -> usize {
        self.channels.len()
    }

    /// The L coefficients from RU `n` to user `k`.
    pub fn block(&self, k: usize, n: usize) -> Vec<Complex64> {
        let l = self.antennas_per_ru;
        self.channels[k].as_slice()[n * l..(n + 1) * l].to_vec()
    }
}

/// `PL(d) = intercept + slope * log10(d / km)` in dB, with the 1 m clamp.
pub fn path_loss_db(config: &ScenarioConfig, distance_km: f64) -> f64 {
    config.pathloss_intercept_db + config.pathloss_slope_db * distance_km.max(MIN_DISTANCE_KM).log10()
}

/// Drops `K_tot` users uniformly over the cell region and marks a uniformly
/// random subset of `K` of them as scheduled.
pub fn drop_users(topology: &Topology, config: &ScenarioConfig, seed: u64) -> UserDrop {
    let mut drops = stream(seed, Stream::Drops);
    let positions: Vec<Point> = (0..config.total_users)
        .map(|_| topology.cell_region.sample(&mut drops))
        .collect();
    let mut sched = stream(seed, Stream::Scheduling);
    let mut scheduled =
        index::sample(&mut sched, config.total_users, config.scheduled_users).into_vec();
    scheduled.sort_unstable();
    UserDrop { positions, scheduled }
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Path loss, log-normal shadowing per (user, RU) pair and unit-variance
/// Rayleigh fading per antenna, scaled by the transmit antenna gain.
pub fn sample_channels(
    topology: &Topology,
    users: &UserDrop,
    config: &ScenarioConfig,
    seed: u64,
) -> ChannelState {
    let n_ru = topology.ru_positions.len();
    let l = config.antennas_per_ru;
    let gain = 10f64.powf(config.tx_antenna_gain_dbi / 20.0);
    let mut shadow_rng = stream(seed, Stream::Shadowing);
    let mut fading_rng = stream(seed, Stream::Fading);

    let mut channels = Vec::with_capacity(users.scheduled.len());
    let mut distances = Vec::with_capacity(users.scheduled.len());
    let mut shadowing = Vec::with_capacity(users.scheduled.len());
    for p in users.scheduled_positions() {
        let mut h = CVector::zeros(n_ru * l);
        let mut d_row = Vec::with_capacity(n_ru);
        let mut s_row = Vec::with_capacity(n_ru);
        for (n, ru) in topology.ru_positions.iter().enumerate() {
            let d = distance(p, *ru).max(MIN_DISTANCE_KM);
            let x: f64 = if config.shadowing_enabled {
                let z: f64 = StandardNormal.sample(&mut shadow_rng);
                z * config.shadowing_sigma_db
            } else {
                0.0
            };
            let amplitude = gain * 10f64.powf(-(path_loss_db(config, d) + x) / 20.0);
            for a in 0..l {
                let g = if config.fading_enabled {
                    complex_gaussian(&mut fading_rng)
                } else {
                    Complex64::new(1.0, 0.0)
                };
                h[n * l + a] = g * amplitude;
            }
            d_row.push(d);
            s_row.push(x);
        }
        channels.push(h);
        distances.push(d_row);
        shadowing.push(s_row);
    }
    ChannelState {
        num_rus: n_ru,
        antennas_per_ru: l,
        channels,
        distances_km: distances,
        shadowing_db: shadowing,
    }
}
