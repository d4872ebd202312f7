//! One scheduling interval as an immutable optimization instance.
//!
//! Indices are 0-based throughout: RU `n` in `0..N`, group `m` in `0..M`,
//! scheduled user `k` in `0..K`. Rates and capacities are in bps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{outer, CMatrix, CVector};
use crate::scenario::{ChannelState, MulticastGroup, RequestRealization, ScenarioConfig};

pub const INSTANCE_FORMAT_VERSION: u32 = 1;

/// Diagonal 0/1 selector of the L antenna coordinates of one RU inside the
/// aggregated `N * L` vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionMask {
    pub ru: usize,
    pub diagonal: Vec<bool>,
}

impl SelectionMask {
    pub fn matrix(&self) -> CMatrix {
        let d = self.diagonal.len();
        CMatrix::from_fn(d, d, |i, j| {
            if i == j && self.diagonal[i] {
                1.0.into()
            } else {
                0.0.into()
            }
        })
    }

    /// `tr(V J_n)`.
    pub fn trace_with(&self, v: &CMatrix) -> f64 {
        self.diagonal
            .iter()
            .enumerate()
            .filter(|(_, &on)| on)
            .map(|(i, _)| v[(i, i)].re)
            .sum()
    }
}

pub fn selection_mask(ru: usize, num_rus: usize, antennas: usize) -> Result<SelectionMask> {
    if ru >= num_rus {
        return Err(Error::InvalidArgument(format!("RU {ru} out of range 0..{num_rus}")));
    }
    let diagonal = (0..num_rus * antennas).map(|i| i / antennas == ru).collect();
    Ok(SelectionMask { ru, diagonal })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub num_rus: usize,
    pub antennas_per_ru: usize,
    pub bandwidth_hz: f64,
    pub channels: Vec<CVector>,
    /// `H_k = h_k h_k^H`.
    pub channel_outer: Vec<CMatrix>,
    pub groups: Vec<MulticastGroup>,
    pub user_group: Vec<usize>,
    /// Linear SINR target per group.
    pub sinr_targets: Vec<f64>,
    /// Noise power per user, Watt.
    pub noise_powers: Vec<f64>,
    /// `rates[m][n] = (1 - c[m][n]) * B * log2(1 + Gamma_m)`, bps.
    pub rates: Vec<Vec<f64>>,
    pub capacities: Vec<f64>,
}

impl Instance {
    /// Builds and validates an instance from raw parts. Cache flags are taken
    /// from `groups[m].cached` at every RU.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        num_rus: usize,
        antennas_per_ru: usize,
        bandwidth_hz: f64,
        channels: Vec<CVector>,
        groups: Vec<MulticastGroup>,
        sinr_targets: Vec<f64>,
        noise_powers: Vec<f64>,
        capacities: Vec<f64>,
    ) -> Result<Self> {
        let fail = |m: String| Err(Error::Instance(m));
        let dim = num_rus * antennas_per_ru;
        if dim == 0 {
            return fail("empty antenna set".into());
        }
        if groups.is_empty() {
            return fail("no multicast groups".into());
        }
        if sinr_targets.len() != groups.len() {
            return fail("one SINR target per group required".into());
        }
        if sinr_targets.iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
            return fail("SINR targets must be positive and finite".into());
        }
        if noise_powers.len() != channels.len() {
            return fail("one noise power per user required".into());
        }
        if noise_powers.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return fail("noise powers must be positive and finite".into());
        }
        if capacities.len() != num_rus || capacities.iter().any(|c| !(*c >= 0.0)) {
            return fail("one non-negative capacity per RU required".into());
        }
        if channels.iter().any(|h| h.len() != dim) {
            return fail(format!("channels must have length {dim}"));
        }
        if channels.iter().any(|h| h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
            return fail("non-finite channel coefficient".into());
        }
        let mut user_group = vec![usize::MAX; channels.len()];
        for (m, g) in groups.iter().enumerate() {
            if g.users.is_empty() {
                return fail(format!("group {m} has no users"));
            }
            for &k in &g.users {
                if k >= channels.len() {
                    return fail(format!("group {m} references unknown user {k}"));
                }
                if user_group[k] != usize::MAX {
                    return fail(format!("user {k} is in more than one group"));
                }
                user_group[k] = m;
            }
        }
        let rates = groups
            .iter()
            .zip(&sinr_targets)
            .map(|(g, gamma)| {
                let r = if g.cached { 0.0 } else { bandwidth_hz * (1.0 + gamma).log2() };
                vec![r; num_rus]
            })
            .collect();
        let channel_outer = channels.iter().map(outer).collect();
        Ok(Instance {
            num_rus,
            antennas_per_ru,
            bandwidth_hz,
            channels,
            channel_outer,
            groups,
            user_group,
            sinr_targets,
            noise_powers,
            rates,
            capacities,
        })
    }

    pub fn dim(&self) -> usize {
        self.num_rus * self.antennas_per_ru
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn num_users(&self) -> usize {
        self.channels.len()
    }

    /// Users that belong to some group.
    pub fn served_users(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_users()).filter(|&k| self.user_group[k] != usize::MAX)
    }

    pub fn mask(&self, ru: usize) -> SelectionMask {
        selection_mask(ru, self.num_rus, self.antennas_per_ru).expect("ru in range")
    }

    /// `tr(V J_n)` from the diagonal of `V`.
    pub fn ru_power(&self, v: &CMatrix, ru: usize) -> f64 {
        let l = self.antennas_per_ru;
        (ru * l..(ru + 1) * l).map(|i| v[(i, i)].re).sum()
    }

    pub fn with_noise_powers(mut self, noise: Vec<f64>) -> Result<Self> {
        if noise.len() != self.num_users() || noise.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::Instance("invalid noise override".into()));
        }
        self.noise_powers = noise;
        Ok(self)
    }

    pub fn with_capacities(mut self, caps: Vec<f64>) -> Result<Self> {
        if caps.len() != self.num_rus || caps.iter().any(|c| !(*c >= 0.0)) {
            return Err(Error::Instance("invalid capacity override".into()));
        }
        self.capacities = caps;
        Ok(self)
    }

    /// Backhaul load of each RU for a cluster pattern, bps.
    pub fn loads(&self, pattern: &[Vec<bool>]) -> Vec<f64> {
        (0..self.num_rus)
            .map(|n| {
                (0..self.num_groups())
                    .filter(|&m| pattern[m][n])
                    .map(|m| self.rates[m][n])
                    .sum()
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Envelope<'a> {
            format_version: u32,
            instance: &'a Instance,
        }
        serde_json::to_string_pretty(&Envelope { format_version: INSTANCE_FORMAT_VERSION, instance: self })
            .expect("instance is always serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Envelope {
            format_version: u32,
            instance: Instance,
        }
        let e: Envelope = serde_json::from_str(text)?;
        if e.format_version != INSTANCE_FORMAT_VERSION {
            return Err(Error::Parse(format!("unsupported instance format_version {}", e.format_version)));
        }
        Ok(e.instance)
    }
}

/// Assembles the instance of one scheduling interval: identical noise power
/// `noise_psd * B` for every user, per-file SINR targets, and rates zeroed for
/// cached groups.
pub fn assemble_instance(
    channels: &ChannelState,
    requests: &RequestRealization,
    config: &ScenarioConfig,
) -> Result<Instance> {
    if requests.files.len() != channels.num_users() {
        return Err(Error::Instance(format!(
            "{} requests for {} users",
            requests.files.len(),
            channels.num_users()
        )));
    }
    let targets = requests.groups.iter().map(|g| config.sinr_target_linear(g.file)).collect();
    Instance::from_parts(
        channels.num_rus,
        channels.antennas_per_ru,
        config.bandwidth_hz,
        channels.channels.clone(),
        requests.groups.clone(),
        targets,
        vec![config.noise_power_w(); channels.num_users()],
        config.capacities()?,
    )
}
