//! Seeded random network realizations: RU layout, user drops, fading
//! channels, file requests and cache state.

mod channel;
mod config;
mod requests;
mod topology;

use serde::{Deserialize, Serialize};

pub use channel::{
    drop_users, path_loss_db, sample_channels, ChannelState, UserDrop, MIN_DISTANCE_KM,
};
pub use config::{
    db_to_linear, dbm_to_watt, watt_to_dbm, Capacities, ScenarioConfig, SinrOverride,
    CONFIG_SCHEMA_VERSION,
};
pub use requests::{
    sample_requests, sample_requests_conditioned, zipf_pmf, MulticastGroup, RequestRealization,
};
pub use topology::{build_topology, distance, CellRegion, Point, Topology};

use crate::error::Result;
use crate::rng::{stream, Stream};

pub const REALIZATION_FORMAT_VERSION: u32 = 1;

/// Rejection budget when conditioning on the number of requested cached files.
pub const MAX_CONDITIONING_ATTEMPTS: usize = 1_000_000;

/// Everything random about one scheduling interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    pub format_version: u32,
    pub seed: u64,
    pub topology: Topology,
    pub users: UserDrop,
    pub channels: ChannelState,
    pub requests: RequestRealization,
}

impl Realization {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("realization is always serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Realization = serde_json::from_str(text)?;
        if r.format_version != REALIZATION_FORMAT_VERSION {
            return Err(crate::Error::Parse(format!(
                "unsupported realization format_version {}",
                r.format_version
            )));
        }
        Ok(r)
    }
}

/// Draws a full realization. With `cached_requested` set, request draws are
/// rejection-sampled until exactly that many distinct cached files appear;
/// topology, drops and channels do not depend on it.
pub fn realize(
    config: &ScenarioConfig,
    seed: u64,
    cached_requested: Option<usize>,
) -> Result<Realization> {
    config.validate()?;
    let topology = build_topology(config)?;
    let users = drop_users(&topology, config, seed);
    let channels = sample_channels(&topology, &users, config, seed);
    let pmf = zipf_pmf(config.num_files, config.zipf_alpha)?;
    let mut rng = stream(seed, Stream::Requests);
    let requests = match cached_requested {
        None => sample_requests(&pmf, config.scheduled_users, config.cache_size, config.num_rus, &mut rng)?,
        Some(c) => sample_requests_conditioned(
            &pmf,
            config.scheduled_users,
            config.cache_size,
            config.num_rus,
            c,
            MAX_CONDITIONING_ATTEMPTS,
            &mut rng,
        )?,
    };
    Ok(Realization {
        format_version: REALIZATION_FORMAT_VERSION,
        seed,
        topology,
        users,
        channels,
        requests,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible_and_serializable() {
        let c = ScenarioConfig::default();
        let a = realize(&c, 42, None).unwrap();
        let b = realize(&c, 42, None).unwrap();
        assert_eq!(a, b);
        let back = Realization::from_json(&a.to_json()).unwrap();
        assert_eq!(a, back);
        assert_ne!(a, realize(&c, 43, None).unwrap());
    }

    #[test]
    fn conditioning_keeps_channels() {
        let c = ScenarioConfig::default();
        let a = realize(&c, 5, Some(2)).unwrap();
        let b = realize(&c, 5, Some(3)).unwrap();
        assert_eq!(a.channels, b.channels);
        assert_eq!(a.requests.num_cached_groups(), 2);
        assert_eq!(b.requests.num_cached_groups(), 3);
    }

    #[test]
    fn toggling_shadowing_keeps_fading() {
        let c = ScenarioConfig::default();
        let no_shadow = ScenarioConfig { shadowing_enabled: false, ..c.clone() };
        let a = realize(&c, 8, None).unwrap();
        let b = realize(&no_shadow, 8, None).unwrap();
        assert_eq!(a.users, b.users);
        assert_eq!(a.requests, b.requests);
        // same fading draw, only the large-scale amplitude changes
        for k in 0..a.channels.num_users() {
            for n in 0..7 {
                let ga = a.channels.block(k, n)[0];
                let gb = b.channels.block(k, n)[0];
                let ratio = ga / gb;
                assert!(ratio.im.abs() < 1e-9 * ratio.re.abs());
                let expected = 10f64.powf(-a.channels.shadowing_db[k][n] / 20.0);
                assert!((ratio.re / expected - 1.0).abs() < 1e-9);
            }
        }
    }
}
