use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Backhaul capacities, either one value for every RU or one per RU (bps).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Capacities {
    Uniform(f64),
    PerRu(Vec<f64>),
}

impl Capacities {
    pub fn resolve(&self, num_rus: usize) -> Result<Vec<f64>> {
        match self {
            Capacities::Uniform(c) => Ok(vec![*c; num_rus]),
            Capacities::PerRu(v) if v.len() == num_rus => Ok(v.clone()),
            Capacities::PerRu(v) => Err(Error::Config(format!(
                "{} backhaul capacities given for {} RUs",
                v.len(),
                num_rus
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinrOverride {
    pub file: usize,
    pub sinr_db: f64,
}

/// Every physical, statistical and algorithmic parameter of a run.
///
/// Defaults: 7 hexagonal cells,
/// 2 antennas per RU, 0.5 km spacing, 200 users of which 12 are scheduled,
/// 10 MHz, 10 dB SINR target, Zipf(1.5) over 100 files, 3 cached files,
/// 70 Mbps backhaul per RU and a -50 dBm threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub num_rus: usize,
    pub antennas_per_ru: usize,
    pub inter_ru_distance_km: f64,
    /// Explicit RU positions (km); required when `num_rus` is not 1 or 7.
    pub ru_positions_km: Option<Vec<[f64; 2]>>,
    pub tx_antenna_gain_dbi: f64,
    pub total_users: usize,
    pub scheduled_users: usize,
    pub noise_psd_dbm_per_hz: f64,
    pub pathloss_intercept_db: f64,
    pub pathloss_slope_db: f64,
    pub shadowing_sigma_db: f64,
    pub shadowing_enabled: bool,
    pub fading_enabled: bool,
    pub bandwidth_hz: f64,
    pub sinr_target_db: f64,
    pub sinr_overrides: Vec<SinrOverride>,
    pub num_files: usize,
    pub zipf_alpha: f64,
    pub cache_size: usize,
    pub backhaul_capacity_bps: Capacities,
    /// Reweighting smoothing and on/off threshold, Watt.
    pub threshold_w: f64,
    pub max_iterations: usize,
    pub convergence_rel_tol: f64,
    pub randomization_candidates: usize,
    pub rng_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            schema_version: CONFIG_SCHEMA_VERSION,
            num_rus: 7,
            antennas_per_ru: 2,
            inter_ru_distance_km: 0.5,
            ru_positions_km: None,
            tx_antenna_gain_dbi: 10.0,
            total_users: 200,
            scheduled_users: 12,
            noise_psd_dbm_per_hz: -172.0,
            pathloss_intercept_db: 148.1,
            pathloss_slope_db: 37.6,
            shadowing_sigma_db: 8.0,
            shadowing_enabled: true,
            fading_enabled: true,
            bandwidth_hz: 10e6,
            sinr_target_db: 10.0,
            sinr_overrides: Vec::new(),
            num_files: 100,
            zipf_alpha: 1.5,
            cache_size: 3,
            backhaul_capacity_bps: Capacities::Uniform(70e6),
            threshold_w: dbm_to_watt(-50.0),
            max_iterations: 20,
            convergence_rel_tol: 1e-3,
            randomization_candidates: 100,
            rng_seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return fail(format!("unsupported schema_version {}", self.schema_version));
        }
        if self.num_rus == 0 {
            return fail("num_rus must be at least 1".into());
        }
        if self.antennas_per_ru == 0 {
            return fail("antennas_per_ru must be at least 1".into());
        }
        if !(self.inter_ru_distance_km > 0.0) {
            return fail("inter_ru_distance_km must be positive".into());
        }
        if let Some(p) = &self.ru_positions_km {
            if p.len() != self.num_rus {
                return fail(format!("{} RU positions for {} RUs", p.len(), self.num_rus));
            }
        }
        if self.scheduled_users > self.total_users {
            return fail("scheduled_users exceeds total_users".into());
        }
        if self.num_files == 0 {
            return fail("num_files must be at least 1".into());
        }
        if self.cache_size > self.num_files {
            return fail("cache_size exceeds num_files".into());
        }
        if !(self.zipf_alpha >= 0.0) {
            return fail("zipf_alpha must be non-negative".into());
        }
        if !(self.threshold_w > 0.0) {
            return fail("threshold_w must be positive".into());
        }
        if !(self.bandwidth_hz > 0.0) {
            return fail("bandwidth_hz must be positive".into());
        }
        if self.shadowing_sigma_db < 0.0 {
            return fail("shadowing_sigma_db must be non-negative".into());
        }
        if self.max_iterations == 0 {
            return fail("max_iterations must be at least 1".into());
        }
        let caps = self.capacities()?;
        if caps.iter().any(|c| !(*c >= 0.0)) {
            return fail("backhaul capacities must be non-negative".into());
        }
        for o in &self.sinr_overrides {
            if o.file == 0 || o.file > self.num_files {
                return fail(format!("sinr override for unknown file {}", o.file));
            }
        }
        Ok(())
    }

    pub fn capacities(&self) -> Result<Vec<f64>> {
        self.backhaul_capacity_bps.resolve(self.num_rus)
    }

    /// Linear SINR target for a file (1-based index).
    pub fn sinr_target_linear(&self, file: usize) -> f64 {
        let db = self
            .sinr_overrides
            .iter()
            .find(|o| o.file == file)
            .map_or(self.sinr_target_db, |o| o.sinr_db);
        db_to_linear(db)
    }

    /// Noise power over the whole band, Watt.
    pub fn noise_power_w(&self) -> f64 {
        dbm_to_watt(self.noise_psd_dbm_per_hz + 10.0 * self.bandwidth_hz.log10())
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watt_to_dbm(w: f64) -> f64 {
    10.0 * (w * 1000.0).log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ScenarioConfig::default().validate().unwrap();
    }

    #[test]
    fn threshold_is_minus_50_dbm() {
        let c = ScenarioConfig::default();
        assert!((c.threshold_w - 1e-8).abs() < 1e-22);
    }

    #[test]
    fn noise_over_band() {
        // -172 dBm/Hz + 70 dB = -102 dBm = 10^-13.2 W
        let n = ScenarioConfig::default().noise_power_w();
        assert!((n / 10f64.powf(-13.2) - 1.0).abs() < 1e-12);
        assert!((n - 6.31e-14).abs() < 1e-16);
    }

    #[test]
    fn toml_round_trip_and_partial_files() {
        let c = ScenarioConfig::default();
        let back = ScenarioConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(c, back);

        let partial = "num_rus = 1\nbackhaul_capacity_bps = [1e6]\ncache_size = 0\n";
        let p = ScenarioConfig::from_toml_str(partial).unwrap();
        assert_eq!(p.num_rus, 1);
        assert_eq!(p.capacities().unwrap(), vec![1e6]);
        assert_eq!(p.antennas_per_ru, 2);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ScenarioConfig::from_toml_str("cache_size = 101").is_err());
        assert!(ScenarioConfig::from_toml_str("threshold_w = 0.0").is_err());
        assert!(ScenarioConfig::from_toml_str("zipf_alpha = -1.0").is_err());
        assert!(ScenarioConfig::from_toml_str("scheduled_users = 300").is_err());
        assert!(ScenarioConfig::from_toml_str("backhaul_capacity_bps = [1.0, 2.0]").is_err());
        assert!(ScenarioConfig::from_toml_str("bogus_key = 1").is_err());
    }

    #[test]
    fn sinr_override() {
        let mut c = ScenarioConfig::default();
        c.sinr_overrides.push(SinrOverride { file: 4, sinr_db: 0.0 });
        assert!((c.sinr_target_linear(4) - 1.0).abs() < 1e-12);
        assert!((c.sinr_target_linear(5) - 10.0).abs() < 1e-12);
    }
}
