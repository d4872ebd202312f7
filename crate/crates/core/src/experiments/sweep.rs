use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::realization::run_realization;
use super::stats::{mean_with_half_width, wilson_interval};
use crate::algorithm::{BackhaulMode, RunStatus};
use crate::error::{Error, Result};
use crate::scenario::{watt_to_dbm, Capacities, ScenarioConfig};

/// One grid cell. `capacity_bps = None` keeps the configured capacities;
/// `cached_requested = None` leaves the request draw unconditioned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub capacity_bps: Option<f64>,
    pub cached_requested: Option<usize>,
    pub mode: BackhaulMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub status: RunStatus,
    pub power_w: Option<f64>,
    pub relaxed_power_w: Option<f64>,
    pub init_power_w: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    #[serde(flatten)]
    pub key: CellKey,
    pub realizations: usize,
    pub feasible: usize,
    pub infeasible: usize,
    pub failed: usize,
    /// Fraction of realizations that are not feasible.
    pub outage: f64,
    pub outage_ci: (f64, f64),
    pub mean_power_w: Option<f64>,
    pub power_half_width_w: Option<f64>,
    pub mean_power_dbm: Option<f64>,
    pub power_half_width_db: Option<f64>,
    /// Ordered by seed.
    pub per_seed: Vec<SeedResult>,
}

impl SweepCell {
    pub fn powers(&self) -> Vec<Option<f64>> {
        self.per_seed.iter().map(|s| s.power_w).collect()
    }

    /// 1 for outage, 0 for feasible, per seed.
    pub fn outage_indicators(&self) -> Vec<Option<f64>> {
        self.per_seed.iter().map(|s| Some(if s.status == RunStatus::Feasible { 0.0 } else { 1.0 })).collect()
    }

    fn from_results(key: CellKey, per_seed: Vec<SeedResult>) -> Self {
        let n = per_seed.len();
        let count = |s: RunStatus| per_seed.iter().filter(|r| r.status == s).count();
        let feasible = count(RunStatus::Feasible);
        let powers: Vec<f64> = per_seed.iter().filter_map(|r| r.power_w).collect();
        let dbm: Vec<f64> = powers.iter().map(|&p| watt_to_dbm(p)).collect();
        let (mean_power_w, power_half_width_w) = mean_with_half_width(&powers);
        let (mean_power_dbm, power_half_width_db) = mean_with_half_width(&dbm);
        SweepCell {
            key,
            realizations: n,
            feasible,
            infeasible: count(RunStatus::Infeasible),
            failed: count(RunStatus::Failed),
            outage: (n - feasible) as f64 / n.max(1) as f64,
            outage_ci: wilson_interval(n - feasible, n),
            mean_power_w,
            power_half_width_w,
            mean_power_dbm,
            power_half_width_db,
            per_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub base_seed: u64,
    pub realizations_per_cell: usize,
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, key: &CellKey) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.key == *key)
    }
}

/// Runs seeds `base_seed .. base_seed + n` for one cell in parallel on the
/// current rayon pool; results are ordered by seed.
pub fn run_cell(config: &ScenarioConfig, key: CellKey, n: usize, base_seed: u64) -> SweepCell {
    let mut config = config.clone();
    if let Some(c) = key.capacity_bps {
        config.backhaul_capacity_bps = Capacities::Uniform(c);
    }
    let per_seed = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let seed = base_seed.wrapping_add(i);
            let o = run_realization(&config, seed, key.mode, key.cached_requested, false);
            SeedResult {
                seed,
                status: o.status,
                power_w: o.power_w,
                relaxed_power_w: o.relaxed_power_w,
                init_power_w: o.init_power_w,
            }
        })
        .collect();
    SweepCell::from_results(key, per_seed)
}

/// Outage fraction (with Wilson interval) over `n` seeded realizations of
/// `config` as given.
pub fn outage_probability(
    config: &ScenarioConfig,
    n: usize,
    base_seed: u64,
    mode: BackhaulMode,
    cached_requested: Option<usize>,
) -> Result<SweepCell> {
    if n == 0 {
        return Err(Error::InvalidArgument("at least one realization required".into()));
    }
    config.validate()?;
    Ok(run_cell(config, CellKey { capacity_bps: None, cached_requested, mode }, n, base_seed))
}

/// Paired-seed grid over capacities x cached counts x modes. Every cell
/// uses the same seeds, so channels are shared across cells.
pub fn power_sweep(
    config: &ScenarioConfig,
    capacities_bps: &[f64],
    cached_counts: &[usize],
    modes: &[BackhaulMode],
    n: usize,
    base_seed: u64,
) -> Result<SweepResult> {
    if capacities_bps.is_empty() || cached_counts.is_empty() || modes.is_empty() {
        return Err(Error::InvalidArgument("sweep grids must be nonempty".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("at least one realization required".into()));
    }
    if capacities_bps.iter().any(|c| !(*c >= 0.0)) {
        return Err(Error::InvalidArgument("capacities must be non-negative".into()));
    }
    config.validate()?;
    let mut cells = Vec::new();
    for &capacity in capacities_bps {
        for &cached in cached_counts {
            for &mode in modes {
                let key = CellKey { capacity_bps: Some(capacity), cached_requested: Some(cached), mode };
                cells.push(run_cell(config, key, n, base_seed));
            }
        }
    }
    Ok(SweepResult { base_seed, realizations_per_cell: n, cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_capacity_without_cache_is_total_outage() {
        let c = ScenarioConfig {
            cache_size: 0,
            backhaul_capacity_bps: Capacities::Uniform(0.0),
            ..ScenarioConfig::default()
        };
        let cell = outage_probability(&c, 4, 10, BackhaulMode::Individual, None).unwrap();
        assert_eq!(cell.outage, 1.0);
        assert_eq!(cell.infeasible, 4);
        assert_eq!(cell.mean_power_w, None);
        assert!(cell.outage_ci.0 > 0.0 && cell.outage_ci.1 == 1.0);
    }

    #[test]
    fn empty_grids_rejected() {
        let c = ScenarioConfig::default();
        assert!(power_sweep(&c, &[], &[2], &[BackhaulMode::Individual], 1, 0).is_err());
        assert!(outage_probability(&c, 0, 0, BackhaulMode::Individual, None).is_err());
    }
}
