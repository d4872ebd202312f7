use serde::{Deserialize, Serialize};

use crate::algorithm::{
    run_algorithm1, AlgorithmOptions, BackhaulMode, ClusterPattern, ExtractionMethod, RunStatus, SolveReport, Stage,
};
use crate::instance::{assemble_instance, Instance};
use crate::scenario::{realize, watt_to_dbm, ScenarioConfig};

/// One solve of the iteration trace: `powers[m][n] = tr(V_m J_n)` in Watt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub stage: Stage,
    pub objective_w: f64,
    pub powers_w: Vec<Vec<f64>>,
}

/// Everything reported about one seeded realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationOutcome {
    pub seed: u64,
    pub mode: BackhaulMode,
    pub status: RunStatus,
    /// Requested number of distinct cached files, when conditioned.
    pub cached_requested: Option<usize>,
    pub num_groups: usize,
    pub num_cached_groups: usize,
    pub group_files: Vec<usize>,
    /// Extracted total power.
    pub power_w: Option<f64>,
    pub power_dbm: Option<f64>,
    pub init_power_w: Option<f64>,
    /// Relaxed power on the final pattern.
    pub relaxed_power_w: Option<f64>,
    pub loads_mbps: Vec<f64>,
    pub pattern: Option<ClusterPattern>,
    pub iterations: usize,
    pub converged_at: Option<usize>,
    pub evictions: usize,
    pub min_sinr_margin: Option<f64>,
    pub extraction: Option<ExtractionMethod>,
    pub message: Option<String>,
    pub trace: Option<Vec<TracePoint>>,
}

impl RealizationOutcome {
    pub fn is_feasible(&self) -> bool {
        self.status == RunStatus::Feasible
    }

    fn failed(seed: u64, mode: BackhaulMode, cached_requested: Option<usize>, message: String) -> Self {
        RealizationOutcome {
            seed,
            mode,
            status: RunStatus::Failed,
            cached_requested,
            num_groups: 0,
            num_cached_groups: 0,
            group_files: Vec::new(),
            power_w: None,
            power_dbm: None,
            init_power_w: None,
            relaxed_power_w: None,
            loads_mbps: Vec::new(),
            pattern: None,
            iterations: 0,
            converged_at: None,
            evictions: 0,
            min_sinr_margin: None,
            extraction: None,
            message: Some(message),
            trace: None,
        }
    }

    fn from_report(
        seed: u64,
        cached_requested: Option<usize>,
        instance: &Instance,
        report: &SolveReport,
        trace: bool,
    ) -> Self {
        let feasible = report.is_feasible();
        let power_w = if feasible { report.power_w() } else { None };
        RealizationOutcome {
            seed,
            mode: report.mode,
            status: report.status,
            cached_requested,
            num_groups: instance.num_groups(),
            num_cached_groups: instance.groups.iter().filter(|g| g.cached).count(),
            group_files: instance.groups.iter().map(|g| g.file).collect(),
            power_w,
            power_dbm: power_w.map(watt_to_dbm),
            init_power_w: report.init_objective_w,
            relaxed_power_w: report.relaxed_objective_w,
            loads_mbps: report.loads_bps.iter().map(|l| l / 1e6).collect(),
            pattern: report.pattern.clone(),
            iterations: report.reweighting_iterations(),
            converged_at: report.converged_at,
            evictions: report.evictions.len(),
            min_sinr_margin: report.min_sinr_margin,
            extraction: report.beamformers.as_ref().map(|b| b.method),
            message: report.message.clone(),
            trace: trace.then(|| {
                report
                    .trace
                    .iter()
                    .map(|r| TracePoint {
                        iteration: r.iteration,
                        stage: r.stage,
                        objective_w: r.objective_w,
                        powers_w: r.powers.clone(),
                    })
                    .collect()
            }),
        }
    }
}

/// Outcome plus the instance and full report it was derived from.
#[derive(Debug, Clone)]
pub struct RealizationRun {
    pub outcome: RealizationOutcome,
    pub instance: Option<Instance>,
    pub report: Option<SolveReport>,
}

/// Scenario, instance, algorithm and metrics for one seed. Failures at any
/// stage end up in the outcome's status and message.
pub fn simulate(
    config: &ScenarioConfig,
    seed: u64,
    mode: BackhaulMode,
    cached_requested: Option<usize>,
    trace: bool,
) -> RealizationRun {
    let built = realize(config, seed, cached_requested)
        .and_then(|r| assemble_instance(&r.channels, &r.requests, config));
    let instance = match built {
        Ok(i) => i,
        Err(e) => {
            return RealizationRun {
                outcome: RealizationOutcome::failed(seed, mode, cached_requested, e.to_string()),
                instance: None,
                report: None,
            }
        }
    };
    let report = run_algorithm1(&instance, &AlgorithmOptions::from_config(config, mode, seed));
    RealizationRun {
        outcome: RealizationOutcome::from_report(seed, cached_requested, &instance, &report, trace),
        instance: Some(instance),
        report: Some(report),
    }
}

pub fn run_realization(
    config: &ScenarioConfig,
    seed: u64,
    mode: BackhaulMode,
    cached_requested: Option<usize>,
    trace: bool,
) -> RealizationOutcome {
    simulate(config, seed, mode, cached_requested, trace).outcome
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Capacities;

    #[test]
    fn cached_only_draws_use_no_backhaul() {
        // every requested file is cached when the catalogue fits in the cache
        let c = ScenarioConfig {
            num_files: 3,
            cache_size: 3,
            backhaul_capacity_bps: Capacities::Uniform(0.0),
            ..ScenarioConfig::default()
        };
        let o = run_realization(&c, 3, BackhaulMode::Individual, None, true);
        assert_eq!(o.status, RunStatus::Feasible, "{:?}", o.message);
        assert!(o.loads_mbps.iter().all(|&l| l == 0.0));
        assert_eq!(o.num_cached_groups, o.num_groups);
        let trace = o.trace.unwrap();
        assert_eq!(trace[0].stage, Stage::Init);
        assert_eq!(trace[0].powers_w.len(), o.num_groups);
        assert!((o.power_dbm.unwrap() - 10.0 * (o.power_w.unwrap() * 1000.0).log10()).abs() < 1e-12);
    }

    #[test]
    fn bad_conditioning_is_recorded() {
        let c = ScenarioConfig { cache_size: 1, ..ScenarioConfig::default() };
        let o = run_realization(&c, 0, BackhaulMode::Individual, Some(5), false);
        assert_eq!(o.status, RunStatus::Failed);
        assert!(o.message.is_some());
    }
}
