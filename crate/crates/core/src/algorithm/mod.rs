//! Iterative reweighted-l1 clustering over semidefinite relaxations.
//!
//! One run: solve the relaxation without backhaul rows, then repeatedly
//! reweight the per-RU backhaul rows with `w = 1/(tau + tr(V_m J_n))` and
//! re-solve until the support settles. Thresholding at `tau` gives the
//! cluster pattern; any RU still over capacity is repaired by eviction; the
//! relaxation restricted to the final pattern is solved once more and
//! beamformers are extracted from it.

mod extract;
mod power_lp;
mod repair;
mod support;
mod weights;

use serde::{Deserialize, Serialize};

use crate::conic::{build_program, BackhaulRows, InteriorPoint, SdpSolution, SdpSolver, SolveStatus};
use crate::error::Result;
use crate::instance::Instance;
use crate::linalg::CMatrix;
use crate::rng::{stream, Stream};
use crate::scenario::ScenarioConfig;

pub use extract::{
    extract_beamformers, min_sinr_margin, randomize_and_scale, rank_ratio, user_sinr, BeamformerSet,
    ExtractionMethod, RANK_ONE_RATIO, SINR_SLACK,
};
pub use power_lp::{channel_gains, power_scaling_lp};
pub use repair::{admissible_pairs, backhaul_rows, enforce_backhaul, overloaded_ru, RepairOutcome};
pub use support::{extract_support, ru_powers, support_from_powers, ClusterPattern};
pub use weights::{update_weights, WeightMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackhaulMode {
    /// One reweighted row per RU.
    Individual,
    /// One pooled row against the sum of capacities.
    Aggregate,
    /// Full cooperation, no backhaul rows at all.
    Benchmark,
}

impl std::str::FromStr for BackhaulMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "individual" => Ok(BackhaulMode::Individual),
            "aggregate" => Ok(BackhaulMode::Aggregate),
            "benchmark" => Ok(BackhaulMode::Benchmark),
            other => Err(crate::Error::InvalidArgument(format!("unknown baseline '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmOptions {
    /// Weight smoothing and on/off threshold, Watt.
    pub tau: f64,
    pub max_iterations: usize,
    pub rel_tol: f64,
    pub candidates: usize,
    pub mode: BackhaulMode,
    /// Seed of the randomization stream.
    pub seed: u64,
}

impl AlgorithmOptions {
    pub fn from_config(config: &ScenarioConfig, mode: BackhaulMode, seed: u64) -> Self {
        AlgorithmOptions {
            tau: config.threshold_w,
            max_iterations: config.max_iterations,
            rel_tol: config.convergence_rel_tol,
            candidates: config.randomization_candidates,
            mode,
            seed,
        }
    }
}

impl Default for AlgorithmOptions {
    fn default() -> Self {
        AlgorithmOptions::from_config(&ScenarioConfig::default(), BackhaulMode::Individual, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Init,
    Reweighted,
    Repair,
    Final,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub stage: Stage,
    pub status: SolveStatus,
    /// Relaxed objective `sum_m tr(V_m)`, Watt.
    pub objective_w: f64,
    /// `tr(V_m J_n)`, Watt.
    pub powers: Vec<Vec<f64>>,
    /// Weights used by this solve (absent for unweighted stages).
    pub weights: Option<Vec<Vec<f64>>>,
    pub support: ClusterPattern,
    pub solver_iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Feasible,
    Infeasible,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: RunStatus,
    pub mode: BackhaulMode,
    pub trace: Vec<IterationRecord>,
    /// Iteration at which the reweighting loop met the convergence test.
    pub converged_at: Option<usize>,
    pub init_objective_w: Option<f64>,
    /// Objective of the last reweighted solve (including repair re-solves).
    pub ref_objective_w: Option<f64>,
    /// Objective of the relaxation restricted to the final pattern.
    pub relaxed_objective_w: Option<f64>,
    pub pattern: Option<ClusterPattern>,
    pub evictions: Vec<(usize, usize)>,
    pub beamformers: Option<BeamformerSet>,
    /// Per-RU backhaul load of the final pattern, bps.
    pub loads_bps: Vec<f64>,
    /// `lambda_2 / lambda_1` of each final `V_m`.
    pub rank_ratios: Vec<f64>,
    /// Smallest achieved-to-target SINR ratio of the extracted beamformers.
    pub min_sinr_margin: Option<f64>,
    pub message: Option<String>,
}

impl SolveReport {
    fn new(mode: BackhaulMode) -> Self {
        SolveReport {
            status: RunStatus::Failed,
            mode,
            trace: Vec::new(),
            converged_at: None,
            init_objective_w: None,
            ref_objective_w: None,
            relaxed_objective_w: None,
            pattern: None,
            evictions: Vec::new(),
            beamformers: None,
            loads_bps: Vec::new(),
            rank_ratios: Vec::new(),
            min_sinr_margin: None,
            message: None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.status == RunStatus::Feasible
    }

    /// Number of reweighting iterations performed (excluding the init solve).
    pub fn reweighting_iterations(&self) -> usize {
        self.trace.iter().filter(|r| r.stage == Stage::Reweighted).count()
    }

    /// Extracted total power, Watt.
    pub fn power_w(&self) -> Option<f64> {
        self.beamformers.as_ref().map(|b| b.objective_w)
    }

    fn stop(mut self, status: RunStatus, message: impl Into<String>) -> Self {
        self.status = status;
        self.message = Some(message.into());
        self
    }
}

/// True iff the last two loop records share a support and their objectives
/// differ by less than `rel_tol` relative to the earlier one.
pub fn check_convergence(records: &[IterationRecord], rel_tol: f64) -> bool {
    let loop_records: Vec<&IterationRecord> =
        records.iter().filter(|r| matches!(r.stage, Stage::Init | Stage::Reweighted)).collect();
    let [.., prev, last] = loop_records.as_slice() else {
        return false;
    };
    if prev.support != last.support {
        return false;
    }
    let denom = prev.objective_w.abs().max(f64::MIN_POSITIVE);
    (last.objective_w - prev.objective_w).abs() / denom < rel_tol
}

fn record(
    instance: &Instance,
    sol: &SdpSolution,
    iteration: usize,
    stage: Stage,
    weights: Option<&[Vec<f64>]>,
    tau: f64,
) -> IterationRecord {
    let powers = ru_powers(&sol.v, instance);
    IterationRecord {
        iteration,
        stage,
        status: sol.status,
        objective_w: sol.objective_w,
        support: support_from_powers(&powers, tau),
        powers,
        weights: weights.map(<[Vec<f64>]>::to_vec),
        solver_iterations: sol.diagnostics.iterations,
    }
}

fn failed_status(s: SolveStatus) -> RunStatus {
    match s {
        SolveStatus::Infeasible => RunStatus::Infeasible,
        _ => RunStatus::Failed,
    }
}

/// Runs the full pipeline with the default interior-point solver.
pub fn run_algorithm1(instance: &Instance, options: &AlgorithmOptions) -> SolveReport {
    run_algorithm1_with(instance, options, &InteriorPoint::default())
}

pub fn run_algorithm1_with(instance: &Instance, options: &AlgorithmOptions, solver: &dyn SdpSolver) -> SolveReport {
    match run_inner(instance, options, solver) {
        Ok(r) => r,
        Err(e) => SolveReport::new(options.mode).stop(RunStatus::Failed, e.to_string()),
    }
}

fn run_inner(instance: &Instance, opt: &AlgorithmOptions, solver: &dyn SdpSolver) -> Result<SolveReport> {
    let mut report = SolveReport::new(opt.mode);
    let mm = instance.num_groups();
    let nn = instance.num_rus;

    // pairs that can never fit are held at zero from the start; without
    // backhaul constraints (benchmark) every pair is admissible
    let admissible = admissible_pairs(instance, opt.mode);
    let init = solver.solve(&build_program(instance, BackhaulRows::None, Some(admissible.rows()))?);
    report.trace.push(record(instance, &init, 0, Stage::Init, None, opt.tau));
    if !init.is_optimal() {
        return Ok(report.stop(failed_status(init.status), "initial relaxation not solved"));
    }
    report.init_objective_w = Some(init.objective_w);

    let (pattern, v): (ClusterPattern, Vec<CMatrix>) = if opt.mode == BackhaulMode::Benchmark {
        (ClusterPattern::full(mm, nn), init.v)
    } else {
        let mut current = init;
        let mut weights = update_weights(&ru_powers(&current.v, instance), opt.tau)?;
        for t in 1..=opt.max_iterations {
            weights = update_weights(&ru_powers(&current.v, instance), opt.tau)?;
            weights.iteration = t - 1;
            let program = build_program(instance, backhaul_rows(opt.mode, &weights.values), Some(admissible.rows()))?
                .with_power_hint(&repair::inverse(&weights.values));
            let sol = solver.solve(&program);
            report.trace.push(record(instance, &sol, t, Stage::Reweighted, Some(&weights.values), opt.tau));
            if !sol.is_optimal() {
                return Ok(report.stop(failed_status(sol.status), format!("reweighted relaxation at iteration {t}")));
            }
            report.ref_objective_w = Some(sol.objective_w);
            current = sol;
            if check_convergence(&report.trace, opt.rel_tol) {
                report.converged_at = Some(t);
                break;
            }
        }
        let pattern = extract_support(&current.v, instance, opt.tau);
        let repaired =
            enforce_backhaul(instance, pattern, current.v, &weights.values, opt.mode, opt.tau, solver)?;
        let base = report.trace.last().map_or(0, |r| r.iteration);
        for (i, sol) in repaired.solves.iter().enumerate() {
            report.trace.push(record(instance, sol, base + i + 1, Stage::Repair, Some(&weights.values), opt.tau));
            if sol.is_optimal() {
                report.ref_objective_w = Some(sol.objective_w);
            }
        }
        report.evictions = repaired.evictions;
        if repaired.status != SolveStatus::Optimal {
            return Ok(report.stop(failed_status(repaired.status), "backhaul repair"));
        }
        (repaired.pattern, repaired.v)
    };

    // relaxation restricted to the final pattern
    let (pattern, v) = if opt.mode == BackhaulMode::Benchmark {
        (pattern, v)
    } else {
        let hint: Vec<Vec<f64>> =
            ru_powers(&v, instance).iter().map(|r| r.iter().map(|p| p + opt.tau).collect()).collect();
        let program = build_program(instance, BackhaulRows::None, Some(pattern.rows()))?.with_power_hint(&hint);
        let sol = solver.solve(&program);
        let it = report.trace.last().map_or(0, |r| r.iteration) + 1;
        report.trace.push(record(instance, &sol, it, Stage::Final, None, opt.tau));
        if !sol.is_optimal() {
            return Ok(report.stop(failed_status(sol.status), "relaxation on final pattern"));
        }
        drop(v);
        (pattern, sol.v)
    };
    report.relaxed_objective_w = Some(v.iter().map(crate::linalg::trace_re).sum());
    report.rank_ratios = v.iter().map(rank_ratio).collect();
    report.loads_bps = instance.loads(pattern.rows());
    report.pattern = Some(pattern.clone());

    let mut rng = stream(opt.seed, Stream::Randomization);
    let Some(beams) = extract_beamformers(&v, instance, &pattern, opt.candidates, &mut rng) else {
        return Ok(report.stop(RunStatus::Failed, "no randomization candidate met every SINR target"));
    };
    let margin = min_sinr_margin(instance, &beams.vectors);
    report.min_sinr_margin = Some(margin);
    report.beamformers = Some(beams);
    if margin < 1.0 - SINR_SLACK {
        return Ok(report.stop(RunStatus::Failed, "SINR verification failed"));
    }
    if overloaded_ru(instance, &pattern, opt.mode).is_some() {
        return Ok(report.stop(RunStatus::Failed, "backhaul verification failed"));
    }
    report.status = RunStatus::Feasible;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::assemble_instance;
    use crate::linalg::CVector;
    use crate::scenario::{realize, MulticastGroup};
    use num_complex::Complex64;

    fn rec(obj: f64, support: Vec<Vec<bool>>) -> IterationRecord {
        IterationRecord {
            iteration: 0,
            stage: Stage::Reweighted,
            status: SolveStatus::Optimal,
            objective_w: obj,
            powers: vec![],
            weights: None,
            support: ClusterPattern::new(support),
            solver_iterations: 0,
        }
    }

    #[test]
    fn convergence_rules() {
        let a = rec(1.0, vec![vec![true, false]]);
        assert!(!check_convergence(&[a.clone()], 1e-3));
        assert!(check_convergence(&[a.clone(), a.clone()], 1e-3));
        let b = rec(1.0, vec![vec![true, true]]);
        assert!(!check_convergence(&[a.clone(), b], 1e-3));
        let c = rec(1.01, vec![vec![true, false]]);
        assert!(!check_convergence(&[a, c], 1e-3));
    }

    #[test]
    fn two_ru_single_user_matches_closed_form() {
        let h = CVector::from_vec(vec![Complex64::new(0.8, 0.1), Complex64::new(-0.3, 0.5)]);
        let inst = Instance::from_parts(
            2,
            1,
            1e6,
            vec![h.clone()],
            vec![MulticastGroup { file: 5, users: vec![0], cached: false }],
            vec![3.0],
            vec![0.01],
            vec![1e7, 1e7],
        )
        .unwrap();
        let opt = AlgorithmOptions { tau: 1e-8, ..AlgorithmOptions::default() };
        let r = run_algorithm1(&inst, &opt);
        assert_eq!(r.status, RunStatus::Feasible, "{:?}", r.message);
        let expected = 3.0 * 0.01 / h.norm_squared();
        assert!((r.power_w().unwrap() - expected).abs() < 1e-3 * expected);
    }

    #[test]
    fn zero_capacity_is_infeasible() {
        let h = CVector::from_vec(vec![Complex64::new(0.8, 0.1), Complex64::new(-0.3, 0.5)]);
        let inst = Instance::from_parts(
            2,
            1,
            1e6,
            vec![h],
            vec![MulticastGroup { file: 5, users: vec![0], cached: false }],
            vec![3.0],
            vec![0.01],
            vec![0.0, 0.0],
        )
        .unwrap();
        let r = run_algorithm1(&inst, &AlgorithmOptions::default());
        assert_eq!(r.status, RunStatus::Infeasible);
    }

    #[test]
    fn default_realization_runs() {
        let c = ScenarioConfig::default();
        let real = realize(&c, 11, None).unwrap();
        let inst = assemble_instance(&real.channels, &real.requests, &c).unwrap();
        let r = run_algorithm1(&inst, &AlgorithmOptions::from_config(&c, BackhaulMode::Individual, 11));
        assert!(r.is_feasible(), "{:?}", r.message);
        let pattern = r.pattern.as_ref().unwrap();
        for m in 0..inst.num_groups() {
            if inst.groups[m].cached {
                assert_eq!(pattern.row_count(m), inst.num_rus);
            }
        }
        for (load, cap) in r.loads_bps.iter().zip(&inst.capacities) {
            assert!(*load <= cap + 1.0);
        }
    }
}
