//! Closed-form and brute-force baselines for small instances.
//!
//! Everything here works on the relaxed (semidefinite) power, so results are
//! directly comparable with the relaxed objective reported by the main
//! algorithm.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithm::{run_algorithm1, AlgorithmOptions, ClusterPattern, RunStatus};
use crate::conic::{build_program, BackhaulRows, InteriorPoint, SdpSolver, SolveStatus};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::linalg::CVector;
use crate::rng::{stream, Stream};
use crate::scenario::MulticastGroup;

pub const DEFAULT_MAX_BITS: usize = 12;

/// Minimum power serving one user alone: `gamma * sigma2 / |h|^2`.
pub fn closed_form_single_user(h: &CVector, gamma: f64, noise_power: f64) -> Result<f64> {
    let g = h.norm_squared();
    if !(g > 0.0) {
        return Err(Error::InvalidArgument("zero channel".into()));
    }
    Ok(gamma * noise_power / g)
}

/// Relaxed power for one fixed cluster assignment, without backhaul rows.
/// `Ok(None)` means the assignment cannot meet every SINR target.
pub fn fixed_support_solve(instance: &Instance, pattern: &ClusterPattern) -> Result<Option<f64>> {
    fixed_support_solve_with(instance, pattern, &InteriorPoint::default())
}

pub fn fixed_support_solve_with(
    instance: &Instance,
    pattern: &ClusterPattern,
    solver: &dyn SdpSolver,
) -> Result<Option<f64>> {
    if pattern.num_groups() != instance.num_groups() || pattern.rows().iter().any(|r| r.len() != instance.num_rus) {
        return Err(Error::InvalidArgument(format!(
            "pattern is {}x{}, instance has {} groups and {} RUs",
            pattern.num_groups(),
            pattern.num_rus(),
            instance.num_groups(),
            instance.num_rus
        )));
    }
    let sol = solver.solve(&build_program(instance, BackhaulRows::None, Some(pattern.rows()))?);
    match sol.status {
        SolveStatus::Optimal => Ok(Some(sol.objective_w)),
        SolveStatus::Infeasible => Ok(None),
        SolveStatus::NumericalFailure => Err(Error::Solver(format!(
            "fixed-support solve failed (residuals {:.1e}/{:.1e})",
            sol.diagnostics.primal_residual, sol.diagnostics.dual_residual
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleEntry {
    /// Bit `j * N + n` is set iff RU `n` serves the `j`-th uncached group.
    pub mask: u64,
    pub pattern: ClusterPattern,
    /// `None` when the support is infeasible.
    pub power_w: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub best_power_w: Option<f64>,
    pub best_pattern: Option<ClusterPattern>,
    /// Every load-feasible support, ordered by mask.
    pub table: Vec<OracleEntry>,
    /// Number of supports tried (before the load filter).
    pub size: u64,
    pub bits: usize,
}

impl OracleResult {
    /// `mask power` lines, `inf` for infeasible supports.
    pub fn dump_table(&self) -> String {
        let mut s = String::new();
        for e in &self.table {
            match e.power_w {
                Some(p) => writeln!(s, "{:#06x} {:.12e}", e.mask, p),
                None => writeln!(s, "{:#06x} inf", e.mask),
            }
            .expect("writing to a string");
        }
        s
    }

    pub fn entry(&self, mask: u64) -> Option<&OracleEntry> {
        self.table.binary_search_by_key(&mask, |e| e.mask).ok().map(|i| &self.table[i])
    }
}

/// Pattern for `mask` with cached groups pinned to every RU.
pub fn pattern_from_mask(instance: &Instance, mask: u64) -> ClusterPattern {
    let nn = instance.num_rus;
    let mut j = 0;
    let rows = instance
        .groups
        .iter()
        .map(|g| {
            if g.cached {
                vec![true; nn]
            } else {
                let row = (0..nn).map(|n| mask >> (j * nn + n) & 1 == 1).collect();
                j += 1;
                row
            }
        })
        .collect();
    ClusterPattern::new(rows)
}

/// Exhaustive search over cluster supports of the uncached groups, keeping
/// only supports whose loads fit every backhaul.
pub fn enumerate_clusters(instance: &Instance, max_bits: usize) -> Result<OracleResult> {
    enumerate_clusters_with(instance, max_bits, &InteriorPoint::default())
}

pub fn enumerate_clusters_with(instance: &Instance, max_bits: usize, solver: &dyn SdpSolver) -> Result<OracleResult> {
    let uncached = instance.groups.iter().filter(|g| !g.cached).count();
    let bits = uncached * instance.num_rus;
    if bits > max_bits || bits >= 64 {
        return Err(Error::EnumerationTooLarge { bits, max_bits });
    }
    let size = 1u64 << bits;
    let candidates: Vec<(u64, ClusterPattern)> = (0..size)
        .map(|mask| (mask, pattern_from_mask(instance, mask)))
        .filter(|(_, p)| instance.loads(p.rows()).iter().zip(&instance.capacities).all(|(l, c)| l <= c))
        .collect();
    let table = candidates
        .into_par_iter()
        .map(|(mask, pattern)| {
            let power_w = fixed_support_solve_with(instance, &pattern, solver)?;
            Ok(OracleEntry { mask, pattern, power_w })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = table
        .iter()
        .filter_map(|e| e.power_w.map(|p| (p, e)))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.mask.cmp(&b.1.mask)));
    Ok(OracleResult {
        best_power_w: best.map(|(p, _)| p),
        best_pattern: best.map(|(_, e)| e.pattern.clone()),
        table,
        size,
        bits,
    })
}

/// Random small instance for cross-checks: `N` in `2..=max_rus` single-antenna
/// RUs, one or two uncached groups of one or two users, unit-variance
/// Rayleigh channels, noise 0.01 W, and per-RU capacities drawn uniformly in
/// `[k, k + 1)` times the largest rate with `k` in `0..max(M - 1, 1)`, so full
/// cooperation is ruled out at some RUs. The `k` sum to at least `M`.
pub fn small_instance(seed: u64, max_rus: usize) -> Result<Instance> {
    if max_rus < 2 {
        return Err(Error::InvalidArgument("small instances need at least 2 RUs".into()));
    }
    let mut rng = stream(seed, Stream::Fading);
    let nn = rng.random_range(2..=max_rus);
    let mm: usize = rng.random_range(1..=2);
    let bandwidth = 1e6;
    let mut groups = Vec::new();
    let mut k = 0;
    for m in 0..mm {
        let size = rng.random_range(1..=2);
        groups.push(MulticastGroup { file: 10 + m, users: (k..k + size).collect(), cached: false });
        k += size;
    }
    let channels: Vec<CVector> = (0..k)
        .map(|_| {
            CVector::from_fn(nn, |_, _| {
                Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
                    * std::f64::consts::FRAC_1_SQRT_2
            })
        })
        .collect();
    let targets: Vec<f64> = (0..mm).map(|_| rng.random_range(1.0..4.0)).collect();
    let max_rate = targets.iter().map(|g| bandwidth * (1.0 + g).log2()).fold(0.0, f64::max);
    let streams_cap = mm.max(2) - 1;
    let slots = loop {
        let s: Vec<usize> = (0..nn).map(|_| rng.random_range(0..=streams_cap)).collect();
        if s.iter().sum::<usize>() >= mm {
            break s;
        }
    };
    let capacities = slots.iter().map(|&s| (s as f64 + rng.random::<f64>()) * max_rate).collect();
    Instance::from_parts(nn, 1, bandwidth, channels, groups, targets, vec![0.01; k], capacities)
}

/// Main algorithm against exhaustive enumeration on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub num_rus: usize,
    pub num_groups: usize,
    pub oracle_best_w: Option<f64>,
    pub oracle_size: u64,
    pub algorithm_status: RunStatus,
    /// Relaxed power on the algorithm's final pattern.
    pub algorithm_relaxed_w: Option<f64>,
    /// `(algorithm - oracle) / oracle` when both exist.
    pub relative_gap: Option<f64>,
}

pub fn cross_check(instance: &Instance, options: &AlgorithmOptions) -> Result<CrossCheck> {
    let oracle = enumerate_clusters(instance, DEFAULT_MAX_BITS)?;
    let report = run_algorithm1(instance, options);
    let relaxed = if report.is_feasible() { report.relaxed_objective_w } else { None };
    let relative_gap = match (relaxed, oracle.best_power_w) {
        (Some(a), Some(b)) => Some((a - b) / b),
        _ => None,
    };
    Ok(CrossCheck {
        num_rus: instance.num_rus,
        num_groups: instance.num_groups(),
        oracle_best_w: oracle.best_power_w,
        oracle_size: oracle.size,
        algorithm_status: report.status,
        algorithm_relaxed_w: relaxed,
        relative_gap,
    })
}
