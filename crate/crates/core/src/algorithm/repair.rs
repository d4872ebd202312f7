//! Exact per-RU backhaul feasibility after thresholding.

use super::support::{extract_support, ClusterPattern};
use super::BackhaulMode;
use crate::conic::{build_program, BackhaulRows, SdpSolution, SdpSolver, SolveStatus};
use crate::error::Result;
use crate::instance::Instance;
use crate::linalg::CMatrix;

/// Absolute slack on load comparisons, bps. Loads are short sums of exact
/// rates, so this only absorbs summation order.
const LOAD_SLACK_BPS: f64 = 1e-6;

/// RU to repair next: the one with the largest excess among RUs that still
/// carry an uncached group. `None` when the pattern respects the mode's
/// capacity constraint.
pub fn overloaded_ru(instance: &Instance, pattern: &ClusterPattern, mode: BackhaulMode) -> Option<usize> {
    let loads = instance.loads(pattern.rows());
    let excess = |n: usize| loads[n] - instance.capacities[n];
    let evictable = |n: usize| (0..instance.num_groups()).any(|m| pattern.get(m, n) && instance.rates[m][n] > 0.0);
    let violated = match mode {
        BackhaulMode::Individual => (0..instance.num_rus).any(|n| excess(n) > LOAD_SLACK_BPS),
        BackhaulMode::Aggregate => {
            loads.iter().sum::<f64>() > instance.capacities.iter().sum::<f64>() + LOAD_SLACK_BPS
        }
        BackhaulMode::Benchmark => false,
    };
    if !violated {
        return None;
    }
    (0..instance.num_rus)
        .filter(|&n| evictable(n))
        .filter(|&n| mode != BackhaulMode::Individual || excess(n) > LOAD_SLACK_BPS)
        .max_by(|&a, &b| excess(a).total_cmp(&excess(b)).then(b.cmp(&a)))
}

/// Pairs `(m, n)` that fit on their own: the group's rate at RU `n` does not
/// exceed the capacity available to it under `mode`. Any other pair can
/// never appear in a load-feasible pattern and is held at zero power.
pub fn admissible_pairs(instance: &Instance, mode: BackhaulMode) -> ClusterPattern {
    let total: f64 = instance.capacities.iter().sum();
    let rows = (0..instance.num_groups())
        .map(|m| {
            (0..instance.num_rus)
                .map(|n| {
                    let r = instance.rates[m][n];
                    match mode {
                        BackhaulMode::Individual => r <= instance.capacities[n] + LOAD_SLACK_BPS,
                        BackhaulMode::Aggregate => r <= total + LOAD_SLACK_BPS,
                        BackhaulMode::Benchmark => true,
                    }
                })
                .collect()
        })
        .collect();
    ClusterPattern::new(rows)
}

/// Elementwise `1/w`, i.e. `tau + P` for reweighting weights.
pub(crate) fn inverse(weights: &[Vec<f64>]) -> Vec<Vec<f64>> {
    weights.iter().map(|r| r.iter().map(|w| 1.0 / w).collect()).collect()
}

pub fn backhaul_rows<'a>(mode: BackhaulMode, weights: &'a [Vec<f64>]) -> BackhaulRows<'a> {
    match mode {
        BackhaulMode::Individual => BackhaulRows::Individual(weights),
        BackhaulMode::Aggregate => BackhaulRows::Aggregate(weights),
        BackhaulMode::Benchmark => BackhaulRows::None,
    }
}

#[derive(Debug, Clone)]
pub struct RepairOutcome {
    pub pattern: ClusterPattern,
    pub v: Vec<CMatrix>,
    /// Evicted `(group, ru)` pairs in order.
    pub evictions: Vec<(usize, usize)>,
    /// Every re-solve performed, in order.
    pub solves: Vec<SdpSolution>,
    /// `Optimal` unless a re-solve failed.
    pub status: SolveStatus,
}

/// While an RU is over capacity, force out at that RU the uncached group with
/// the least power there and re-solve the reweighted problem with that pair
/// pinned to zero. The pattern only ever shrinks.
pub fn enforce_backhaul(
    instance: &Instance,
    pattern: ClusterPattern,
    v: Vec<CMatrix>,
    weights: &[Vec<f64>],
    mode: BackhaulMode,
    tau: f64,
    solver: &dyn SdpSolver,
) -> Result<RepairOutcome> {
    let mut out = RepairOutcome { pattern, v, evictions: Vec::new(), solves: Vec::new(), status: SolveStatus::Optimal };
    let mut hard = admissible_pairs(instance, mode);
    while let Some(n) = overloaded_ru(instance, &out.pattern, mode) {
        let victim = (0..instance.num_groups())
            .filter(|&m| out.pattern.get(m, n) && instance.rates[m][n] > 0.0)
            .min_by(|&a, &b| {
                instance.ru_power(&out.v[a], n).total_cmp(&instance.ru_power(&out.v[b], n)).then(a.cmp(&b))
            })
            .expect("overloaded RU carries an uncached group");
        hard.set(victim, n, false);
        out.pattern.set(victim, n, false);
        out.evictions.push((victim, n));
        let program = build_program(instance, backhaul_rows(mode, weights), Some(hard.rows()))?
            .with_power_hint(&inverse(weights));
        let sol = solver.solve(&program);
        let status = sol.status;
        if status == SolveStatus::Optimal {
            out.pattern = out.pattern.intersect(&extract_support(&sol.v, instance, tau));
            out.v = sol.v.clone();
        }
        out.solves.push(sol);
        if status != SolveStatus::Optimal {
            out.status = status;
            break;
        }
    }
    Ok(out)
}
