//! Relaxed SDPs, their real embedding and the solver contract.

pub mod embed;
mod ipm;
pub mod program;

use serde::{Deserialize, Serialize};

use crate::linalg::CMatrix;

pub use embed::{embed_hermitian, extract_hermitian, HERMITIAN_TOL};
pub use ipm::IpmSettings;
pub use program::{
    build_init_problem, build_program, build_ref_problem, BackhaulRows, BlockTerm, ConicProgram, ConstraintRow,
    PsdBlock, RankOne, RowLabel,
};

/// Largest normalized row violation accepted for an optimal solution.
pub const FEASIBILITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub relative_gap: f64,
    /// Dual objective in Watt.
    pub dual_objective_w: f64,
    /// Largest `lhs - rhs` over the normalized rows.
    pub max_row_violation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub status: SolveStatus,
    /// One full `NL x NL` Hermitian matrix per group, in Watt. Coordinates
    /// outside a block's support are zero.
    pub v: Vec<CMatrix>,
    /// `sum_m tr(V_m)` in Watt.
    pub objective_w: f64,
    pub diagnostics: SolverDiagnostics,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Anything that can solve a [`ConicProgram`].
pub trait SdpSolver: Sync {
    fn solve(&self, program: &ConicProgram) -> SdpSolution;
}

/// Primal-dual interior-point solver working on the rank-one factored rows.
#[derive(Debug, Clone, Copy, Default)]
pub struct InteriorPoint {
    pub settings: IpmSettings,
}

impl SdpSolver for InteriorPoint {
    fn solve(&self, program: &ConicProgram) -> SdpSolution {
        let out = ipm::solve(program, &self.settings);
        let status = match out.status {
            ipm::IpmStatus::Optimal => SolveStatus::Optimal,
            ipm::IpmStatus::Infeasible => SolveStatus::Infeasible,
            ipm::IpmStatus::Failed => SolveStatus::NumericalFailure,
        };
        finish(program, status, &out.x, |d| {
            d.iterations = out.iterations;
            d.primal_residual = out.primal_residual;
            d.dual_residual = out.dual_residual;
            d.relative_gap = out.relative_gap;
            d.dual_objective_w = out.dual_objective * program.power_scale;
        })
    }
}

/// Maps real blocks back to Watt-valued Hermitian matrices and checks the
/// rows on the recovered point.
fn finish(
    program: &ConicProgram,
    mut status: SolveStatus,
    blocks: &[nalgebra::DMatrix<f64>],
    fill: impl FnOnce(&mut SolverDiagnostics),
) -> SdpSolution {
    let nl = program.complex_dim();
    let l = program.antennas_per_ru;
    let mut diagnostics = SolverDiagnostics::default();
    fill(&mut diagnostics);

    let mut v = Vec::with_capacity(program.blocks.len());
    // symmetrized real blocks, re-embedded, for the row check
    let mut sym = Vec::with_capacity(program.blocks.len());
    for (b, blk) in program.blocks.iter().enumerate() {
        let x = &blocks[b];
        let local = extract_hermitian(x);
        let coords: Vec<usize> = blk.rus.iter().flat_map(|&n| n * l..(n + 1) * l).collect();
        let mut full = CMatrix::zeros(nl, nl);
        for (i, &ci) in coords.iter().enumerate() {
            for (j, &cj) in coords.iter().enumerate() {
                full[(ci, cj)] = local[(i, j)] * program.power_scale;
            }
        }
        sym.push(embed_hermitian(&local).unwrap_or_else(|_| x.clone()));
        v.push(full);
    }

    let mut worst = 0.0f64;
    for row in &program.rows {
        let mut lhs = 0.0;
        for t in &row.terms {
            let x = &sym[t.block];
            for f in &t.factors {
                let u = nalgebra::DVector::from_column_slice(&f.vector);
                lhs += f.weight * (u.transpose() * x * &u)[(0, 0)];
            }
        }
        // rows are normalized; measure relative to the row's magnitude
        worst = worst.max((lhs - row.rhs) / (1.0 + row.rhs.abs()));
    }
    diagnostics.max_row_violation = worst;
    if status == SolveStatus::Optimal && worst > FEASIBILITY_TOL {
        status = SolveStatus::NumericalFailure;
    }
    let objective_w = v.iter().map(crate::linalg::trace_re).sum();
    SdpSolution { status, v, objective_w, diagnostics }
}

/// Solves with the default interior-point settings.
pub fn solve(program: &ConicProgram) -> SdpSolution {
    InteriorPoint::default().solve(program)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{assemble_instance, Instance};
    use crate::linalg::{min_eigenvalue, CVector};
    use crate::scenario::{realize, MulticastGroup, ScenarioConfig};
    use num_complex::Complex64;

    fn single(h: Vec<Complex64>, gamma: f64, noise: f64, caps: Vec<f64>, cached: bool) -> Instance {
        let n = caps.len();
        let l = h.len() / n;
        Instance::from_parts(
            n,
            l,
            1.0,
            vec![CVector::from_vec(h)],
            vec![MulticastGroup { file: 1, users: vec![0], cached }],
            vec![gamma],
            vec![noise],
            caps,
        )
        .unwrap()
    }

    #[test]
    fn unit_closed_form() {
        let inst = single(vec![Complex64::new(1.0, 0.0)], 1.0, 1.0, vec![1.0], false);
        let sol = solve(&build_init_problem(&inst).unwrap());
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective_w - 1.0).abs() < 1e-6, "{}", sol.objective_w);
        assert!((sol.v[0][(0, 0)].re - 1.0).abs() < 1e-6);
    }

    #[test]
    fn zero_capacity_uncached_is_infeasible() {
        let inst = single(vec![Complex64::new(1.0, 0.5), Complex64::new(0.2, -0.3)], 2.0, 0.1, vec![0.0, 0.0], false);
        let sol = solve(&build_ref_problem(&inst, &[vec![1.0, 1.0]]).unwrap());
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn default_instance_solves() {
        let c = ScenarioConfig::default();
        for seed in 0..3 {
            let r = realize(&c, seed, None).unwrap();
            let inst = assemble_instance(&r.channels, &r.requests, &c).unwrap();
            let sol = solve(&build_init_problem(&inst).unwrap());
            let w = vec![vec![1.0 / (1e-8 + 1e-3); 7]; inst.num_groups()];
            let q = solve(&build_ref_problem(&inst, &w).unwrap());
            assert_eq!(sol.status, SolveStatus::Optimal);
            for v in &sol.v {
                let tr = crate::linalg::trace_re(v);
                assert!(min_eigenvalue(v) >= -1e-7 * tr.max(1.0));
            }
            if q.is_optimal() {
                assert!(q.objective_w >= sol.objective_w * (1.0 - 1e-6));
            }
        }
    }
}
