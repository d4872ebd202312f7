use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::metrics::total_power_w;
use super::realization::simulate;
use crate::algorithm::{update_weights, BackhaulMode};
use crate::conic::{build_init_problem, embed_hermitian, extract_hermitian, solve, SolveStatus};
use crate::instance::{assemble_instance, selection_mask, Instance};
use crate::linalg::{hermitian_deviation, min_eigenvalue, trace_re, CMatrix, CVector};
use crate::oracle::closed_form_single_user;
use crate::scenario::{realize, zipf_pmf, MulticastGroup, ScenarioConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check { name: name.into(), passed, detail });
    }
}

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let a = CMatrix::from_fn(n, n, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    (&a + a.adjoint()).scale(0.5)
}

fn random_channel(rng: &mut ChaCha8Rng, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

fn check_zipf(report: &mut ValidationReport) {
    for (f, a) in [(100, 1.5), (10, 0.0), (3, 1.0)] {
        let (ok, detail) = match zipf_pmf(f, a) {
            Ok(p) => {
                let err = (p.iter().sum::<f64>() - 1.0).abs();
                (err <= 1e-12 && p.iter().all(|&x| x > 0.0), format!("|sum - 1| = {err:e}"))
            }
            Err(e) => (false, e.to_string()),
        };
        report.push(&format!("zipf_pmf_sums_to_one_F{f}_alpha{a}"), ok, detail);
    }
}

fn check_selection_masks(report: &mut ValidationReport) {
    for (nn, l) in [(7, 2), (3, 1), (1, 4)] {
        let mut counts = vec![0usize; nn * l];
        let mut ok = true;
        for n in 0..nn {
            match selection_mask(n, nn, l) {
                Ok(mask) => {
                    for (c, &on) in counts.iter_mut().zip(&mask.diagonal) {
                        *c += usize::from(on);
                    }
                }
                Err(_) => ok = false,
            }
        }
        ok &= counts.iter().all(|&c| c == 1);
        report.push(&format!("selection_masks_sum_to_identity_N{nn}_L{l}"), ok, format!("diagonal counts {counts:?}"));
    }
}

fn check_embedding(report: &mut ValidationReport) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst = 0.0f64;
    let mut trace_err = 0.0f64;
    for n in 1..=6 {
        let a = random_hermitian(&mut rng, n);
        match embed_hermitian(&a) {
            Ok(x) => {
                let back = extract_hermitian(&x);
                worst = worst.max((&back - &a).iter().map(|z| z.norm()).fold(0.0, f64::max));
                trace_err = trace_err.max((x.trace() - 2.0 * trace_re(&a)).abs());
            }
            Err(_) => worst = f64::INFINITY,
        }
    }
    report.push(
        "embedding_round_trip",
        worst <= 1e-12 && trace_err <= 1e-12,
        format!("max entry error {worst:e}, trace error {trace_err:e}"),
    );
}

fn check_weights(report: &mut ValidationReport) {
    let tau = 1e-8;
    let ok = match update_weights(&[vec![0.0, tau, 1.0]], tau) {
        Ok(w) => {
            let v = &w.values[0];
            (v[0] * tau - 1.0).abs() < 1e-12 && (v[1] * 2.0 * tau - 1.0).abs() < 1e-12 && (v[2] - 1.0 / (1.0 + tau)).abs() < 1e-12
        }
        Err(_) => false,
    };
    let rejects = update_weights(&[vec![-1.0]], tau).is_err() && update_weights(&[vec![0.0]], 0.0).is_err();
    report.push("weight_spot_values", ok && rejects, "w(0) = 1/tau, w(tau) = 1/(2 tau), invalid input rejected".into());
}

fn check_closed_form(report: &mut ValidationReport) {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc10);
    let mut worst = 0.0f64;
    let mut ok = true;
    for _ in 0..5 {
        let l = rng.random_range(1..=4);
        let h = random_channel(&mut rng, l);
        let gamma = 10f64.powf(rng.random_range(-1.0..2.0));
        let sigma2 = 10f64.powf(rng.random_range(-3.0..0.0));
        let inst = Instance::from_parts(
            1,
            l,
            1e6,
            vec![h.clone()],
            vec![MulticastGroup { file: 1, users: vec![0], cached: true }],
            vec![gamma],
            vec![sigma2],
            vec![0.0],
        );
        let (Ok(inst), Ok(expected)) = (inst, closed_form_single_user(&h, gamma, sigma2)) else {
            ok = false;
            continue;
        };
        match build_init_problem(&inst).map(|p| solve(&p)) {
            Ok(sol) if sol.status == SolveStatus::Optimal => {
                worst = worst.max((sol.objective_w / expected - 1.0).abs());
            }
            _ => ok = false,
        }
    }
    report.push("single_user_matches_closed_form", ok && worst <= 1e-4, format!("max relative error {worst:e}"));
}

fn check_solution_blocks(report: &mut ValidationReport, config: &ScenarioConfig) {
    let built = realize(config, 1, None).and_then(|r| assemble_instance(&r.channels, &r.requests, config));
    let inst = match built {
        Ok(i) => i,
        Err(e) => {
            report.push("relaxation_blocks_hermitian_psd", false, e.to_string());
            return;
        }
    };
    let sol = match build_init_problem(&inst) {
        Ok(p) => solve(&p),
        Err(e) => {
            report.push("relaxation_blocks_hermitian_psd", false, e.to_string());
            return;
        }
    };
    if sol.status != SolveStatus::Optimal {
        report.push("relaxation_blocks_hermitian_psd", false, format!("status {:?}", sol.status));
        return;
    }
    let mut herm = 0.0f64;
    let mut psd = true;
    let mut worst_eig = f64::INFINITY;
    for v in &sol.v {
        let tr = trace_re(v);
        herm = herm.max(hermitian_deviation(v));
        let e = min_eigenvalue(v);
        worst_eig = worst_eig.min(e / tr.max(1.0));
        psd &= e >= -1e-7 * tr.max(1.0);
    }
    let total: f64 = sol.v.iter().map(trace_re).sum();
    let obj_err = (total - sol.objective_w).abs() / sol.objective_w.abs().max(f64::MIN_POSITIVE);
    report.push(
        "relaxation_blocks_hermitian_psd",
        herm <= 1e-9 && psd && obj_err <= 1e-6,
        format!("hermitian deviation {herm:e}, min scaled eigenvalue {worst_eig:e}, objective error {obj_err:e}"),
    );
}

fn check_outcome_consistency(report: &mut ValidationReport, config: &ScenarioConfig) {
    let run = simulate(config, 3, BackhaulMode::Individual, None, false);
    let (Some(inst), Some(rep)) = (&run.instance, &run.report) else {
        report.push("reported_power_and_loads", false, run.outcome.message.unwrap_or_default());
        return;
    };
    let mut ok = true;
    let mut detail = format!("status {:?}", run.outcome.status);
    if let (Some(b), Some(p)) = (&rep.beamformers, run.outcome.power_w) {
        let direct = total_power_w(b);
        let err = (direct - p).abs() / direct.max(f64::MIN_POSITIVE);
        ok &= err <= 1e-9;
        detail.push_str(&format!(", power error {err:e}"));
    }
    if let Some(pattern) = &rep.pattern {
        for n in 0..inst.num_rus {
            let direct: f64 = (0..inst.num_groups()).filter(|&m| pattern.get(m, n)).map(|m| inst.rates[m][n]).sum();
            ok &= direct == rep.loads_bps[n];
            ok &= (run.outcome.loads_mbps[n] - direct / 1e6).abs() <= 1e-12 * direct.max(1.0);
        }
    }
    report.push("reported_power_and_loads", ok, detail);
}

/// Fast invariant checks over scenario generation, the embedding, the
/// weight rule and solved relaxations.
pub fn run_invariant_suite(config: &ScenarioConfig) -> ValidationReport {
    let mut report = ValidationReport { checks: Vec::new() };
    check_zipf(&mut report);
    check_selection_masks(&mut report);
    check_embedding(&mut report);
    check_weights(&mut report);
    check_closed_form(&mut report);
    check_solution_blocks(&mut report, config);
    check_outcome_consistency(&mut report, config);
    report
}
