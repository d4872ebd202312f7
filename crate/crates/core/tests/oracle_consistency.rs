//! Brute-force and closed-form baselines against the solver and the main
//! algorithm.

use fran_core::algorithm::{run_algorithm1, AlgorithmOptions, ClusterPattern, RunStatus};
use fran_core::conic::{build_init_problem, solve};
use fran_core::instance::Instance;
use fran_core::linalg::CVector;
use fran_core::oracle::{
    closed_form_single_user, enumerate_clusters, fixed_support_solve, small_instance, DEFAULT_MAX_BITS,
};
use fran_core::scenario::MulticastGroup;
use num_complex::Complex64;
use proptest::prelude::*;

fn single_user(h: CVector, gamma: f64, sigma2: f64) -> Instance {
    Instance::from_parts(
        1,
        h.len(),
        1e6,
        vec![h],
        vec![MulticastGroup { file: 1, users: vec![0], cached: true }],
        vec![gamma],
        vec![sigma2],
        vec![0.0],
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn relaxation_matches_closed_form(
        entries in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..=6),
        gamma in 0.1f64..100.0,
        sigma2 in 1e-4f64..1.0,
    ) {
        let h = CVector::from_iterator(entries.len(), entries.iter().map(|&(a, b)| Complex64::new(a, b)));
        prop_assume!(h.norm_squared() > 1e-3);
        let expected = closed_form_single_user(&h, gamma, sigma2).unwrap();
        let sol = solve(&build_init_problem(&single_user(h, gamma, sigma2)).unwrap());
        prop_assert!(sol.is_optimal());
        prop_assert!((sol.objective_w / expected - 1.0).abs() < 1e-4);
    }
}

#[test]
fn closed_form_spot_values() {
    let h = CVector::from_vec(vec![Complex64::new(1.0, 0.0)]);
    assert_eq!(closed_form_single_user(&h, 1.0, 1.0).unwrap(), 1.0);
    let h = CVector::from_vec(vec![Complex64::new(2.0, 0.0)]);
    assert!((closed_form_single_user(&h, 10.0, 0.1).unwrap() - 0.25).abs() < 1e-15);
}

#[test]
fn full_support_equals_initial_relaxation() {
    for seed in 0..8 {
        let inst = small_instance(seed, 3).unwrap();
        let init = solve(&build_init_problem(&inst).unwrap());
        let full = fixed_support_solve(&inst, &ClusterPattern::full(inst.num_groups(), inst.num_rus)).unwrap();
        match full {
            Some(p) => assert!((p / init.objective_w - 1.0).abs() < 1e-7, "seed {seed}"),
            None => assert!(!init.is_optimal(), "seed {seed}"),
        }
        let mut empty_row = ClusterPattern::full(inst.num_groups(), inst.num_rus);
        for n in 0..inst.num_rus {
            empty_row.set(0, n, false);
        }
        assert_eq!(fixed_support_solve(&inst, &empty_row).unwrap(), None);
    }
}

#[test]
fn enumerated_powers_are_monotone_in_support() {
    for seed in 0..12 {
        let inst = small_instance(seed, 3).unwrap();
        let r = enumerate_clusters(&inst, DEFAULT_MAX_BITS).unwrap();
        let best = r.table.iter().filter_map(|e| e.power_w).fold(f64::INFINITY, f64::min);
        match r.best_power_w {
            Some(b) => assert_eq!(b, best),
            None => assert!(best.is_infinite()),
        }
        for a in &r.table {
            for b in &r.table {
                // b adds pairs to a
                if a.mask != b.mask && a.mask & b.mask == a.mask {
                    match (a.power_w, b.power_w) {
                        (Some(pa), Some(pb)) => assert!(pb <= pa * (1.0 + 1e-7), "seed {seed}: {:#x} {:#x}", a.mask, b.mask),
                        (Some(_), None) => panic!("seed {seed}: superset {:#x} infeasible", b.mask),
                        _ => {}
                    }
                }
            }
            let loads = inst.loads(a.pattern.rows());
            assert!(loads.iter().zip(&inst.capacities).all(|(l, c)| l <= c));
        }
        assert!(r.table.windows(2).all(|w| w[0].mask < w[1].mask));
        assert_eq!(r.dump_table().lines().count(), r.table.len());
    }
}

#[test]
fn single_ru_supports_prefer_the_stronger_ru() {
    let h = CVector::from_vec(vec![Complex64::new(0.3, 0.4), Complex64::new(-1.0, 0.2)]);
    let rate = 1e6 * 3f64.log2();
    let build = |caps: Vec<f64>| {
        Instance::from_parts(
            2,
            1,
            1e6,
            vec![h.clone()],
            vec![MulticastGroup { file: 9, users: vec![0], cached: false }],
            vec![2.0],
            vec![0.01],
            caps,
        )
        .unwrap()
    };
    // ample backhaul: full cooperation wins
    let r = enumerate_clusters(&build(vec![rate; 2]), DEFAULT_MAX_BITS).unwrap();
    assert_eq!(r.best_pattern.clone().unwrap(), ClusterPattern::full(1, 2));
    let single = |mask: u64| r.entry(mask).unwrap().power_w.unwrap();
    assert!((single(0b01) - 0.02 / h[0].norm_sqr()).abs() < 1e-9);
    assert!((single(0b10) - 0.02 / h[1].norm_sqr()).abs() < 1e-9);
    assert!(single(0b10) < single(0b01));
    assert!(r.best_power_w.unwrap() < single(0b10));
    // only the stronger RU has backhaul for the stream
    let r = enumerate_clusters(&build(vec![0.0, rate]), DEFAULT_MAX_BITS).unwrap();
    assert_eq!(r.best_pattern.unwrap(), ClusterPattern::new(vec![vec![false, true]]));
    assert!((r.best_power_w.unwrap() - single(0b10)).abs() < 1e-9);
}

#[test]
fn algorithm_never_beats_the_oracle() {
    let options = AlgorithmOptions::default();
    for seed in 0..15 {
        let inst = small_instance(seed, 3).unwrap();
        let r = enumerate_clusters(&inst, DEFAULT_MAX_BITS).unwrap();
        let report = run_algorithm1(&inst, &options);
        if report.status == RunStatus::Feasible {
            let best = r.best_power_w.expect("a feasible output implies a feasible support");
            let relaxed = report.relaxed_objective_w.unwrap();
            assert!(relaxed >= best * (1.0 - 1e-6), "seed {seed}: {relaxed} < {best}");
            let pattern = report.pattern.unwrap();
            assert!(r.table.iter().any(|e| e.pattern == pattern), "seed {seed}: pattern not load-feasible");
        }
    }
}
