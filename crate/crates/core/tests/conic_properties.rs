//! Properties of solved relaxations on random small instances.

use fran_core::conic::{build_init_problem, build_program, build_ref_problem, solve, BackhaulRows, SolveStatus};
use fran_core::instance::Instance;
use fran_core::linalg::{hermitian_deviation, min_eigenvalue, trace_re, CVector};
use fran_core::scenario::MulticastGroup;
use num_complex::Complex64;
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Shape {
    rus: usize,
    antennas: usize,
    groups: Vec<usize>,
    channel: Vec<(f64, f64)>,
    targets: Vec<f64>,
    noise: f64,
}

fn shape() -> impl Strategy<Value = Shape> {
    (1usize..=3, 1usize..=2, proptest::collection::vec(1usize..=2, 1..=2), 1e-3f64..1.0).prop_flat_map(
        |(rus, antennas, groups, noise)| {
            let k: usize = groups.iter().sum();
            let m = groups.len();
            (
                Just(rus),
                Just(antennas),
                Just(groups),
                proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), k * rus * antennas),
                proptest::collection::vec(0.5f64..4.0, m),
                Just(noise),
            )
                .prop_map(|(rus, antennas, groups, channel, targets, noise)| Shape {
                    rus,
                    antennas,
                    groups,
                    channel,
                    targets,
                    noise,
                })
        },
    )
}

fn build(s: &Shape, noise_scale: f64) -> Instance {
    let dim = s.rus * s.antennas;
    let k: usize = s.groups.iter().sum();
    let channels = (0..k)
        .map(|u| CVector::from_fn(dim, |i, _| {
            let (re, im) = s.channel[u * dim + i];
            Complex64::new(re, im)
        }))
        .collect();
    let mut next = 0;
    let groups = s
        .groups
        .iter()
        .enumerate()
        .map(|(m, &size)| {
            let users = (next..next + size).collect();
            next += size;
            MulticastGroup { file: 10 + m, users, cached: false }
        })
        .collect();
    Instance::from_parts(
        s.rus,
        s.antennas,
        1e6,
        channels,
        groups,
        s.targets.clone(),
        vec![s.noise * noise_scale; k],
        vec![3e6; s.rus],
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn optimal_blocks_are_hermitian_psd_and_feasible(s in shape()) {
        let inst = build(&s, 1.0);
        let sol = solve(&build_init_problem(&inst).unwrap());
        prop_assume!(sol.status == SolveStatus::Optimal);
        let mut total = 0.0;
        for v in &sol.v {
            let tr = trace_re(v);
            total += tr;
            prop_assert!(hermitian_deviation(v) <= 1e-9 * tr.max(1.0));
            prop_assert!(min_eigenvalue(v) >= -1e-7 * tr.max(1.0));
        }
        prop_assert!((total - sol.objective_w).abs() <= 1e-6 * sol.objective_w);
        for k in inst.served_users() {
            let m = inst.user_group[k];
            let h = &inst.channel_outer[k];
            let gain = |i: usize| (&sol.v[i] * h).trace().re;
            let interference: f64 = (0..inst.num_groups()).filter(|&i| i != m).map(gain).sum();
            let lhs = inst.sinr_targets[m] * (inst.noise_powers[k] + interference) - gain(m);
            prop_assert!(lhs <= 1e-6 * inst.sinr_targets[m] * inst.noise_powers[k], "row {k}: {lhs}");
        }
    }

    #[test]
    fn objective_scales_with_noise(s in shape(), c in 0.1f64..10.0) {
        let a = solve(&build_init_problem(&build(&s, 1.0)).unwrap());
        let b = solve(&build_init_problem(&build(&s, c)).unwrap());
        prop_assume!(a.status == SolveStatus::Optimal);
        prop_assert_eq!(b.status, SolveStatus::Optimal);
        prop_assert!((b.objective_w / (c * a.objective_w) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn extra_rows_never_lower_the_objective(s in shape(), w in proptest::collection::vec(0.5f64..50.0, 6), drop in 0usize..6) {
        let inst = build(&s, 1.0);
        let base = solve(&build_init_problem(&inst).unwrap());
        prop_assume!(base.status == SolveStatus::Optimal);
        let weights: Vec<Vec<f64>> = (0..inst.num_groups())
            .map(|m| (0..inst.num_rus).map(|n| w[(m * 3 + n) % w.len()]).collect())
            .collect();
        let r = solve(&build_ref_problem(&inst, &weights).unwrap());
        if r.status == SolveStatus::Optimal {
            prop_assert!(r.objective_w >= base.objective_w * (1.0 - 1e-6));
        }
        let mut support = vec![vec![true; inst.num_rus]; inst.num_groups()];
        support[drop % inst.num_groups()][drop % inst.num_rus] = false;
        let restricted = solve(&build_program(&inst, BackhaulRows::None, Some(&support)).unwrap());
        if restricted.status == SolveStatus::Optimal {
            prop_assert!(restricted.objective_w >= base.objective_w * (1.0 - 1e-6));
            let (m, n) = (drop % inst.num_groups(), drop % inst.num_rus);
            prop_assert!(inst.ru_power(&restricted.v[m], n).abs() <= 1e-12);
        }
    }
}

#[test]
fn single_group_is_always_solved() {
    // a single multicast group with nonzero channels is always feasible
    let s = Shape {
        rus: 2,
        antennas: 2,
        groups: vec![2],
        channel: vec![(0.3, -0.1), (0.2, 0.5), (-0.7, 0.1), (0.05, 0.0), (0.1, 0.1), (-0.4, 0.9), (0.0, 0.3), (0.6, -0.6)],
        targets: vec![3.0],
        noise: 0.05,
    };
    let sol = solve(&build_init_problem(&build(&s, 1.0)).unwrap());
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!(sol.diagnostics.relative_gap <= 1e-7);
}
