//! Exact minimum-power scaling for fixed beam directions.
//!
//! With `a[k][i] = |h_k^H u_i|^2` the constraints read `p >= T(p)`, where
//! `T_m(p) = max_{k in G_m} Gamma_m (sigma_k^2 + sum_{i != m} a[k][i] p_i) / a[k][m]`
//! is monotone and piecewise affine. The feasible set therefore has a least
//! element, which also minimizes `sum p`. It is found by policy iteration:
//! fix one binding user per group, solve the square linear system, then move
//! to the users that are violated at that point. The iterates increase
//! monotonically and the number of policies is finite.

use nalgebra::{DMatrix, DVector};

use crate::instance::Instance;
use crate::linalg::CVector;

const MAX_POLICY_STEPS: usize = 200;

/// `a[k][i] = |h_k^H u_i|^2` for every user and direction.
pub fn channel_gains(directions: &[CVector], instance: &Instance) -> Vec<Vec<f64>> {
    instance
        .channels
        .iter()
        .map(|h| directions.iter().map(|u| h.dotc(u).norm_sqr()).collect())
        .collect()
}

/// Minimum total power `p` such that every served user meets its target with
/// beams `sqrt(p_m) u_m`. `None` when no non-negative `p` exists.
pub fn power_scaling_lp(directions: &[CVector], instance: &Instance) -> Option<Vec<f64>> {
    let a = channel_gains(directions, instance);
    solve_gains(&a, instance)
}

pub(crate) fn solve_gains(a: &[Vec<f64>], instance: &Instance) -> Option<Vec<f64>> {
    let m = instance.num_groups();
    let users: Vec<&Vec<usize>> = instance.groups.iter().map(|g| &g.users).collect();
    if users.iter().any(|u| u.iter().any(|&k| !(a[k][instance.user_group[k]] > 0.0))) {
        return None;
    }
    let rhs_of = |k: usize, p: &[f64]| -> f64 {
        let g = instance.user_group[k];
        let interference: f64 = (0..m).filter(|&i| i != g).map(|i| a[k][i] * p[i]).sum();
        instance.sinr_targets[g] * (instance.noise_powers[k] + interference) / a[k][g]
    };
    let argmax = |grp: usize, p: &[f64]| -> (usize, f64) {
        users[grp]
            .iter()
            .map(|&k| (k, rhs_of(k, p)))
            .fold((usize::MAX, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best })
    };

    let zero = vec![0.0; m];
    let mut policy: Vec<usize> = (0..m).map(|g| argmax(g, &zero).0).collect();
    for _ in 0..MAX_POLICY_STEPS {
        // (I - B) p = d for the selected users
        let mut mat = DMatrix::<f64>::identity(m, m);
        let mut d = DVector::<f64>::zeros(m);
        for g in 0..m {
            let k = policy[g];
            let gamma = instance.sinr_targets[g];
            d[g] = gamma * instance.noise_powers[k] / a[k][g];
            for i in 0..m {
                if i != g {
                    mat[(g, i)] = -gamma * a[k][i] / a[k][g];
                }
            }
        }
        let p = mat.lu().solve(&d)?;
        // a positive solution exists iff the selected subsystem is feasible
        if p.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
            return None;
        }
        let p: Vec<f64> = p.iter().copied().collect();
        let mut changed = false;
        for g in 0..m {
            let (k, val) = argmax(g, &p);
            if k != policy[g] && val > p[g] * (1.0 + 1e-12) {
                policy[g] = k;
                changed = true;
            }
        }
        if !changed {
            return Some(p);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::MulticastGroup;
    use num_complex::Complex64;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn inst(channels: Vec<Vec<Complex64>>, groups: Vec<Vec<usize>>, gamma: f64, noise: f64) -> Instance {
        let n = channels[0].len();
        let k = channels.len();
        let m = groups.len();
        Instance::from_parts(
            n,
            1,
            1.0,
            channels.into_iter().map(CVector::from_vec).collect(),
            groups
                .into_iter()
                .enumerate()
                .map(|(i, users)| MulticastGroup { file: i + 1, users, cached: false })
                .collect(),
            vec![gamma; m],
            vec![noise; k],
            vec![1.0; n],
        )
        .unwrap()
    }

    #[test]
    fn single_user_closed_form() {
        let i = inst(vec![vec![c(2.0)]], vec![vec![0]], 10.0, 0.1);
        let p = power_scaling_lp(&[CVector::from_vec(vec![c(1.0)])], &i).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn zero_gain_is_infeasible() {
        let i = inst(vec![vec![c(1.0), c(0.0)]], vec![vec![0]], 1.0, 1.0);
        assert!(power_scaling_lp(&[CVector::from_vec(vec![c(0.0), c(1.0)])], &i).is_none());
    }

    #[test]
    fn orthogonal_groups_decouple() {
        let i = inst(vec![vec![c(2.0), c(0.0)], vec![c(0.0), c(3.0)]], vec![vec![0], vec![1]], 10.0, 0.1);
        let u = [CVector::from_vec(vec![c(1.0), c(0.0)]), CVector::from_vec(vec![c(0.0), c(1.0)])];
        let p = power_scaling_lp(&u, &i).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-14);
        assert!((p[1] - 1.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn strong_interference_is_infeasible() {
        // both users see both beams equally; Gamma = 1 needs p0 >= 1 + p1 and p1 >= 1 + p0
        let i = inst(vec![vec![c(1.0), c(1.0)], vec![c(1.0), c(1.0)]], vec![vec![0], vec![1]], 1.0, 1.0);
        let u = [CVector::from_vec(vec![c(1.0), c(0.0)]), CVector::from_vec(vec![c(0.0), c(1.0)])];
        assert!(power_scaling_lp(&u, &i).is_none());
    }
}
