//! Rank-one beamformers from relaxed covariance matrices.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::power_lp::power_scaling_lp;
use super::support::ClusterPattern;
use crate::instance::Instance;
use crate::linalg::{hermitian_eigen, trace_re, CMatrix, CVector};

/// Largest accepted `lambda_2 / lambda_1` for direct EVD extraction.
pub const RANK_ONE_RATIO: f64 = 1e-6;
/// Relative SINR slack accepted on extracted beamformers.
pub const SINR_SLACK: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtractionMethod {
    Evd,
    /// Principal directions with powers from the scaling LP.
    EvdScaled,
    Randomized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamformerSet {
    pub vectors: Vec<CVector>,
    pub method: ExtractionMethod,
    /// `sum_m ||v_m||^2`, Watt.
    pub objective_w: f64,
}

impl BeamformerSet {
    fn new(vectors: Vec<CVector>, method: ExtractionMethod) -> Self {
        let objective_w = vectors.iter().map(|v| v.norm_squared()).sum();
        BeamformerSet { vectors, method, objective_w }
    }
}

/// `lambda_2 / lambda_1` of a Hermitian PSD matrix (0 for the zero matrix).
pub fn rank_ratio(v: &CMatrix) -> f64 {
    let (vals, _) = hermitian_eigen(v);
    match vals.as_slice() {
        [l1, l2, ..] if *l1 > 0.0 => l2.max(0.0) / l1,
        _ => 0.0,
    }
}

/// SINR of user `k` under `vectors`.
pub fn user_sinr(instance: &Instance, vectors: &[CVector], k: usize) -> f64 {
    let h = &instance.channels[k];
    let own = instance.user_group[k];
    let mut signal = 0.0;
    let mut interference = 0.0;
    for (i, v) in vectors.iter().enumerate() {
        let g = h.dotc(v).norm_sqr();
        if i == own {
            signal = g;
        } else {
            interference += g;
        }
    }
    signal / (instance.noise_powers[k] + interference)
}

/// Smallest `SINR_k / Gamma_k` over served users.
pub fn min_sinr_margin(instance: &Instance, vectors: &[CVector]) -> f64 {
    instance
        .served_users()
        .map(|k| user_sinr(instance, vectors, k) / instance.sinr_targets[instance.user_group[k]])
        .fold(f64::INFINITY, f64::min)
}

fn zero_outside(v: &mut CVector, pattern: &ClusterPattern, m: usize, l: usize) {
    for n in 0..pattern.num_rus() {
        if !pattern.get(m, n) {
            for i in n * l..(n + 1) * l {
                v[i] = Complex64::new(0.0, 0.0);
            }
        }
    }
}

fn principal(v: &CMatrix) -> (f64, CVector) {
    let (vals, vecs) = hermitian_eigen(v);
    (vals[0].max(0.0), vecs.column(0).into_owned())
}

/// Beamformers with powers from the scaling LP along unit directions.
fn scaled(instance: &Instance, dirs: Vec<CVector>) -> Option<BeamformerSet> {
    let p = power_scaling_lp(&dirs, instance)?;
    let v = dirs.into_iter().zip(p).map(|(u, pm)| u * Complex64::new(pm.sqrt(), 0.0)).collect();
    Some(BeamformerSet::new(v, ExtractionMethod::EvdScaled))
}

/// EVD when every block is numerically rank one, otherwise Gaussian
/// randomization. `None` if no candidate meets every SINR target.
pub fn extract_beamformers<R: Rng + ?Sized>(
    v: &[CMatrix],
    instance: &Instance,
    pattern: &ClusterPattern,
    candidates: usize,
    rng: &mut R,
) -> Option<BeamformerSet> {
    let l = instance.antennas_per_ru;
    let rank_one = v.iter().all(|vm| rank_ratio(vm) <= RANK_ONE_RATIO);
    if rank_one {
        let mut vecs = Vec::with_capacity(v.len());
        let mut dirs = Vec::with_capacity(v.len());
        for (m, vm) in v.iter().enumerate() {
            let (lam, mut u) = principal(vm);
            zero_outside(&mut u, pattern, m, l);
            let nu = u.norm();
            vecs.push(&u * Complex64::new(lam.sqrt(), 0.0));
            dirs.push(if nu > 0.0 { u.unscale(nu) } else { u });
        }
        if min_sinr_margin(instance, &vecs) >= 1.0 - SINR_SLACK {
            return Some(BeamformerSet::new(vecs, ExtractionMethod::Evd));
        }
        if let Some(b) = scaled(instance, dirs) {
            return Some(b);
        }
    }
    randomize_and_scale(v, instance, pattern, candidates, rng)
}

/// Gaussian randomization: each candidate draws `u_m ~ CN(0, V_m)`, zeroes
/// blocks outside the pattern, normalizes, and rescales powers exactly.
/// The principal directions are tried first as one extra candidate. Returns
/// the lowest-power candidate that meets every target.
pub fn randomize_and_scale<R: Rng + ?Sized>(
    v: &[CMatrix],
    instance: &Instance,
    pattern: &ClusterPattern,
    candidates: usize,
    rng: &mut R,
) -> Option<BeamformerSet> {
    let nl = instance.dim();
    let l = instance.antennas_per_ru;
    let factors: Vec<CMatrix> = v
        .iter()
        .map(|vm| {
            let jitter = 1e-12 * trace_re(vm).max(0.0) / nl as f64;
            let mut a = crate::linalg::hermitian_part(vm);
            for i in 0..nl {
                a[(i, i)] += Complex64::new(jitter.max(f64::MIN_POSITIVE), 0.0);
            }
            match a.clone().cholesky() {
                Some(c) => c.l(),
                None => {
                    // fall back to an eigen factor when round-off breaks Cholesky
                    let (vals, vecs) = hermitian_eigen(&a);
                    let mut f = vecs.clone();
                    for (j, lam) in vals.iter().enumerate() {
                        f.column_mut(j).scale_mut(lam.max(0.0).sqrt());
                    }
                    f
                }
            }
        })
        .collect();

    let normalize = |mut u: CVector, m: usize| -> CVector {
        zero_outside(&mut u, pattern, m, l);
        let n = u.norm();
        if n > 0.0 {
            u.unscale(n)
        } else {
            u
        }
    };

    let mut best: Option<BeamformerSet> = None;
    let consider = |cand: Option<BeamformerSet>, best: &mut Option<BeamformerSet>| {
        if let Some(c) = cand {
            if min_sinr_margin(instance, &c.vectors) >= 1.0 - SINR_SLACK
                && best.as_ref().is_none_or(|b| c.objective_w < b.objective_w)
            {
                *best = Some(c);
            }
        }
    };

    let dirs: Vec<CVector> = v.iter().enumerate().map(|(m, vm)| normalize(principal(vm).1, m)).collect();
    consider(scaled(instance, dirs), &mut best);

    for _ in 0..candidates {
        let dirs: Vec<CVector> = factors
            .iter()
            .enumerate()
            .map(|(m, f)| {
                let xi = CVector::from_fn(nl, |_, _| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
                });
                normalize(f * xi, m)
            })
            .collect();
        consider(scaled(instance, dirs), &mut best);
    }
    best.map(|mut b| {
        b.method = ExtractionMethod::Randomized;
        b
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::outer;
    use crate::rng::{stream, Stream};
    use crate::scenario::MulticastGroup;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn two_antenna() -> Instance {
        Instance::from_parts(
            2,
            1,
            1.0,
            vec![CVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)])],
            vec![MulticastGroup { file: 1, users: vec![0], cached: false }],
            vec![1.0],
            vec![1.0],
            vec![1.0, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn sinr_spot_value() {
        let inst = Instance::from_parts(
            2,
            1,
            1.0,
            vec![CVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]), CVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)])],
            vec![
                MulticastGroup { file: 1, users: vec![0], cached: false },
                MulticastGroup { file: 2, users: vec![1], cached: false },
            ],
            vec![1.0, 1.0],
            vec![1.0, 1.0],
            vec![1.0, 1.0],
        )
        .unwrap();
        let v = [CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]), CVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)])];
        assert!((user_sinr(&inst, &v, 0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rank_one_evd_recovers_vector() {
        let inst = two_antenna();
        let v = CVector::from_vec(vec![c(0.3, 0.4), c(0.5, -0.2)]);
        let vv = outer(&v) * c(1.0 / abs2(&inst, &v), 0.0);
        let mut rng = stream(1, Stream::Randomization);
        let b = extract_beamformers(&[vv.clone()], &inst, &ClusterPattern::full(1, 2), 10, &mut rng).unwrap();
        assert_eq!(b.method, ExtractionMethod::Evd);
        assert!((b.objective_w - trace_re(&vv)).abs() < 1e-9 * trace_re(&vv));
        let out = &b.vectors[0];
        let phase = out.dotc(&(&v * c(1.0 / abs2(&inst, &v).sqrt(), 0.0)));
        assert!((phase.norm() - trace_re(&vv)).abs() < 1e-9);
    }

    fn abs2(inst: &Instance, v: &CVector) -> f64 {
        inst.channels[0].dotc(v).norm_sqr()
    }

    #[test]
    fn randomization_on_rank_one_is_near_evd() {
        let inst = two_antenna();
        let h = inst.channels[0].clone();
        let vv = outer(&h) * c(0.25, 0.0);
        let mut rng = stream(3, Stream::Randomization);
        let r = randomize_and_scale(&[vv], &inst, &ClusterPattern::full(1, 2), 100, &mut rng).unwrap();
        // MRT optimum is Gamma sigma^2 / ||h||^2 = 0.5
        assert!(r.objective_w <= 1.2 * 0.5);
        assert!(r.objective_w >= 0.5 * (1.0 - 1e-12));
    }

    #[test]
    fn high_rank_falls_back_to_randomization() {
        let inst = two_antenna();
        let vv = CMatrix::identity(2, 2) * c(0.5, 0.0);
        let mut rng = stream(5, Stream::Randomization);
        let b = extract_beamformers(&[vv.clone()], &inst, &ClusterPattern::full(1, 2), 50, &mut rng).unwrap();
        assert_eq!(b.method, ExtractionMethod::Randomized);
        assert!(b.objective_w >= 0.5 - 1e-12);
        assert!(min_sinr_margin(&inst, &b.vectors) >= 1.0 - SINR_SLACK);
    }
}
