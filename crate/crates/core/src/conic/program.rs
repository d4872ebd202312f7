//! Real-embedded conic programs for the relaxed beamforming problems.
//!
//! Variables are one real symmetric PSD block `X_m` per multicast group, the
//! embedding of `V_m / P` restricted to the RUs the block may use, where `P`
//! is the program's power scale. Every row reads
//! `sum_m <A_rm, X_m> <= rhs_r` with `A_rm` stored as a short sum of weighted
//! rank-one terms.
//!
//! Normalization: SINR rows are divided by `sigma_k^2`, backhaul rows by
//! `C_BH,n` (or by their largest coefficient when `C_BH,n = 0`). The factor 2
//! of the embedding is folded into every coefficient, so `<A, X>` equals the
//! complex-domain quantity.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankOne {
    pub weight: f64,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockTerm {
    pub block: usize,
    pub factors: Vec<RankOne>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowLabel {
    Sinr { user: usize },
    Backhaul { ru: usize },
    AggregateBackhaul,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintRow {
    pub label: RowLabel,
    pub terms: Vec<BlockTerm>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdBlock {
    pub group: usize,
    /// RUs whose antenna coordinates this block covers, ascending.
    pub rus: Vec<usize>,
    /// Objective is `trace_cost * tr(X)`.
    pub trace_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConicProgram {
    pub num_rus: usize,
    pub antennas_per_ru: usize,
    /// Watt per internal power unit.
    pub power_scale: f64,
    pub blocks: Vec<PsdBlock>,
    pub rows: Vec<ConstraintRow>,
    /// Optional expected magnitude of each block's diagonal, per complex
    /// coordinate and in internal units. Solvers may use it to rescale
    /// variables; it does not change the problem.
    #[serde(default)]
    pub scaling: Option<Vec<Vec<f64>>>,
}

impl ConicProgram {
    pub fn complex_dim(&self) -> usize {
        self.num_rus * self.antennas_per_ru
    }

    pub fn block_complex_dim(&self, b: usize) -> usize {
        self.blocks[b].rus.len() * self.antennas_per_ru
    }

    pub fn block_real_dim(&self, b: usize) -> usize {
        2 * self.block_complex_dim(b)
    }

    pub fn num_sinr_rows(&self) -> usize {
        self.rows.iter().filter(|r| matches!(r.label, RowLabel::Sinr { .. })).count()
    }

    pub fn num_backhaul_rows(&self) -> usize {
        self.rows.len() - self.num_sinr_rows()
    }

    /// Sets the scaling hint from expected per-(group, RU) powers in Watt.
    pub fn with_power_hint(mut self, powers: &[Vec<f64>]) -> Self {
        let l = self.antennas_per_ru as f64;
        let hint = self
            .blocks
            .iter()
            .map(|b| {
                b.rus
                    .iter()
                    .flat_map(|&n| {
                        let v = powers[b.group][n] / (self.power_scale * l);
                        std::iter::repeat_n(v, self.antennas_per_ru)
                    })
                    .collect()
            })
            .collect();
        self.scaling = Some(hint);
        self
    }

    /// Dense `A_rb` for row `r`, block `b`.
    pub fn dense_term(&self, r: usize, b: usize) -> nalgebra::DMatrix<f64> {
        let n = self.block_real_dim(b);
        let mut a = nalgebra::DMatrix::zeros(n, n);
        for t in self.rows[r].terms.iter().filter(|t| t.block == b) {
            for f in &t.factors {
                let u = nalgebra::DVector::from_column_slice(&f.vector);
                a += (&u * u.transpose()) * f.weight;
            }
        }
        a
    }

    /// Plain-text interchange dump: block sizes, objective, and every row as
    /// a list of weighted rank-one factors.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "conic-program v1");
        let _ = writeln!(s, "power_scale {:e}", self.power_scale);
        let _ = writeln!(s, "blocks {}", self.blocks.len());
        for (b, blk) in self.blocks.iter().enumerate() {
            let rus: Vec<String> = blk.rus.iter().map(|r| r.to_string()).collect();
            let _ = writeln!(
                s,
                "block {b} group {} dim {} trace_cost {:e} rus [{}]",
                blk.group,
                self.block_real_dim(b),
                blk.trace_cost,
                rus.join(",")
            );
        }
        let _ = writeln!(s, "rows {}", self.rows.len());
        for (r, row) in self.rows.iter().enumerate() {
            let label = match row.label {
                RowLabel::Sinr { user } => format!("sinr user {user}"),
                RowLabel::Backhaul { ru } => format!("backhaul ru {ru}"),
                RowLabel::AggregateBackhaul => "backhaul aggregate".to_string(),
            };
            let _ = writeln!(s, "row {r} {label} le {:e} terms {}", row.rhs, row.terms.len());
            for t in &row.terms {
                let _ = writeln!(s, "  term block {} factors {}", t.block, t.factors.len());
                for f in &t.factors {
                    let v: Vec<String> = f.vector.iter().map(|x| format!("{x:e}")).collect();
                    let _ = writeln!(s, "    {:e} {}", f.weight, v.join(" "));
                }
            }
        }
        s
    }
}

/// Which backhaul rows to add on top of the SINR rows.
#[derive(Debug, Clone, PartialEq)]
pub enum BackhaulRows<'a> {
    None,
    /// One row per RU: `sum_m R[m][n] w[m][n] tr(V_m J_n) <= C_n`.
    Individual(&'a [Vec<f64>]),
    /// One pooled row over all RUs against `sum_n C_n`.
    Aggregate(&'a [Vec<f64>]),
}

/// Single-user matched-filter power of the weakest user, used to keep the
/// internal variables of order one.
fn power_scale(instance: &Instance) -> f64 {
    let p = instance
        .served_users()
        .map(|k| {
            let g = instance.user_group[k];
            instance.sinr_targets[g] * instance.noise_powers[k] / instance.channels[k].norm_squared()
        })
        .filter(|p| p.is_finite())
        .fold(0.0f64, f64::max);
    if p > 0.0 {
        p
    } else {
        1.0
    }
}

fn check_weights(instance: &Instance, w: &[Vec<f64>]) -> Result<()> {
    if w.len() != instance.num_groups() || w.iter().any(|r| r.len() != instance.num_rus) {
        return Err(Error::InvalidArgument("weight matrix must be M x N".into()));
    }
    if w.iter().flatten().any(|x| !(*x > 0.0) || !x.is_finite()) {
        return Err(Error::InvalidArgument("weights must be positive and finite".into()));
    }
    Ok(())
}

/// General builder. `support[m][n] = false` removes RU `n` from block `m`,
/// which is the same as the hard constraint `tr(V_m J_n) = 0`.
pub fn build_program(
    instance: &Instance,
    backhaul: BackhaulRows<'_>,
    support: Option<&[Vec<bool>]>,
) -> Result<ConicProgram> {
    let m_groups = instance.num_groups();
    let n_ru = instance.num_rus;
    let l = instance.antennas_per_ru;
    if let Some(s) = support {
        if s.len() != m_groups || s.iter().any(|r| r.len() != n_ru) {
            return Err(Error::InvalidArgument("support must be M x N".into()));
        }
    }
    match backhaul {
        BackhaulRows::Individual(w) | BackhaulRows::Aggregate(w) => check_weights(instance, w)?,
        BackhaulRows::None => {}
    }
    let scale = power_scale(instance);
    let blocks: Vec<PsdBlock> = (0..m_groups)
        .map(|m| PsdBlock {
            group: m,
            rus: (0..n_ru).filter(|&n| support.is_none_or(|s| s[m][n])).collect(),
            trace_cost: 0.5,
        })
        .collect();

    // complex coordinates (into the aggregated N*L vector) covered by a block
    let coords: Vec<Vec<usize>> = blocks
        .iter()
        .map(|b| b.rus.iter().flat_map(|&n| n * l..(n + 1) * l).collect())
        .collect();

    let mut rows = Vec::new();
    for k in instance.served_users() {
        let own = instance.user_group[k];
        let gamma = instance.sinr_targets[own];
        // tr(V H) = <X, embed(H)> / 2, and the row is divided by sigma^2
        let c = 0.5 * scale / instance.noise_powers[k];
        let h = &instance.channels[k];
        let mut terms = Vec::new();
        for (b, cs) in coords.iter().enumerate() {
            if cs.is_empty() {
                continue;
            }
            let d = cs.len();
            let mut a = vec![0.0; 2 * d];
            let mut bv = vec![0.0; 2 * d];
            for (i, &ci) in cs.iter().enumerate() {
                let z = h[ci];
                a[i] = z.re;
                a[d + i] = z.im;
                bv[i] = -z.im;
                bv[d + i] = z.re;
            }
            let weight = if b == own { -c } else { gamma * c };
            terms.push(BlockTerm {
                block: b,
                factors: vec![RankOne { weight, vector: a }, RankOne { weight, vector: bv }],
            });
        }
        rows.push(ConstraintRow { label: RowLabel::Sinr { user: k }, terms, rhs: -gamma });
    }

    // backhaul terms for RU n in block m: unit vectors of its real and imag coordinates
    let ru_terms = |m: usize, n: usize, coef: f64| -> Option<BlockTerm> {
        let cs = &coords[m];
        let d = cs.len();
        let pos = cs.iter().position(|&c| c == n * l)?;
        let factors = (0..l)
            .flat_map(|a| [pos + a, d + pos + a])
            .map(|i| {
                let mut e = vec![0.0; 2 * d];
                e[i] = 1.0;
                RankOne { weight: 0.5 * coef, vector: e }
            })
            .collect();
        Some(BlockTerm { block: m, factors })
    };

    match backhaul {
        BackhaulRows::None => {}
        BackhaulRows::Individual(w) => {
            for n in 0..n_ru {
                let raw: Vec<f64> = (0..m_groups).map(|m| instance.rates[m][n] * w[m][n] * scale).collect();
                let cap = instance.capacities[n];
                let (norm, rhs) = if cap > 0.0 {
                    (cap, 1.0)
                } else {
                    (raw.iter().copied().fold(0.0, f64::max).max(1.0), 0.0)
                };
                let terms = (0..m_groups)
                    .filter(|&m| raw[m] > 0.0)
                    .filter_map(|m| ru_terms(m, n, raw[m] / norm))
                    .collect();
                rows.push(ConstraintRow { label: RowLabel::Backhaul { ru: n }, terms, rhs });
            }
        }
        BackhaulRows::Aggregate(w) => {
            let cap: f64 = instance.capacities.iter().sum();
            let max_raw = (0..m_groups)
                .flat_map(|m| (0..n_ru).map(move |n| (m, n)))
                .map(|(m, n)| instance.rates[m][n] * w[m][n] * scale)
                .fold(0.0, f64::max);
            let (norm, rhs) = if cap > 0.0 { (cap, 1.0) } else { (max_raw.max(1.0), 0.0) };
            let mut terms: Vec<BlockTerm> = Vec::new();
            for m in 0..m_groups {
                let mut factors = Vec::new();
                for n in 0..n_ru {
                    let raw = instance.rates[m][n] * w[m][n] * scale;
                    if raw > 0.0 {
                        if let Some(t) = ru_terms(m, n, raw / norm) {
                            factors.extend(t.factors);
                        }
                    }
                }
                if !factors.is_empty() {
                    terms.push(BlockTerm { block: m, factors });
                }
            }
            rows.push(ConstraintRow { label: RowLabel::AggregateBackhaul, terms, rhs });
        }
    }

    let program = ConicProgram { num_rus: n_ru, antennas_per_ru: l, power_scale: scale, blocks, rows, scaling: None };
    debug_assert!(program
        .rows
        .iter()
        .all(|r| r.rhs.is_finite() && r.terms.iter().all(|t| t.factors.iter().all(|f| f.weight.is_finite()))));
    Ok(program)
}

/// Relaxed problem without backhaul rows.
pub fn build_init_problem(instance: &Instance) -> Result<ConicProgram> {
    build_program(instance, BackhaulRows::None, None)
}

/// Relaxed problem with reweighted per-RU backhaul rows.
pub fn build_ref_problem(instance: &Instance, weights: &[Vec<f64>]) -> Result<ConicProgram> {
    build_program(instance, BackhaulRows::Individual(weights), None)
}
