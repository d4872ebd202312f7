use serde::{Deserialize, Serialize};

use crate::instance::Instance;
use crate::linalg::CMatrix;

/// `M x N` on/off matrix: `get(m, n)` is true iff RU `n` serves group `m`.
/// Serialized as a 0/1 matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClusterPattern {
    rows: Vec<Vec<bool>>,
}

impl ClusterPattern {
    pub fn new(rows: Vec<Vec<bool>>) -> Self {
        ClusterPattern { rows }
    }

    pub fn full(groups: usize, rus: usize) -> Self {
        ClusterPattern { rows: vec![vec![true; rus]; groups] }
    }

    pub fn num_groups(&self) -> usize {
        self.rows.len()
    }

    pub fn num_rus(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn get(&self, m: usize, n: usize) -> bool {
        self.rows[m][n]
    }

    pub fn set(&mut self, m: usize, n: usize, on: bool) {
        self.rows[m][n] = on;
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.rows
    }

    pub fn row_count(&self, m: usize) -> usize {
        self.rows[m].iter().filter(|&&b| b).count()
    }

    pub fn count(&self) -> usize {
        self.rows.iter().flatten().filter(|&&b| b).count()
    }

    /// True when every pair active here is also active in `other`.
    pub fn is_subset_of(&self, other: &ClusterPattern) -> bool {
        self.rows.iter().flatten().zip(other.rows.iter().flatten()).all(|(&a, &b)| !a || b)
    }

    pub fn intersect(&self, other: &ClusterPattern) -> ClusterPattern {
        ClusterPattern {
            rows: self
                .rows
                .iter()
                .zip(&other.rows)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| *x && *y).collect())
                .collect(),
        }
    }

    pub fn to_matrix(&self) -> Vec<Vec<u8>> {
        self.rows.iter().map(|r| r.iter().map(|&b| u8::from(b)).collect()).collect()
    }
}

impl Serialize for ClusterPattern {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_matrix().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ClusterPattern {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = Vec::<Vec<u8>>::deserialize(d)?;
        Ok(ClusterPattern { rows: m.into_iter().map(|r| r.into_iter().map(|x| x != 0).collect()).collect() })
    }
}

/// `P[m][n] = tr(V_m J_n)`, clamped at zero against round-off.
pub fn ru_powers(v: &[CMatrix], instance: &Instance) -> Vec<Vec<f64>> {
    v.iter()
        .map(|vm| (0..instance.num_rus).map(|n| instance.ru_power(vm, n).max(0.0)).collect())
        .collect()
}

/// On iff `tr(V_m J_n) > tau`.
pub fn extract_support(v: &[CMatrix], instance: &Instance, tau: f64) -> ClusterPattern {
    support_from_powers(&ru_powers(v, instance), tau)
}

pub fn support_from_powers(powers: &[Vec<f64>], tau: f64) -> ClusterPattern {
    ClusterPattern { rows: powers.iter().map(|r| r.iter().map(|&p| p > tau).collect()).collect() }
}
