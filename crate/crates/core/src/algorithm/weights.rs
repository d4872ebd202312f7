use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reweighting matrix `w[m][n] = 1 / (tau + P[m][n])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    pub values: Vec<Vec<f64>>,
    /// Iteration whose powers produced these weights.
    pub iteration: usize,
}

pub fn update_weights(powers: &[Vec<f64>], tau: f64) -> Result<WeightMatrix> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidArgument(format!("tau must be positive, got {tau}")));
    }
    let mut values = Vec::with_capacity(powers.len());
    for row in powers {
        let mut out = Vec::with_capacity(row.len());
        for &p in row {
            if !(p >= 0.0) || !p.is_finite() {
                return Err(Error::InvalidArgument(format!("power must be finite and >= 0, got {p}")));
            }
            out.push(1.0 / (tau + p));
        }
        values.push(out);
    }
    Ok(WeightMatrix { values, iteration: 0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spot_values() {
        let w = update_weights(&[vec![0.0, 1e-8]], 1e-8).unwrap();
        assert_eq!(w.values[0][0], 1e8);
        assert!((w.values[0][1] - 5e7).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(update_weights(&[vec![-1e-12]], 1e-8).is_err());
        assert!(update_weights(&[vec![0.0]], 0.0).is_err());
    }

    proptest! {
        #[test]
        fn strictly_decreasing_and_bounded(p in 0.0f64..10.0, dp in 1e-6f64..1.0, tau in 1e-10f64..1e-2) {
            let w = update_weights(&[vec![p, p + dp]], tau).unwrap();
            prop_assert!(w.values[0][1] < w.values[0][0]);
            prop_assert!(w.values[0][0] <= 1.0 / tau);
            let on = w.values[0][0] * p;
            prop_assert!((0.0..1.0).contains(&on));
        }
    }
}
