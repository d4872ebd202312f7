use serde::{Deserialize, Serialize};

/// Two-sided 95% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes` out of `n` at 95%.
pub fn wilson_interval(successes: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = Z_95 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Sample mean and normal-approximation 95% half-width. The half-width
/// needs at least two samples.
pub fn mean_with_half_width(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    let n = xs.len();
    if n == 0 {
        return (None, None);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (Some(mean), None);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (Some(mean), Some(Z_95 * (var / n as f64).sqrt()))
}

/// Mean of `b - a` over indices where both are present.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedDifference {
    pub n: usize,
    pub mean: Option<f64>,
    pub half_width: Option<f64>,
}

impl PairedDifference {
    /// True when the mean increase exceeds the half-width, i.e. `b` is
    /// significantly larger than `a`.
    pub fn significantly_positive(&self) -> bool {
        match (self.mean, self.half_width) {
            (Some(m), Some(h)) => m > h,
            (Some(m), None) => m > 0.0,
            _ => false,
        }
    }
}

pub fn paired_difference(a: &[Option<f64>], b: &[Option<f64>]) -> PairedDifference {
    let d: Vec<f64> = a.iter().zip(b).filter_map(|(x, y)| Some((*y)? - (*x)?)).collect();
    let (mean, half_width) = mean_with_half_width(&d);
    PairedDifference { n: d.len(), mean, half_width }
}
