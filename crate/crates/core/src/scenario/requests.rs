use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `P(f) = f^-alpha / sum_j j^-alpha` for `f = 1..=F`.
pub fn zipf_pmf(num_files: usize, alpha: f64) -> Result<Vec<f64>> {
    if num_files == 0 {
        return Err(Error::InvalidArgument("Zipf needs at least one file".into()));
    }
    if !(alpha >= 0.0) {
        return Err(Error::InvalidArgument(format!("Zipf exponent {alpha} is negative")));
    }
    let weights: Vec<f64> = (1..=num_files).map(|f| (f as f64).powf(-alpha)).collect();
    // summing smallest-first keeps the normalizer accurate for large F
    let total: f64 = weights.iter().rev().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticastGroup {
    /// Requested file, 1-based popularity rank.
    pub file: usize,
    /// Scheduled-user indices (0..K) in this group, ascending.
    pub users: Vec<usize>,
    pub cached: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestRealization {
    /// File requested by each scheduled user.
    pub files: Vec<usize>,
    /// Groups ordered by file index.
    pub groups: Vec<MulticastGroup>,
    /// `cache_flags[m][n]`: file of group m is in the cache of RU n.
    pub cache_flags: Vec<Vec<bool>>,
}

impl RequestRealization {
    /// Groups users by requested file; files with index `<= cache_size` are
    /// cached at every RU.
    pub fn from_files(files: Vec<usize>, cache_size: usize, num_rus: usize) -> Self {
        let mut by_file: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (k, &f) in files.iter().enumerate() {
            by_file.entry(f).or_default().push(k);
        }
        let groups: Vec<MulticastGroup> = by_file
            .into_iter()
            .map(|(file, users)| MulticastGroup { file, users, cached: file <= cache_size })
            .collect();
        let cache_flags = groups.iter().map(|g| vec![g.cached; num_rus]).collect();
        RequestRealization { files, groups, cache_flags }
    }

    pub fn num_cached_groups(&self) -> usize {
        self.groups.iter().filter(|g| g.cached).count()
    }

    /// Group index of each scheduled user.
    pub fn group_of_user(&self) -> Vec<usize> {
        let mut out = vec![usize::MAX; self.files.len()];
        for (m, g) in self.groups.iter().enumerate() {
            for &k in &g.users {
                out[k] = m;
            }
        }
        out
    }
}

/// One i.i.d. file draw per scheduled user.
pub fn sample_requests<R: Rng + ?Sized>(
    pmf: &[f64],
    num_users: usize,
    cache_size: usize,
    num_rus: usize,
    rng: &mut R,
) -> Result<RequestRealization> {
    let dist = WeightedIndex::new(pmf)
        .map_err(|e| Error::InvalidArgument(format!("invalid pmf: {e}")))?;
    let files = (0..num_users).map(|_| dist.sample(rng) + 1).collect();
    Ok(RequestRealization::from_files(files, cache_size, num_rus))
}

/// Rejection-samples request draws until exactly `cached_requested` distinct
/// cached files appear.
pub fn sample_requests_conditioned<R: Rng + ?Sized>(
    pmf: &[f64],
    num_users: usize,
    cache_size: usize,
    num_rus: usize,
    cached_requested: usize,
    max_attempts: usize,
    rng: &mut R,
) -> Result<RequestRealization> {
    if cached_requested > cache_size.min(num_users) {
        return Err(Error::InvalidArgument(format!(
            "cannot request {cached_requested} distinct cached files with cache size {cache_size} and {num_users} users"
        )));
    }
    for _ in 0..max_attempts {
        let r = sample_requests(pmf, num_users, cache_size, num_rus, rng)?;
        if r.num_cached_groups() == cached_requested {
            return Ok(r);
        }
    }
    Err(Error::Conditioning(max_attempts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    #[test]
    fn uniform_when_alpha_zero() {
        assert_eq!(zipf_pmf(4, 0.0).unwrap(), vec![0.25; 4]);
    }

    #[test]
    fn harmonic_three() {
        let p = zipf_pmf(3, 1.0).unwrap();
        let expected = [6.0 / 11.0, 3.0 / 11.0, 2.0 / 11.0];
        for (a, b) in p.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn default_parameters_strictly_decreasing() {
        let p = zipf_pmf(100, 1.5).unwrap();
        assert!(p.windows(2).all(|w| w[0] > w[1]));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_files_rejected() {
        assert!(zipf_pmf(0, 1.0).is_err());
    }

    #[test]
    fn all_users_same_file() {
        let r = RequestRealization::from_files(vec![1; 5], 1, 7);
        assert_eq!(r.groups.len(), 1);
        assert_eq!(r.cache_flags, vec![vec![true; 7]]);
        assert_eq!(r.groups[0].users, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn seven_files_two_cached() {
        // 12 users, 7 distinct files of which {1, 3} are within S = 3
        let files = vec![1, 6, 3, 1, 12, 40, 6, 9, 1, 17, 3, 17];
        let r = RequestRealization::from_files(files, 3, 7);
        assert_eq!(r.groups.len(), 7);
        assert_eq!(r.num_cached_groups(), 2);
        let total: usize = r.groups.iter().map(|g| g.users.len()).sum();
        assert_eq!(total, 12);
        for (m, g) in r.groups.iter().enumerate() {
            assert!(r.cache_flags[m].iter().all(|&c| c == (g.file <= 3)));
        }
    }

    #[test]
    fn conditioning_hits_target() {
        let pmf = zipf_pmf(100, 1.5).unwrap();
        let mut rng = stream(9, Stream::Requests);
        for target in 1..=3 {
            let r = sample_requests_conditioned(&pmf, 12, 3, 7, target, 100_000, &mut rng).unwrap();
            assert_eq!(r.num_cached_groups(), target);
        }
        assert!(sample_requests_conditioned(&pmf, 12, 3, 7, 4, 10, &mut rng).is_err());
    }
}
