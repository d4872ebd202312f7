use crate::algorithm::{user_sinr, BeamformerSet};
use crate::error::{Error, Result};
use crate::instance::Instance;

/// SINR of user `k` under `beamformers`: own-group signal over noise plus
/// every other group's signal.
pub fn sinr(beamformers: &BeamformerSet, instance: &Instance, k: usize) -> Result<f64> {
    if k >= instance.num_users() {
        return Err(Error::InvalidArgument(format!("user {k} out of range")));
    }
    if instance.user_group[k] == usize::MAX {
        return Err(Error::InvalidArgument(format!("user {k} belongs to no group")));
    }
    if beamformers.vectors.len() != instance.num_groups() {
        return Err(Error::InvalidArgument("one beamformer per group required".into()));
    }
    Ok(user_sinr(instance, &beamformers.vectors, k))
}

/// `sum_m ||v_m||^2`, Watt.
pub fn total_power_w(beamformers: &BeamformerSet) -> f64 {
    beamformers.vectors.iter().map(|v| v.norm_squared()).sum()
}
