//! Joint multicast beamforming, dynamic radio-unit clustering and per-link
//! backhaul balancing for the downlink of a cache-enabled radio access
//! network.
//!
//! The pipeline is
//!
//! ```text
//! scenario (topology, drops, channels, requests)
//!     -> instance (one scheduling interval)
//!     -> algorithm (reweighted l1 over semidefinite relaxations, solved by conic)
//!     -> experiments (metrics, Monte-Carlo sweeps)
//! ```
//!
//! `oracle` holds brute-force and closed-form baselines used to validate the
//! main path on small problems.

pub mod algorithm;
pub mod conic;
pub mod error;
pub mod experiments;
pub mod instance;
pub mod linalg;
pub mod oracle;
pub mod rng;
pub mod scenario;

pub use error::{Error, Result};
