//! Multi-agent pursuit-evasion with non-holonomic pursuers.
//!
//! The crate is organised bottom-up:
//!
//! * [`sim`] — unicycle kinematics, arena clamping, capture detection and
//!   episode stepping on a value-typed [`sim::WorldState`].
//! * [`observation`] — per-pursuer local features with sweep-angle neighbour
//!   ordering and optional k-nearest truncation.
//! * [`rewards`] — captor/helper terminal rewards and the dense
//!   formation-score + distance penalty.
//! * [`evaders`] — repulsive potential-field evader, the three fixed paths and
//!   an externally commanded evader.
//! * [`baselines`] — classical omnidirectional pursuit heuristics adapted to
//!   unicycle agents through a heading P-controller.
//! * [`td3`] — a from-scratch Twin Delayed DDPG trainer with a shared replay
//!   buffer and a capture-radius curriculum.
//! * [`bench`] — trial runner, parameter sweeps and trajectory export.
//!
//! Everything that consumes randomness takes an explicit seed; the same seed
//! and configuration always reproduce the same trajectory.

pub mod baselines;
pub mod bench;
pub mod config;
mod error;
pub mod evaders;
pub mod geometry;
pub mod observation;
pub mod policy;
pub mod rewards;
pub mod sim;
pub mod td3;

pub use error::{Error, Result};

/// Deterministic generator used everywhere a seed is accepted.
pub type SimRng = rand_chacha::ChaCha8Rng;

/// Builds the crate's deterministic generator from a 64-bit seed.
pub fn seeded_rng(seed: u64) -> SimRng {
    use rand::SeedableRng;
    SimRng::seed_from_u64(seed)
}
