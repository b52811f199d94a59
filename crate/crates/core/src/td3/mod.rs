//! Twin Delayed DDPG with experience shared across homogeneous pursuers.
//!
//! All pursuers run the same actor on their own observation; every
//! pursuer's transition goes into one replay buffer. Capture transitions are
//! terminal, timeouts are not (the time limit is not part of the state).

mod adam;
mod agent;
mod checkpoint;
mod curriculum;
pub mod nn;
mod policy;
mod replay;
mod trainer;

pub use adam::Adam;
pub use agent::{
    actor_loss_grads, clipped_double_q_target, critic_input, critic_loss_grads, Td3Agent,
    UpdateStats,
};
pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint, CheckpointMeta,
};
pub use curriculum::{curriculum_step, CurriculumState};
pub use policy::{scale_action, Td3Policy};
pub use replay::{Batch, ReplayBuffer, Transition};
pub use trainer::{
    collect_step, train, write_curve_csv, CurvePoint, Explore, StepInfo, TrainConfig, TrainOutcome,
    TrainingEnv,
};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Algorithm hyper-parameters and the training schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Td3Config {
    pub hidden: Vec<usize>,
    pub gamma: f64,
    pub tau: f64,
    /// Critic updates per actor/target update.
    pub policy_delay: u32,
    /// Std-dev of the Gaussian exploration noise, in normalised action units.
    pub exploration_noise: f64,
    pub target_noise: f64,
    pub target_noise_clip: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Environment steps with uniformly random actions before the actor acts.
    pub random_steps: u64,
    /// Environment steps before the first gradient update.
    pub learning_starts: u64,
    /// Gradient updates per environment step.
    pub updates_per_step: u32,
    /// Total environment steps.
    pub total_steps: u64,
    pub curriculum: bool,
    /// Initial capture radius of the curriculum (pixels).
    pub curriculum_start: f64,
    /// Fraction of `total_steps` over which the radius shrinks to the test
    /// radius.
    pub curriculum_fraction: f64,
    pub eval_interval: u64,
    pub eval_trials: usize,
    pub eval_seed: u64,
    pub seed: u64,
    /// Observe only the k nearest pursuers; `None` observes all of them.
    pub neighbor_cap: Option<usize>,
    /// Evader speeds (multiples of the pursuer speed) sampled per episode;
    /// empty keeps the configured evader speed.
    pub evader_speed_ratios: Vec<f64>,
}

impl Default for Td3Config {
    fn default() -> Self {
        Self {
            hidden: vec![256, 256],
            gamma: 0.99,
            tau: 0.005,
            policy_delay: 2,
            exploration_noise: 0.1,
            target_noise: 0.2,
            target_noise_clip: 0.5,
            batch_size: 256,
            buffer_capacity: 1_000_000,
            actor_lr: 3e-4,
            critic_lr: 3e-4,
            random_steps: 10_000,
            learning_starts: 10_000,
            updates_per_step: 1,
            total_steps: 4_000_000,
            curriculum: true,
            curriculum_start: 100.0,
            curriculum_fraction: 0.25,
            eval_interval: 25_000,
            eval_trials: 100,
            eval_seed: 1_000_000_000,
            seed: 0,
            neighbor_cap: None,
            evader_speed_ratios: Vec::new(),
        }
    }
}

impl Td3Config {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::config("gamma must lie in (0, 1)"));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::config("tau must lie in (0, 1]"));
        }
        if self.policy_delay == 0 || self.batch_size == 0 || self.buffer_capacity == 0 {
            return Err(Error::config(
                "policy_delay, batch_size and buffer_capacity must be positive",
            ));
        }
        if self.hidden.contains(&0) {
            return Err(Error::config("hidden layer sizes must be positive"));
        }
        if !(0.0..=1.0).contains(&self.curriculum_fraction) {
            return Err(Error::config("curriculum_fraction must lie in [0, 1]"));
        }
        if self.evader_speed_ratios.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::config("evader speed ratios must be non-negative"));
        }
        Ok(())
    }
}
