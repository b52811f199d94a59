//! Training loop: shared-experience collection, delayed updates, periodic
//! evaluation at the test capture radius.

use std::fs::{self, File};
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};
use tracing::info;

use super::agent::{Td3Agent, UpdateStats};
use super::checkpoint::{save_checkpoint, Checkpoint, CheckpointMeta};
use super::curriculum::CurriculumState;
use super::policy::{features, observe_all, scale_action, Td3Policy};
use super::replay::{ReplayBuffer, Transition};
use super::Td3Config;
use crate::bench::{csv_err, evaluate, step_with_actions};
use crate::observation::{feature_len, Normalization, Observation};
use crate::rewards::{per_agent_rewards, RewardConfig};
use crate::sim::{reset_world, EvaderKind, Outcome, SimConfig, WorldState};
use crate::{seeded_rng, Error, Result, SimRng};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub sim: SimConfig,
    pub reward: RewardConfig,
    pub td3: Td3Config,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.reward.validate()?;
        self.td3.validate()?;
        if self.neighbor_cap() + 1 > self.sim.n_pursuers {
            return Err(Error::config(format!(
                "neighbor_cap {} needs more than {} pursuers",
                self.neighbor_cap(),
                self.sim.n_pursuers
            )));
        }
        Ok(())
    }

    pub fn neighbor_cap(&self) -> usize {
        self.td3
            .neighbor_cap
            .unwrap_or(self.sim.n_pursuers.saturating_sub(1))
    }

    pub fn action_dim(&self) -> usize {
        if self.sim.variable_speed {
            2
        } else {
            1
        }
    }

    /// Input scales fixed for the whole run (and stored in checkpoints).
    pub fn normalization(&self) -> Normalization {
        let fastest = self
            .td3
            .evader_speed_ratios
            .iter()
            .map(|r| r * self.sim.pursuer_speed)
            .fold(self.sim.evader_speed, f64::max);
        Normalization::from_config(&SimConfig {
            evader_speed: fastest,
            ..self.sim.clone()
        })
    }
}

/// Episode state of the training environment.
#[derive(Debug, Clone)]
pub struct TrainingEnv {
    /// Config of the running episode; its capture radius follows the
    /// curriculum.
    pub cfg: SimConfig,
    pub world: WorldState,
    pub obs: Vec<Observation>,
    pub norm: Normalization,
    pub neighbor_cap: usize,
    pub episodes: u64,
    speed_ratios: Vec<f64>,
    base_evader_speed: f64,
    rng: SimRng,
}

impl TrainingEnv {
    pub fn new(cfg: &TrainConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut env = Self {
            cfg: cfg.sim.clone(),
            world: reset_world(&cfg.sim, &mut seeded_rng(seed)),
            obs: Vec::new(),
            norm: cfg.normalization(),
            neighbor_cap: cfg.neighbor_cap(),
            episodes: 0,
            speed_ratios: cfg.td3.evader_speed_ratios.clone(),
            base_evader_speed: cfg.sim.evader_speed,
            rng: seeded_rng(seed),
        };
        env.reset()?;
        Ok(env)
    }

    pub fn reset(&mut self) -> Result<()> {
        self.cfg.evader_speed = if self.speed_ratios.is_empty() {
            self.base_evader_speed
        } else {
            let i = self.rng.random_range(0..self.speed_ratios.len());
            self.speed_ratios[i] * self.cfg.pursuer_speed
        };
        self.world = reset_world(&self.cfg, &mut self.rng);
        self.obs = observe_all(&self.world, self.neighbor_cap, &[])?;
        self.episodes += 1;
        Ok(())
    }

    pub fn features(&self) -> Array2<f64> {
        features(&self.obs, &self.norm)
    }

    pub fn rng(&mut self) -> &mut SimRng {
        &mut self.rng
    }
}

/// How actions are chosen during one collection step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Explore {
    /// Actor output only.
    Greedy,
    /// Actor output plus clipped Gaussian noise.
    Noisy(f64),
    /// Uniform in `[-1, 1]`, ignoring the actor.
    Random,
}

/// What one environment step produced.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub actions: Array2<f64>,
    pub rewards: Vec<f64>,
    pub outcome: Outcome,
}

/// Every pursuer acts with the shared actor on its own observation; all `n`
/// transitions go into `buffer`. Finished episodes are reset.
pub fn collect_step(
    env: &mut TrainingEnv,
    agent: &Td3Agent,
    buffer: &mut ReplayBuffer,
    explore: Explore,
    reward_cfg: &RewardConfig,
) -> Result<StepInfo> {
    let feats = env.features();
    let actions = match explore {
        Explore::Greedy => agent.act::<SimRng>(feats.view(), None)?,
        Explore::Noisy(sigma) => agent.act(feats.view(), Some((sigma, env.rng())))?,
        Explore::Random => {
            let rng = env.rng();
            Array2::from_shape_simple_fn((feats.nrows(), agent.action_dim()), || {
                rng.random_range(-1.0..=1.0)
            })
        }
    };
    let commands: Vec<_> = actions
        .rows()
        .into_iter()
        .map(|a| scale_action(a, &env.cfg))
        .collect();
    let next = step_with_actions(&env.world, &commands, [0.0, 0.0], &env.cfg)?;
    let rewards = per_agent_rewards(&env.world, &next, reward_cfg);
    let next_obs = observe_all(&next, env.neighbor_cap, &env.obs)?;
    let next_feats = features(&next_obs, &env.norm);
    // the time limit is not part of the state, so only captures end bootstrapping
    let done = matches!(next.outcome, Outcome::Captured { .. });
    for i in 0..next.n() {
        buffer.push(&Transition {
            obs: feats.row(i).to_vec(),
            action: actions.row(i).to_vec(),
            reward: rewards[i],
            next_obs: next_feats.row(i).to_vec(),
            done,
        })?;
    }
    let outcome = next.outcome;
    if outcome.is_running() {
        env.world = next;
        env.obs = next_obs;
    } else {
        env.reset()?;
    }
    Ok(StepInfo {
        actions,
        rewards,
        outcome,
    })
}

/// One row of the learning curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: u64,
    pub success_rate: f64,
    pub avg_steps: Option<f64>,
    /// Means over the updates since the previous row.
    pub mean_q: Option<f64>,
    pub critic_loss: Option<f64>,
    pub actor_loss: Option<f64>,
    /// Training capture radius at this step.
    pub d_cap: f64,
}

pub struct TrainOutcome {
    pub agent: Td3Agent,
    pub policy: Td3Policy,
    pub curve: Vec<CurvePoint>,
    pub checkpoint: Checkpoint,
}

#[derive(Default)]
struct Running {
    n: usize,
    critic: f64,
    q: f64,
    actor_n: usize,
    actor: f64,
}

impl Running {
    fn add(&mut self, s: &UpdateStats) {
        self.n += 1;
        self.critic += s.critic_loss;
        self.q += s.mean_q;
        if let Some(a) = s.actor_loss {
            self.actor_n += 1;
            self.actor += a;
        }
    }

    fn take(&mut self) -> (Option<f64>, Option<f64>, Option<f64>) {
        let out = (
            (self.n > 0).then(|| self.q / self.n as f64),
            (self.n > 0).then(|| self.critic / self.n as f64),
            (self.actor_n > 0).then(|| self.actor / self.actor_n as f64),
        );
        *self = Running::default();
        out
    }
}

fn checkpoint_of(cfg: &TrainConfig, agent: &Td3Agent, steps: u64) -> Checkpoint {
    Checkpoint {
        meta: CheckpointMeta {
            obs_dim: agent.obs_dim(),
            action_dim: agent.action_dim(),
            neighbor_cap: cfg.neighbor_cap(),
            n_pursuers: cfg.sim.n_pursuers,
            normalization: cfg.normalization(),
            variable_speed: cfg.sim.variable_speed,
            steps,
            networks: [
                "actor",
                "critic1",
                "critic2",
                "actor_target",
                "critic1_target",
                "critic2_target",
            ]
            .map(String::from)
            .to_vec(),
        },
        networks: vec![
            agent.actor.clone(),
            agent.critic1.clone(),
            agent.critic2.clone(),
            agent.actor_target.clone(),
            agent.critic1_target.clone(),
            agent.critic2_target.clone(),
        ],
    }
}

/// Writes the learning curve as CSV.
pub fn write_curve_csv<W: Write>(w: W, curve: &[CurvePoint]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for p in curve {
        out.serialize(p).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Trains one policy for `cfg.sim.n_pursuers` pursuers against the
/// repulsive evader. With `out_dir`, writes `curve.csv` and `policy.ckpt`
/// after every evaluation.
pub fn train(cfg: &TrainConfig, out_dir: Option<&Path>) -> Result<TrainOutcome> {
    cfg.validate()?;
    let td3 = &cfg.td3;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
    }
    let obs_dim = feature_len(cfg.neighbor_cap());
    let mut agent = Td3Agent::new(obs_dim, cfg.action_dim(), td3, td3.seed)?;
    let mut env = TrainingEnv::new(cfg, td3.seed.wrapping_add(1))?;
    let mut buffer = ReplayBuffer::new(td3.buffer_capacity, obs_dim, cfg.action_dim())?;
    let mut sample_rng = seeded_rng(td3.seed.wrapping_add(2));
    let mut curriculum = if td3.curriculum {
        let horizon = (td3.total_steps as f64 * td3.curriculum_fraction).round() as u64;
        CurriculumState::linear(td3.curriculum_start, cfg.sim.capture_radius, horizon)
    } else {
        CurriculumState::constant(cfg.sim.capture_radius)
    };
    let eval_cfg = cfg.sim.clone();
    let mut curve = Vec::new();
    let mut running = Running::default();

    let mut evaluate_now = |step: u64, agent: &Td3Agent, d_cap: f64, running: &mut Running| -> Result<()> {
        let policy = Td3Policy::new(agent.actor.clone(), cfg.normalization(), cfg.neighbor_cap())?;
        let stats = evaluate(&policy, EvaderKind::Repulsive, &eval_cfg, td3.eval_trials, td3.eval_seed)?;
        let (mean_q, critic_loss, actor_loss) = running.take();
        let point = CurvePoint {
            step,
            success_rate: stats.success_rate,
            avg_steps: stats.avg_steps_on_success,
            mean_q,
            critic_loss,
            actor_loss,
            d_cap,
        };
        info!(
            step,
            success = point.success_rate,
            avg_steps = ?point.avg_steps,
            critic_loss = ?point.critic_loss,
            d_cap,
            "evaluation"
        );
        curve.push(point);
        if let Some(dir) = out_dir {
            write_curve_csv(File::create(dir.join("curve.csv"))?, &curve)?;
            save_checkpoint(dir.join("policy.ckpt"), &checkpoint_of(cfg, agent, step))?;
        }
        Ok(())
    };

    for step in 0..td3.total_steps {
        env.cfg.capture_radius = curriculum.step(step);
        let explore = if step < td3.random_steps {
            Explore::Random
        } else {
            Explore::Noisy(td3.exploration_noise)
        };
        collect_step(&mut env, &agent, &mut buffer, explore, &cfg.reward)?;

        if step + 1 >= td3.learning_starts && buffer.len() >= td3.batch_size {
            for _ in 0..td3.updates_per_step {
                let batch = buffer.sample(td3.batch_size, &mut sample_rng)?;
                let stats = agent.update(&batch)?;
                running.add(&stats);
            }
        }

        let done = step + 1;
        if td3.eval_interval > 0 && done % td3.eval_interval == 0 && done != td3.total_steps {
            evaluate_now(done, &agent, env.cfg.capture_radius, &mut running)?;
        }
    }
    evaluate_now(td3.total_steps, &agent, env.cfg.capture_radius, &mut running)?;

    let policy = Td3Policy::new(agent.actor.clone(), cfg.normalization(), cfg.neighbor_cap())?;
    let checkpoint = checkpoint_of(cfg, &agent, td3.total_steps);
    Ok(TrainOutcome {
        agent,
        policy,
        curve,
        checkpoint,
    })
}
