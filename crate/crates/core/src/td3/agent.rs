use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::adam::Adam;
use super::nn::{Activation, Gradients, Mlp};
use super::replay::Batch;
use super::Td3Config;
use crate::{seeded_rng, Error, Result, SimRng};

/// `[obs | action]` rows fed to a critic.
pub fn critic_input(obs: ArrayView2<f64>, actions: ArrayView2<f64>) -> Array2<f64> {
    concatenate![Axis(1), obs, actions]
}

/// Clipped double-Q target: `r + γ·(1 − done)·min(q1', q2')`, elementwise.
pub fn clipped_double_q_target(
    rewards: &Array1<f64>,
    dones: &Array1<f64>,
    q1_next: &Array1<f64>,
    q2_next: &Array1<f64>,
    gamma: f64,
) -> Array1<f64> {
    let mut y = Array1::zeros(rewards.len());
    Zip::from(&mut y)
        .and(rewards)
        .and(dones)
        .and(q1_next)
        .and(q2_next)
        .for_each(|y, &r, &d, &q1, &q2| *y = r + gamma * (1.0 - d) * q1.min(q2));
    y
}

/// Mean squared TD error of `critic` against `targets`, its parameter
/// gradients and the predicted Q values.
pub fn critic_loss_grads(
    critic: &Mlp,
    obs: ArrayView2<f64>,
    actions: ArrayView2<f64>,
    targets: &Array1<f64>,
) -> Result<(f64, Gradients, Array1<f64>)> {
    let input = critic_input(obs, actions);
    let cache = critic.forward_cached(input.view())?;
    let q = cache.output().column(0).to_owned();
    let b = q.len() as f64;
    let err = &q - targets;
    let loss = err.mapv(|e| e * e).sum() / b;
    let d_out = (err * (2.0 / b)).insert_axis(Axis(1));
    let (grads, _) = critic.backward(&cache, d_out);
    Ok((loss, grads, q))
}

/// Actor loss `−mean Q(s, π(s))` and its gradient w.r.t. the actor
/// parameters (the critic is held fixed).
pub fn actor_loss_grads(actor: &Mlp, critic: &Mlp, obs: ArrayView2<f64>) -> Result<(f64, Gradients)> {
    let actor_cache = actor.forward_cached(obs)?;
    let actions = actor_cache.output();
    let input = critic_input(obs, actions.view());
    let critic_cache = critic.forward_cached(input.view())?;
    let q = critic_cache.output();
    let b = q.nrows() as f64;
    let loss = -q.sum() / b;
    let d_q = Array2::from_elem((q.nrows(), 1), -1.0 / b);
    let d_input = critic.backward_input(&critic_cache, d_q);
    let d_actions = d_input.slice(s![.., obs.ncols()..]).to_owned();
    let (grads, _) = actor.backward(&actor_cache, d_actions);
    Ok((loss, grads))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    /// Mean of the two critics' losses.
    pub critic_loss: f64,
    /// Set on the updates where the actor moved.
    pub actor_loss: Option<f64>,
    pub mean_q: f64,
}

/// Actor, twin critics, their target copies and optimiser state.
#[derive(Debug, Clone)]
pub struct Td3Agent {
    pub actor: Mlp,
    pub critic1: Mlp,
    pub critic2: Mlp,
    pub actor_target: Mlp,
    pub critic1_target: Mlp,
    pub critic2_target: Mlp,
    actor_opt: Adam,
    critic1_opt: Adam,
    critic2_opt: Adam,
    pub cfg: Td3Config,
    updates: u64,
    rng: SimRng,
}

impl Td3Agent {
    pub fn new(obs_dim: usize, action_dim: usize, cfg: &Td3Config, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = seeded_rng(seed);
        let mut actor_sizes = vec![obs_dim];
        actor_sizes.extend(&cfg.hidden);
        actor_sizes.push(action_dim);
        let mut critic_sizes = vec![obs_dim + action_dim];
        critic_sizes.extend(&cfg.hidden);
        critic_sizes.push(1);

        let actor = Mlp::new(&actor_sizes, Activation::Relu, Activation::Tanh, &mut rng)?;
        let critic1 = Mlp::new(&critic_sizes, Activation::Relu, Activation::Identity, &mut rng)?;
        let critic2 = Mlp::new(&critic_sizes, Activation::Relu, Activation::Identity, &mut rng)?;
        Ok(Self {
            actor_opt: Adam::new(&actor, cfg.actor_lr),
            critic1_opt: Adam::new(&critic1, cfg.critic_lr),
            critic2_opt: Adam::new(&critic2, cfg.critic_lr),
            actor_target: actor.clone(),
            critic1_target: critic1.clone(),
            critic2_target: critic2.clone(),
            actor,
            critic1,
            critic2,
            cfg: cfg.clone(),
            updates: 0,
            rng,
        })
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.actor.output_dim()
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// Normalised actions in `[-1, 1]` for a batch of feature rows, with
    /// optional Gaussian exploration noise (clipped back into range).
    pub fn act<R: Rng + ?Sized>(
        &self,
        features: ArrayView2<f64>,
        noise: Option<(f64, &mut R)>,
    ) -> Result<Array2<f64>> {
        let mut a = self.actor.forward(features)?;
        if let Some((sigma, rng)) = noise {
            if sigma > 0.0 {
                let dist = Normal::new(0.0, sigma).map_err(|e| Error::config(e.to_string()))?;
                a.mapv_inplace(|v| v + dist.sample(rng));
            }
        }
        a.mapv_inplace(|v| v.clamp(-1.0, 1.0));
        Ok(a)
    }

    /// Critic regression targets for `batch` using smoothed target actions.
    pub fn td_targets(&mut self, batch: &Batch) -> Result<Array1<f64>> {
        let mut next_actions = self.actor_target.forward(batch.next_obs.view())?;
        let noise = Normal::new(0.0, self.cfg.target_noise.max(0.0))
            .map_err(|e| Error::config(e.to_string()))?;
        let clip = self.cfg.target_noise_clip;
        let rng = &mut self.rng;
        next_actions.mapv_inplace(|a| {
            let eps = if clip > 0.0 {
                noise.sample(rng).clamp(-clip, clip)
            } else {
                0.0
            };
            (a + eps).clamp(-1.0, 1.0)
        });
        let input = critic_input(batch.next_obs.view(), next_actions.view());
        let q1 = self.critic1_target.forward(input.view())?.column(0).to_owned();
        let q2 = self.critic2_target.forward(input.view())?.column(0).to_owned();
        Ok(clipped_double_q_target(
            &batch.rewards,
            &batch.dones,
            &q1,
            &q2,
            self.cfg.gamma,
        ))
    }

    /// One TD3 iteration on `batch`: both critics regress to the clipped
    /// double-Q target; every `policy_delay`-th call the actor ascends
    /// critic 1 and all target networks soft-update.
    pub fn update(&mut self, batch: &Batch) -> Result<UpdateStats> {
        if batch.is_empty() {
            return Err(Error::NotEnoughSamples {
                available: 0,
                requested: 1,
            });
        }
        let y = self.td_targets(batch)?;
        let (l1, g1, q1) = critic_loss_grads(&self.critic1, batch.obs.view(), batch.actions.view(), &y)?;
        let (l2, g2, _) = critic_loss_grads(&self.critic2, batch.obs.view(), batch.actions.view(), &y)?;
        if !(l1.is_finite() && l2.is_finite()) {
            return Err(Error::NonFinite(format!(
                "critic loss after {} updates: {l1} / {l2}",
                self.updates
            )));
        }
        self.critic1_opt.step(&mut self.critic1, &g1);
        self.critic2_opt.step(&mut self.critic2, &g2);
        self.updates += 1;

        let mut actor_loss = None;
        if self.updates % u64::from(self.cfg.policy_delay) == 0 {
            let (la, ga) = actor_loss_grads(&self.actor, &self.critic1, batch.obs.view())?;
            if !la.is_finite() {
                return Err(Error::NonFinite(format!(
                    "actor loss after {} updates: {la}",
                    self.updates
                )));
            }
            self.actor_opt.step(&mut self.actor, &ga);
            actor_loss = Some(la);
            self.soft_update_targets();
        }
        Ok(UpdateStats {
            critic_loss: 0.5 * (l1 + l2),
            actor_loss,
            mean_q: q1.mean().unwrap_or(0.0),
        })
    }

    pub fn soft_update_targets(&mut self) {
        let tau = self.cfg.tau;
        self.actor_target.soft_update_from(&self.actor, tau);
        self.critic1_target.soft_update_from(&self.critic1, tau);
        self.critic2_target.soft_update_from(&self.critic2, tau);
    }

    /// Rebuilds an agent from stored networks with fresh optimiser state.
    pub fn from_networks(nets: [Mlp; 6], cfg: &Td3Config, seed: u64) -> Self {
        let [actor, critic1, critic2, actor_target, critic1_target, critic2_target] = nets;
        Self {
            actor_opt: Adam::new(&actor, cfg.actor_lr),
            critic1_opt: Adam::new(&critic1, cfg.critic_lr),
            critic2_opt: Adam::new(&critic2, cfg.critic_lr),
            actor,
            critic1,
            critic2,
            actor_target,
            critic1_target,
            critic2_target,
            cfg: cfg.clone(),
            updates: 0,
            rng: seeded_rng(seed),
        }
    }
}
