//! Fixed-capacity ring buffer shared by all pursuers.

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    /// True only for transitions that end the episode without bootstrapping.
    pub done: bool,
}

/// A sampled mini-batch, one row per transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub obs: Array2<f64>,
    pub actions: Array2<f64>,
    pub rewards: Array1<f64>,
    pub next_obs: Array2<f64>,
    pub dones: Array1<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    obs_dim: usize,
    action_dim: usize,
    cursor: usize,
    len: usize,
    obs: Vec<f64>,
    next_obs: Vec<f64>,
    actions: Vec<f64>,
    rewards: Vec<f64>,
    dones: Vec<f64>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, obs_dim: usize, action_dim: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::config("replay capacity must be positive"));
        }
        Ok(Self {
            capacity,
            obs_dim,
            action_dim,
            cursor: 0,
            len: 0,
            obs: Vec::new(),
            next_obs: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            dones: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Slot the next push will write.
    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn push(&mut self, t: &Transition) -> Result<()> {
        if t.obs.len() != self.obs_dim || t.next_obs.len() != self.obs_dim {
            return Err(Error::Shape {
                expected: self.obs_dim,
                actual: t.obs.len().max(t.next_obs.len()),
            });
        }
        if t.action.len() != self.action_dim {
            return Err(Error::Shape {
                expected: self.action_dim,
                actual: t.action.len(),
            });
        }
        let done = if t.done { 1.0 } else { 0.0 };
        if self.len < self.capacity {
            // still growing: the cursor always equals len here
            self.obs.extend_from_slice(&t.obs);
            self.next_obs.extend_from_slice(&t.next_obs);
            self.actions.extend_from_slice(&t.action);
            self.rewards.push(t.reward);
            self.dones.push(done);
            self.len += 1;
        } else {
            let i = self.cursor;
            self.obs[i * self.obs_dim..(i + 1) * self.obs_dim].copy_from_slice(&t.obs);
            self.next_obs[i * self.obs_dim..(i + 1) * self.obs_dim].copy_from_slice(&t.next_obs);
            self.actions[i * self.action_dim..(i + 1) * self.action_dim].copy_from_slice(&t.action);
            self.rewards[i] = t.reward;
            self.dones[i] = done;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
        Ok(())
    }

    /// Transition stored at slot `i`.
    pub fn get(&self, i: usize) -> Option<Transition> {
        (i < self.len).then(|| Transition {
            obs: self.obs[i * self.obs_dim..(i + 1) * self.obs_dim].to_vec(),
            action: self.actions[i * self.action_dim..(i + 1) * self.action_dim].to_vec(),
            reward: self.rewards[i],
            next_obs: self.next_obs[i * self.obs_dim..(i + 1) * self.obs_dim].to_vec(),
            done: self.dones[i] != 0.0,
        })
    }

    /// `batch` transitions drawn uniformly with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Batch> {
        if self.len == 0 || self.len < batch {
            return Err(Error::NotEnoughSamples {
                available: self.len,
                requested: batch,
            });
        }
        let idx: Vec<usize> = (0..batch).map(|_| rng.random_range(0..self.len)).collect();
        Ok(self.gather(&idx))
    }

    /// Batch made of the given slots, in order.
    pub fn gather(&self, idx: &[usize]) -> Batch {
        let b = idx.len();
        let (od, ad) = (self.obs_dim, self.action_dim);
        let mut obs = Array2::zeros((b, od));
        let mut next_obs = Array2::zeros((b, od));
        let mut actions = Array2::zeros((b, ad));
        let mut rewards = Array1::zeros(b);
        let mut dones = Array1::zeros(b);
        for (row, &i) in idx.iter().enumerate() {
            obs.row_mut(row)
                .iter_mut()
                .zip(&self.obs[i * od..(i + 1) * od])
                .for_each(|(d, s)| *d = *s);
            next_obs
                .row_mut(row)
                .iter_mut()
                .zip(&self.next_obs[i * od..(i + 1) * od])
                .for_each(|(d, s)| *d = *s);
            actions
                .row_mut(row)
                .iter_mut()
                .zip(&self.actions[i * ad..(i + 1) * ad])
                .for_each(|(d, s)| *d = *s);
            rewards[row] = self.rewards[i];
            dones[row] = self.dones[i];
        }
        Batch {
            obs,
            actions,
            rewards,
            next_obs,
            dones,
        }
    }
}
