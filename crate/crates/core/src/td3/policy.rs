use ndarray::{Array2, ArrayView1};

use super::checkpoint::Checkpoint;
use super::nn::Mlp;
use crate::observation::{build_observation, Normalization, Observation};
use crate::policy::PursuitPolicy;
use crate::sim::{Action, SimConfig, WorldState};
use crate::{Error, Result};

/// Maps one normalised actor output row to a command: `ω = a₀·ω_max`, and in
/// variable-speed mode `v = (a₁ + 1)/2 · v_p`, else `v = v_p`.
pub fn scale_action(a: ArrayView1<f64>, cfg: &SimConfig) -> Action {
    let omega = a[0].clamp(-1.0, 1.0) * cfg.omega_max;
    let v = if cfg.variable_speed && a.len() > 1 {
        (a[1].clamp(-1.0, 1.0) + 1.0) * 0.5 * cfg.pursuer_speed
    } else {
        cfg.pursuer_speed
    };
    Action { omega, v }
}

/// Learned policy: the same actor applied to every pursuer's observation.
#[derive(Debug, Clone)]
pub struct Td3Policy {
    pub actor: Mlp,
    pub norm: Normalization,
    pub neighbor_cap: usize,
    prev_obs: Vec<Observation>,
}

impl Td3Policy {
    pub fn new(actor: Mlp, norm: Normalization, neighbor_cap: usize) -> Result<Self> {
        let expected = crate::observation::feature_len(neighbor_cap);
        if actor.input_dim() != expected {
            return Err(Error::Shape {
                expected,
                actual: actor.input_dim(),
            });
        }
        Ok(Self {
            actor,
            norm,
            neighbor_cap,
            prev_obs: Vec::new(),
        })
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        Self::new(ckpt.actor().clone(), ckpt.meta.normalization, ckpt.meta.neighbor_cap)
    }

    /// Raw observations for every pursuer, then the normalised feature
    /// matrix. Updates the per-agent observation memory.
    pub fn observe(&mut self, world: &WorldState) -> Result<Array2<f64>> {
        let obs = observe_all(world, self.neighbor_cap, &self.prev_obs)?;
        let feats = features(&obs, &self.norm);
        self.prev_obs = obs;
        Ok(feats)
    }
}

/// Observations of all pursuers; `prev` may be empty at episode start.
pub(crate) fn observe_all(
    world: &WorldState,
    cap: usize,
    prev: &[Observation],
) -> Result<Vec<Observation>> {
    if cap + 1 > world.n() {
        return Err(Error::config(format!(
            "policy observes {cap} neighbours but only {} pursuers exist",
            world.n()
        )));
    }
    (0..world.n())
        .map(|i| build_observation(world, i, cap, prev.get(i)))
        .collect()
}

pub(crate) fn features(obs: &[Observation], norm: &Normalization) -> Array2<f64> {
    let dim = obs.first().map_or(0, Observation::len);
    let flat: Vec<f64> = obs.iter().flat_map(|o| norm.apply(o)).collect();
    Array2::from_shape_vec((obs.len(), dim), flat).expect("observations share a length")
}

impl PursuitPolicy for Td3Policy {
    fn name(&self) -> &'static str {
        "td3"
    }

    fn reset(&mut self) {
        self.prev_obs.clear();
    }

    fn act(&mut self, world: &WorldState, cfg: &SimConfig) -> Result<Vec<Action>> {
        if world.t == 0 {
            self.prev_obs.clear();
        }
        let feats = self.observe(world)?;
        let out = self.actor.forward(feats.view())?;
        Ok(out.rows().into_iter().map(|a| scale_action(a, cfg)).collect())
    }

    fn box_clone(&self) -> Box<dyn PursuitPolicy> {
        Box::new(self.clone())
    }
}
