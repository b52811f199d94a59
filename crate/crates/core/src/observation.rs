//! Per-pursuer local observation.
//!
//! Feature layout (raw and normalised vectors share it):
//!
//! | index        | feature                                   | normaliser        |
//! |--------------|-------------------------------------------|-------------------|
//! | 0            | own heading ψ                             | π                 |
//! | 1            | own heading rate ψ̇ (last applied ω)       | ω_max             |
//! | 2            | distance to target d                      | 2·R_arena         |
//! | 3            | range rate ḋ                              | v_p + v_T         |
//! | 4            | heading error to target α                 | π                 |
//! | 5            | heading-error rate α̇                      | ω_max             |
//! | 6 + 2m       | distance to m-th neighbour                | 2·R_arena         |
//! | 7 + 2m       | heading error to m-th neighbour           | π                 |
//!
//! Neighbours are the `k` nearest other pursuers, listed in order of their
//! heading error mapped to `[0, 2π)` (a counter-clockwise sweep starting at
//! the observer's heading). Relabelling pursuers therefore never changes an
//! observation.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::geometry::{self, angle_0_2pi, wrap_angle, Vec2};
use crate::sim::{AgentState, SimConfig, WorldState};
use crate::{Error, Result};

/// Number of features before the first neighbour block.
pub const HEADER_LEN: usize = 6;

/// Feature count when observing `neighbors` other pursuers.
pub fn feature_len(neighbors: usize) -> usize {
    HEADER_LEN + 2 * neighbors
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeState {
    pub d: f64,
    /// Range rate; only meaningful for the target.
    pub d_dot: f64,
    /// Heading error in `[-π, π)`.
    pub alpha: f64,
    /// Heading-error rate; only meaningful for the target.
    pub alpha_dot: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighborState {
    pub d: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub psi: f64,
    pub psi_dot: f64,
    pub target: RelativeState,
    pub neighbors: Vec<NeighborState>,
}

impl Observation {
    pub fn len(&self) -> usize {
        feature_len(self.neighbors.len())
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Raw (unnormalised) features in the documented layout.
    pub fn to_features(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        out.extend([
            self.psi,
            self.psi_dot,
            self.target.d,
            self.target.d_dot,
            self.target.alpha,
            self.target.alpha_dot,
        ]);
        for nb in &self.neighbors {
            out.extend([nb.d, nb.alpha]);
        }
        out
    }
}

/// Range and bearing of `other` as seen from `observer`.
///
/// Rates are finite differences against `prev` (zero when absent); the
/// bearing difference is taken along the shortest signed arc. Coincident
/// points get `alpha = 0`.
pub fn relative_state(
    observer: &AgentState,
    other: Vec2,
    prev: Option<&RelativeState>,
) -> RelativeState {
    let delta = geometry::sub(other, observer.position());
    let d = geometry::norm(delta);
    let alpha = if d > 0.0 {
        wrap_angle(delta[1].atan2(delta[0]) - observer.psi)
    } else {
        0.0
    };
    let (d_dot, alpha_dot) = match prev {
        Some(p) => (d - p.d, wrap_angle(alpha - p.alpha)),
        None => (0.0, 0.0),
    };
    RelativeState {
        d,
        d_dot,
        alpha,
        alpha_dot,
    }
}

fn cmp_f64(a: f64, b: f64) -> Ordering {
    a.partial_cmp(&b).unwrap_or(Ordering::Equal)
}

/// Observation of pursuer `i` keeping its `k` nearest neighbours
/// (`k = n − 1` is the full observation). `prev` is the same pursuer's
/// observation on the previous step, used for the target rates.
pub fn build_observation(
    world: &WorldState,
    i: usize,
    k: usize,
    prev: Option<&Observation>,
) -> Result<Observation> {
    let n = world.n();
    if i >= n {
        return Err(Error::domain(format!("agent index {i} out of range for {n} pursuers")));
    }
    if k > n - 1 {
        return Err(Error::domain(format!(
            "neighbour cap {k} exceeds the {} other pursuers",
            n - 1
        )));
    }
    let me = &world.agents[i];
    let target = relative_state(me, world.evader.position(), prev.map(|p| &p.target));

    // (sweep key, distance, alpha, index)
    let mut others: Vec<(f64, f64, f64, usize)> = (0..n)
        .filter(|&j| j != i)
        .map(|j| {
            let rs = relative_state(me, world.agents[j].position(), None);
            (angle_0_2pi(rs.alpha), rs.d, rs.alpha, j)
        })
        .collect();

    if k < others.len() {
        // nearest first; equal distances fall back to the sweep key so the
        // choice never depends on labels
        others.sort_by(|a, b| {
            cmp_f64(a.1, b.1)
                .then(cmp_f64(a.0, b.0))
                .then(a.3.cmp(&b.3))
        });
        others.truncate(k);
    }
    others.sort_by(|a, b| {
        cmp_f64(a.0, b.0)
            .then(cmp_f64(a.1, b.1))
            .then(a.3.cmp(&b.3))
    });

    Ok(Observation {
        psi: me.psi,
        psi_dot: me.psi_dot_prev,
        target,
        neighbors: others
            .into_iter()
            .map(|(_, d, alpha, _)| NeighborState { d, alpha })
            .collect(),
    })
}

/// Scales mapping raw features into `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub distance: f64,
    pub range_rate: f64,
    pub turn_rate: f64,
}

impl Normalization {
    pub fn from_config(cfg: &SimConfig) -> Self {
        let range_rate = cfg.pursuer_speed + cfg.evader_speed;
        Self {
            distance: 2.0 * cfg.arena_radius,
            range_rate: if range_rate > 0.0 { range_rate } else { 1.0 },
            turn_rate: cfg.omega_max,
        }
    }

    fn scales(&self, len: usize) -> impl Iterator<Item = f64> + '_ {
        use std::f64::consts::PI;
        let head = [
            PI,
            self.turn_rate,
            self.distance,
            self.range_rate,
            PI,
            self.turn_rate,
        ];
        (0..len).map(move |idx| {
            if idx < HEADER_LEN {
                head[idx]
            } else if (idx - HEADER_LEN) % 2 == 0 {
                self.distance
            } else {
                PI
            }
        })
    }

    /// Divides each feature by its scale and clamps to `[-1, 1]`.
    pub fn apply(&self, obs: &Observation) -> Vec<f64> {
        let raw = obs.to_features();
        self.apply_raw(&raw)
    }

    pub fn apply_raw(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter()
            .zip(self.scales(raw.len()))
            .map(|(v, s)| (v / s).clamp(-1.0, 1.0))
            .collect()
    }

    /// Inverse of [`Normalization::apply_raw`] for unclamped features.
    pub fn invert(&self, features: &[f64]) -> Vec<f64> {
        features
            .iter()
            .zip(self.scales(features.len()))
            .map(|(v, s)| v * s)
            .collect()
    }
}

/// Normalised feature vector using scales derived from `cfg`.
pub fn normalize_observation(obs: &Observation, cfg: &SimConfig) -> Vec<f64> {
    Normalization::from_config(cfg).apply(obs)
}
