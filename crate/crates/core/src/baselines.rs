//! Classical pursuit heuristics adapted to unicycle pursuers.
//!
//! Each heuristic produces an omnidirectional velocity `(dx, dy)`; a heading
//! P-controller turns that into a bounded turn rate while the pursuer keeps
//! its constant forward speed.
//!
//! The two group heuristics are simplified re-statements of published
//! particle models, not bit-faithful ports:
//!
//! * Janosov-style: chase a linearly predicted aim point, soft repulsion
//!   between nearby pursuers, and a wall-softening term near the boundary.
//! * Angelani-style: Vicsek alignment with nearby pursuers' headings plus
//!   target attraction and short-range repulsion.


use serde::{Deserialize, Serialize};
use tracing::warn;

use crate::bench::{run_trial, TrialOptions};
use crate::geometry::{self, wrap_angle, Vec2};
use crate::policy::{PolicyKind, PursuitPolicy};
use crate::sim::{Action, EvaderKind, SimConfig, WorldState};
use crate::{Error, Result};

/// Smallest distance used in inverse-distance repulsion terms.
const MIN_PAIR_DISTANCE: f64 = 1.0;
const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadingController {
    /// Proportional gain on the wrapped heading error (per step).
    pub gain: f64,
    pub omega_max: f64,
}

impl HeadingController {
    pub fn new(gain: f64, omega_max: f64) -> Result<Self> {
        if !(gain > 0.0 && gain.is_finite()) {
            return Err(Error::config(format!("controller gain must be positive, got {gain}")));
        }
        Ok(Self { gain, omega_max })
    }
}

/// Turn rate steering heading `psi` toward the direction of `(dx, dy)`:
/// `ω = clamp(K · wrap(atan2(dy, dx) − ψ), ±ω_max)`. A zero velocity gives 0.
pub fn heading_to_omega(ctrl: &HeadingController, psi: f64, dx: f64, dy: f64) -> f64 {
    if dx == 0.0 && dy == 0.0 {
        return 0.0;
    }
    let desired = dy.atan2(dx);
    (ctrl.gain * wrap_angle(desired - psi)).clamp(-ctrl.omega_max, ctrl.omega_max)
}

/// Deterministic unit direction separating coincident pursuers `i` and `j`.
/// Antisymmetric in its arguments.
fn tie_break_direction(i: usize, j: usize) -> Vec2 {
    let lo = i.min(j);
    let hi = i.max(j);
    let theta = GOLDEN_ANGLE * (lo as f64 + 1.0) + 0.5 * GOLDEN_ANGLE * hi as f64;
    let d = [theta.cos(), theta.sin()];
    if i < j {
        d
    } else {
        [-d[0], -d[1]]
    }
}

/// Unit vector from pursuer `j` to pursuer `i` and their distance.
fn away_from(world: &WorldState, i: usize, j: usize) -> (Vec2, f64) {
    let diff = geometry::sub(world.agents[i].position(), world.agents[j].position());
    let d = geometry::norm(diff);
    match geometry::unit(diff) {
        Some(u) => (u, d),
        None => (tie_break_direction(i, j), 0.0),
    }
}

fn cap_norm(v: Vec2, max: f64) -> Vec2 {
    let n = geometry::norm(v);
    if n > max && n > 0.0 {
        geometry::scale(v, max / n)
    } else {
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JanosovParams {
    /// How far ahead (steps) the target's position is extrapolated.
    pub prediction_horizon: f64,
    /// Pursuers closer than this repel each other.
    pub repulsion_radius: f64,
    /// Repulsion speed at zero separation, as a fraction of `v_p`.
    pub repulsion_strength: f64,
    /// Width of the band along the wall where the inward term acts.
    pub wall_margin: f64,
    /// Inward speed at the wall, as a fraction of `v_p`.
    pub wall_strength: f64,
}

impl Default for JanosovParams {
    fn default() -> Self {
        Self {
            prediction_horizon: 10.0,
            repulsion_radius: 100.0,
            repulsion_strength: 1.0,
            wall_margin: 40.0,
            wall_strength: 0.5,
        }
    }
}

/// Omnidirectional chase velocity of pursuer `i`, capped at `v_p`.
///
/// `evader_velocity` is the target's displacement over the last step.
pub fn janosov_action(
    world: &WorldState,
    i: usize,
    params: &JanosovParams,
    evader_velocity: Vec2,
    pursuer_speed: f64,
) -> Vec2 {
    let me = world.agents[i].position();
    let aim = geometry::add(
        world.evader.position(),
        geometry::scale(evader_velocity, params.prediction_horizon),
    );
    let mut v = geometry::unit(geometry::sub(aim, me))
        .map(|u| geometry::scale(u, pursuer_speed))
        .unwrap_or([0.0, 0.0]);

    for j in 0..world.n() {
        if j == i {
            continue;
        }
        let (u, d) = away_from(world, i, j);
        if d < params.repulsion_radius {
            let mag = params.repulsion_strength * pursuer_speed * (1.0 - d / params.repulsion_radius);
            v = geometry::add(v, geometry::scale(u, mag));
        }
    }

    let r = geometry::norm(me);
    let band_start = world.arena_radius - params.wall_margin;
    if r > band_start && params.wall_margin > 0.0 {
        if let Some(out) = geometry::unit(me) {
            let depth = ((r - band_start) / params.wall_margin).min(1.0);
            let mag = params.wall_strength * pursuer_speed * depth;
            v = geometry::add(v, geometry::scale(out, -mag));
        }
    }
    cap_norm(v, pursuer_speed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AngelaniParams {
    /// Pursuers within this radius contribute their heading.
    pub alignment_radius: f64,
    pub alignment_weight: f64,
    /// Pursuers within this radius push each other apart.
    pub repulsion_radius: f64,
    pub repulsion_weight: f64,
}

impl Default for AngelaniParams {
    fn default() -> Self {
        Self {
            alignment_radius: 80.0,
            alignment_weight: 0.5,
            repulsion_radius: 40.0,
            repulsion_weight: 1.0,
        }
    }
}

/// Vicsek-style chase velocity of pursuer `i` with magnitude `v_p`.
pub fn angelani_action(
    world: &WorldState,
    i: usize,
    params: &AngelaniParams,
    pursuer_speed: f64,
) -> Vec2 {
    let me = world.agents[i].position();
    let mut v = geometry::unit(geometry::sub(world.evader.position(), me)).unwrap_or([0.0, 0.0]);

    let mut heading_sum = [0.0, 0.0];
    let mut aligned = 0usize;
    let mut repulsion = [0.0, 0.0];
    for j in 0..world.n() {
        if j == i {
            continue;
        }
        let (u, d) = away_from(world, i, j);
        if d < params.alignment_radius {
            let psi = world.agents[j].psi;
            heading_sum = geometry::add(heading_sum, [psi.cos(), psi.sin()]);
            aligned += 1;
        }
        if d < params.repulsion_radius {
            repulsion = geometry::add(repulsion, geometry::scale(u, 1.0 / d.max(MIN_PAIR_DISTANCE)));
        }
    }
    if aligned > 0 {
        v = geometry::add(
            v,
            geometry::scale(heading_sum, params.alignment_weight / aligned as f64),
        );
    }
    // repulsion is normalised to a unit at one repulsion radius
    v = geometry::add(
        v,
        geometry::scale(repulsion, params.repulsion_weight * params.repulsion_radius),
    );
    geometry::unit(v)
        .map(|u| geometry::scale(u, pursuer_speed))
        .unwrap_or([0.0, 0.0])
}

/// Heads straight for the target's current position.
pub fn pure_pursuit_action(world: &WorldState, i: usize, pursuer_speed: f64) -> Vec2 {
    let me = world.agents[i].position();
    geometry::unit(geometry::sub(world.evader.position(), me))
        .map(|u| geometry::scale(u, pursuer_speed))
        .unwrap_or([0.0, 0.0])
}

#[derive(Debug, Clone, PartialEq)]
pub enum Heuristic {
    PurePursuit,
    Janosov(JanosovParams),
    Angelani(AngelaniParams),
}

/// A heuristic plus heading controller, usable as a [`PursuitPolicy`].
#[derive(Debug, Clone)]
pub struct BaselinePolicy {
    pub heuristic: Heuristic,
    pub gain: f64,
    last_evader: Option<Vec2>,
}

impl BaselinePolicy {
    pub fn new(heuristic: Heuristic, gain: f64) -> Self {
        Self {
            heuristic,
            gain,
            last_evader: None,
        }
    }

    pub fn janosov(params: JanosovParams, gain: f64) -> Self {
        Self::new(Heuristic::Janosov(params), gain)
    }

    pub fn angelani(params: AngelaniParams, gain: f64) -> Self {
        Self::new(Heuristic::Angelani(params), gain)
    }

    pub fn pure_pursuit(gain: f64) -> Self {
        Self::new(Heuristic::PurePursuit, gain)
    }

    pub fn kind(&self) -> PolicyKind {
        match self.heuristic {
            Heuristic::PurePursuit => PolicyKind::PurePursuit,
            Heuristic::Janosov(_) => PolicyKind::Janosov,
            Heuristic::Angelani(_) => PolicyKind::Angelani,
        }
    }

    /// Desired omnidirectional velocities for every pursuer.
    pub fn velocities(&self, world: &WorldState, cfg: &SimConfig) -> Vec<Vec2> {
        let vp = cfg.pursuer_speed;
        let e = world.evader.position();
        let evader_velocity = self
            .last_evader
            .map(|prev| geometry::sub(e, prev))
            .unwrap_or([0.0, 0.0]);
        (0..world.n())
            .map(|i| match &self.heuristic {
                Heuristic::PurePursuit => pure_pursuit_action(world, i, vp),
                Heuristic::Janosov(p) => janosov_action(world, i, p, evader_velocity, vp),
                Heuristic::Angelani(p) => angelani_action(world, i, p, vp),
            })
            .collect()
    }
}

impl PursuitPolicy for BaselinePolicy {
    fn name(&self) -> &'static str {
        match self.heuristic {
            Heuristic::PurePursuit => "pure_pursuit",
            Heuristic::Janosov(_) => "janosov",
            Heuristic::Angelani(_) => "angelani",
        }
    }

    fn reset(&mut self) {
        self.last_evader = None;
    }

    fn act(&mut self, world: &WorldState, cfg: &SimConfig) -> Result<Vec<Action>> {
        let ctrl = HeadingController::new(self.gain, cfg.omega_max)?;
        let actions = self
            .velocities(world, cfg)
            .into_iter()
            .zip(&world.agents)
            .map(|(vel, agent)| Action {
                omega: heading_to_omega(&ctrl, agent.psi, vel[0], vel[1]),
                v: cfg.pursuer_speed,
            })
            .collect();
        self.last_evader = Some(world.evader.position());
        Ok(actions)
    }

    fn box_clone(&self) -> Box<dyn PursuitPolicy> {
        Box::new(self.clone())
    }
}

/// Gains searched by [`tune_gain`] unless a grid is given.
pub const DEFAULT_GAIN_GRID: [f64; 6] = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainReport {
    /// (gain, capture rate) for every gain tried, in grid order.
    pub per_gain: Vec<(f64, f64)>,
    pub best_gain: f64,
    pub best_rate: f64,
}

/// Grid search for the heading gain maximising the capture rate against the
/// repulsive evader. Trial `k` uses seed `base_seed + k` for every gain, so
/// all gains face the same starts. Ties go to the smaller gain.
pub fn tune_gain(
    baseline: &BaselinePolicy,
    cfg: &SimConfig,
    trials: usize,
    base_seed: u64,
    grid: &[f64],
) -> Result<GainReport> {
    if grid.is_empty() {
        return Err(Error::config("gain grid is empty"));
    }
    if trials == 0 {
        return Err(Error::config("tune_gain needs at least one trial"));
    }
    let mut sorted: Vec<f64> = grid.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));

    let mut per_gain = Vec::with_capacity(sorted.len());
    for &gain in &sorted {
        HeadingController::new(gain, cfg.omega_max)?;
        let mut policy = baseline.clone();
        policy.gain = gain;
        let mut captures = 0usize;
        for k in 0..trials {
            let report = run_trial(
                &mut policy,
                EvaderKind::Repulsive,
                cfg,
                base_seed + k as u64,
                &TrialOptions::default(),
            )?;
            captures += usize::from(report.captured);
        }
        per_gain.push((gain, captures as f64 / trials as f64));
    }
    let (best_gain, best_rate) = per_gain
        .iter()
        .copied()
        .fold((sorted[0], f64::NEG_INFINITY), |acc, (g, r)| {
            if r > acc.1 {
                (g, r)
            } else {
                acc
            }
        });
    if best_rate == 0.0 {
        warn!(gain = best_gain, "no gain produced a capture; keeping the smallest");
    }
    Ok(GainReport {
        per_gain,
        best_gain,
        best_rate,
    })
}

/// Default heading gain used when a baseline is not tuned.
pub const DEFAULT_GAIN: f64 = 2.0;
