//! Discrete-time world model.
//!
//! Pursuers follow explicit-Euler unicycle kinematics: the position advances
//! along the heading held at the start of the step, then the heading turns by
//! the (saturated) angular rate. The evader is an omnidirectional point.
//! Every entity is projected radially back onto the arena disk after moving,
//! and capture is tested once all entities have moved.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::evaders::{EvaderBehavior, FixedPath, ForceSign, PathId};
use crate::geometry::{self, wrap_angle, Vec2};
use crate::{Error, Result};

/// Kinematic limits of one pursuer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    pub v_max: f64,
    pub omega_max: f64,
}

/// Pose, last applied command and limits of one pursuer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub x: f64,
    pub y: f64,
    /// Heading in `[-π, π)`.
    pub psi: f64,
    /// Last applied linear speed (pixels/step).
    pub v: f64,
    /// Last applied angular rate (radians/step).
    pub omega: f64,
    /// Heading change applied on the previous step; feeds the ψ̇ feature.
    pub psi_dot_prev: f64,
    pub limits: Limits,
}

impl AgentState {
    pub fn new(x: f64, y: f64, psi: f64, limits: Limits) -> Self {
        Self {
            x,
            y,
            psi: wrap_angle(psi),
            v: 0.0,
            omega: 0.0,
            psi_dot_prev: 0.0,
            limits,
        }
    }

    pub fn position(&self) -> Vec2 {
        [self.x, self.y]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaderState {
    pub x: f64,
    pub y: f64,
    /// Speed v_T in pixels/step.
    pub speed: f64,
    pub behavior: EvaderBehavior,
}

impl EvaderState {
    pub fn position(&self) -> Vec2 {
        [self.x, self.y]
    }
}

/// A pursuer command: turn rate and linear speed, both per step.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Action {
    pub omega: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Running,
    Captured { captor: usize, t: u32 },
    Timeout,
}

impl Outcome {
    pub fn is_running(&self) -> bool {
        matches!(self, Outcome::Running)
    }

    pub fn captor(&self) -> Option<usize> {
        match self {
            Outcome::Captured { captor, .. } => Some(*captor),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Running => "running",
            Outcome::Captured { .. } => "captured",
            Outcome::Timeout => "timeout",
        }
    }
}

/// Scenario parameters. Distances in pixels, angles in radians, one
/// simulation step as the unit of time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_pursuers: usize,
    pub arena_radius: f64,
    pub capture_radius: f64,
    pub timeout: u32,
    pub pursuer_speed: f64,
    pub evader_speed: f64,
    pub omega_max: f64,
    /// When set, pursuers choose their linear speed in `[0, pursuer_speed]`.
    pub variable_speed: bool,
    pub pursuer_spawn_radius: f64,
    pub evader_spawn_inner_radius: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_pursuers: 3,
            arena_radius: 430.0,
            capture_radius: 30.0,
            timeout: 500,
            pursuer_speed: 10.0,
            evader_speed: 12.0,
            omega_max: PI / 10.0,
            variable_speed: false,
            pursuer_spawn_radius: 100.0,
            evader_spawn_inner_radius: 300.0,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.arena_radius,
            self.capture_radius,
            self.pursuer_speed,
            self.evader_speed,
            self.omega_max,
            self.pursuer_spawn_radius,
            self.evader_spawn_inner_radius,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::config("non-finite value in sim config"));
        }
        if self.n_pursuers == 0 {
            return Err(Error::config("n_pursuers must be at least 1"));
        }
        if self.capture_radius <= 0.0 {
            return Err(Error::config("capture_radius must be positive"));
        }
        if self.timeout == 0 {
            return Err(Error::config("timeout must be positive"));
        }
        if self.pursuer_speed < 0.0 || self.evader_speed < 0.0 || self.omega_max <= 0.0 {
            return Err(Error::config("speeds must be non-negative and omega_max positive"));
        }
        if !(0.0 <= self.pursuer_spawn_radius
            && self.pursuer_spawn_radius < self.evader_spawn_inner_radius
            && self.evader_spawn_inner_radius < self.arena_radius)
        {
            return Err(Error::config(
                "need pursuer_spawn_radius < evader_spawn_inner_radius < arena_radius",
            ));
        }
        Ok(())
    }

    pub fn limits(&self) -> Limits {
        Limits {
            v_max: self.pursuer_speed,
            omega_max: self.omega_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub arena_radius: f64,
    pub agents: Vec<AgentState>,
    pub evader: EvaderState,
    pub t: u32,
    pub outcome: Outcome,
}

impl WorldState {
    pub fn n(&self) -> usize {
        self.agents.len()
    }

    /// Distance from pursuer `i` to the evader.
    pub fn distance_to_evader(&self, i: usize) -> f64 {
        geometry::dist(self.agents[i].position(), self.evader.position())
    }

    pub fn min_distance_to_evader(&self) -> f64 {
        (0..self.n())
            .map(|i| self.distance_to_evader(i))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Advances one pursuer by one step.
///
/// `omega_cmd` is saturated to `±omega_max` and `v_cmd` to `[0, v_max]`.
pub fn integrate_unicycle(state: &AgentState, omega_cmd: f64, v_cmd: f64) -> Result<AgentState> {
    if !(omega_cmd.is_finite() && v_cmd.is_finite()) {
        return Err(Error::domain(format!(
            "non-finite unicycle command (omega={omega_cmd}, v={v_cmd})"
        )));
    }
    if !(state.x.is_finite() && state.y.is_finite() && state.psi.is_finite()) {
        return Err(Error::domain("non-finite agent pose"));
    }
    let omega = omega_cmd.clamp(-state.limits.omega_max, state.limits.omega_max);
    let v = v_cmd.clamp(0.0, state.limits.v_max);
    let (s, c) = state.psi.sin_cos();
    Ok(AgentState {
        x: state.x + v * c,
        y: state.y + v * s,
        psi: wrap_angle(state.psi + omega),
        v,
        omega,
        psi_dot_prev: omega,
        limits: state.limits,
    })
}

/// Radially projects a point onto the closed arena disk.
///
/// The returned point always satisfies `x² + y² ≤ R²` in floating point.
pub fn clamp_to_arena(x: f64, y: f64, arena_radius: f64) -> Result<(f64, f64)> {
    if !(x.is_finite() && y.is_finite() && arena_radius.is_finite()) || arena_radius <= 0.0 {
        return Err(Error::domain(format!(
            "cannot clamp ({x}, {y}) to arena radius {arena_radius}"
        )));
    }
    let r2 = arena_radius * arena_radius;
    if x * x + y * y <= r2 {
        return Ok((x, y));
    }
    let k = arena_radius / x.hypot(y);
    let (mut cx, mut cy) = (x * k, y * k);
    // rounding may leave the projection a few ulps outside
    while cx * cx + cy * cy > r2 {
        cx *= 1.0 - f64::EPSILON;
        cy *= 1.0 - f64::EPSILON;
    }
    Ok((cx, cy))
}

/// Index of the pursuer nearest the evader if it lies within `capture_radius`.
/// Ties go to the lowest index.
pub fn detect_capture(world: &WorldState, capture_radius: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for i in 0..world.n() {
        let d = world.distance_to_evader(i);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.filter(|&(_, d)| d <= capture_radius).map(|(i, _)| i)
}

/// Advances the whole world by one step.
///
/// Pursuers integrate their actions (speed forced to `pursuer_speed` unless
/// `variable_speed` is set), the evader moves `speed` along `evader_cmd`, all
/// entities are clamped to the arena and only then is capture evaluated.
pub fn step_world(
    world: &WorldState,
    actions: &[Action],
    evader_cmd: Vec2,
    cfg: &SimConfig,
) -> Result<WorldState> {
    if !world.outcome.is_running() {
        return Err(Error::State(format!(
            "cannot step a finished episode (outcome: {})",
            world.outcome.label()
        )));
    }
    if actions.len() != world.n() {
        return Err(Error::Shape {
            expected: world.n(),
            actual: actions.len(),
        });
    }
    if !geometry::is_finite2(evader_cmd) {
        return Err(Error::domain("non-finite evader command"));
    }

    let mut next = world.clone();
    for (agent, action) in next.agents.iter_mut().zip(actions) {
        let v = if cfg.variable_speed {
            action.v
        } else {
            cfg.pursuer_speed
        };
        let mut moved = integrate_unicycle(agent, action.omega, v)?;
        (moved.x, moved.y) = clamp_to_arena(moved.x, moved.y, world.arena_radius)?;
        *agent = moved;
    }

    let e = &mut next.evader;
    let (ex, ey) = clamp_to_arena(
        e.x + e.speed * evader_cmd[0],
        e.y + e.speed * evader_cmd[1],
        world.arena_radius,
    )?;
    e.x = ex;
    e.y = ey;

    next.t += 1;
    next.outcome = match detect_capture(&next, cfg.capture_radius) {
        Some(captor) => Outcome::Captured { captor, t: next.t },
        None if next.t >= cfg.timeout => Outcome::Timeout,
        None => Outcome::Running,
    };
    Ok(next)
}

/// Uniform sample from the disk of radius `r`.
pub fn sample_disk<R: Rng + ?Sized>(rng: &mut R, r: f64) -> Vec2 {
    let rho = r * rng.random::<f64>().sqrt();
    let theta = rng.random_range(-PI..PI);
    [rho * theta.cos(), rho * theta.sin()]
}

/// Uniform (area-weighted) sample from the annulus `inner ≤ ρ ≤ outer`.
pub fn sample_annulus<R: Rng + ?Sized>(rng: &mut R, inner: f64, outer: f64) -> Vec2 {
    let u: f64 = rng.random();
    let rho = (inner * inner + u * (outer * outer - inner * inner)).sqrt();
    let theta = rng.random_range(-PI..PI);
    [rho * theta.cos(), rho * theta.sin()]
}

/// Which behaviour the evader of a fresh episode should use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaderKind {
    Repulsive,
    FixedPath(PathId),
    External,
}

/// Fresh episode with a repulsive evader.
pub fn reset_world<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> WorldState {
    reset_world_with(cfg, EvaderKind::Repulsive, rng)
}

/// Fresh episode: pursuers uniform in the spawn disk with uniform headings,
/// evader uniform in the spawn annulus. A fixed-path evader is then moved onto
/// its path at a random phase; the pursuer draws do not depend on `kind`.
pub fn reset_world_with<R: Rng + ?Sized>(
    cfg: &SimConfig,
    kind: EvaderKind,
    rng: &mut R,
) -> WorldState {
    let limits = cfg.limits();
    let agents = (0..cfg.n_pursuers)
        .map(|_| {
            let [x, y] = sample_disk(rng, cfg.pursuer_spawn_radius);
            let psi = rng.random_range(-PI..PI);
            AgentState::new(x, y, psi, limits)
        })
        .collect();
    let [mut ex, mut ey] =
        sample_annulus(rng, cfg.evader_spawn_inner_radius, cfg.arena_radius);
    let behavior = match kind {
        EvaderKind::Repulsive => EvaderBehavior::Repulsive {
            prev_dir: [1.0, 0.0],
            sign: ForceSign::default(),
        },
        EvaderKind::External => EvaderBehavior::External,
        EvaderKind::FixedPath(id) => {
            let path = FixedPath::random_start(id, cfg.arena_radius, rng);
            [ex, ey] = path.position();
            EvaderBehavior::FixedPath(path)
        }
    };
    // spawn radii are inside the arena; clamp only guards rounding at ρ = R
    (ex, ey) = clamp_to_arena(ex, ey, cfg.arena_radius).unwrap_or((ex, ey));
    WorldState {
        arena_radius: cfg.arena_radius,
        agents,
        evader: EvaderState {
            x: ex,
            y: ey,
            speed: cfg.evader_speed,
            behavior,
        },
        t: 0,
        outcome: Outcome::Running,
    }
}
