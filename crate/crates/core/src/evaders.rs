//! Evader motion policies.
//!
//! * Repulsive: inverse-square potential field pushing away from every
//!   pursuer and from the closest point of the arena wall.
//! * Fixed paths: three closed curves traversed at exactly `v_T` per step.
//! * External: a direction supplied from outside (the human-controlled
//!   evader of the live mode).

use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{self, Vec2};
use crate::sim::WorldState;
use crate::{Error, Result};

/// Distances below this are treated as this value in the force denominators.
const MIN_FORCE_DISTANCE: f64 = 1.0;

/// Orientation of the potential-field terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForceSign {
    /// Terms point from each pursuer (and the wall) toward the evader.
    #[default]
    Repulsive,
    /// Terms point from the evader toward each pursuer and the wall, the
    /// literal orientation of the textbook formula. Kept for comparison runs.
    AsPrinted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EvaderBehavior {
    Repulsive {
        /// Last direction of motion; reused when the net force vanishes.
        prev_dir: Vec2,
        #[serde(default)]
        sign: ForceSign,
    },
    FixedPath(FixedPath),
    External,
}

/// Raw (unnormalised) potential-field vector at the evader's position.
///
/// Each pursuer contributes `(e − a_j) / d_j²` and the wall contributes
/// `(e − p_w) / d_w²`, `p_w` being the closest boundary point. Denominator
/// distances are floored at one pixel so an evader resting on the boundary
/// (`d_w = 0`) still feels a finite inward push.
pub fn repulsive_force(world: &WorldState, sign: ForceSign, prev_dir: Vec2) -> Vec2 {
    let e = world.evader.position();
    let mut v = [0.0, 0.0];
    for agent in &world.agents {
        let diff = geometry::sub(e, agent.position());
        let d = geometry::norm(diff).max(MIN_FORCE_DISTANCE);
        v = geometry::add(v, geometry::scale(diff, 1.0 / (d * d)));
    }

    let r = geometry::norm(e);
    // unit vector from the centre toward the closest wall point; at the exact
    // centre every wall point is equally close, take the current heading
    let outward = geometry::unit(e)
        .or_else(|| geometry::unit(prev_dir))
        .unwrap_or([1.0, 0.0]);
    let d_w = (world.arena_radius - r).max(0.0);
    let d_eff = d_w.max(MIN_FORCE_DISTANCE);
    // (e − p_w) has length d_w and points inward
    v = geometry::add(v, geometry::scale(outward, -d_eff / (d_eff * d_eff)));

    match sign {
        ForceSign::Repulsive => v,
        ForceSign::AsPrinted => geometry::scale(v, -1.0),
    }
}

/// Unit direction of the repulsive evader. Falls back to the previous
/// direction when the forces cancel exactly.
pub fn repulsive_direction(world: &WorldState) -> Vec2 {
    let (prev_dir, sign) = match &world.evader.behavior {
        EvaderBehavior::Repulsive { prev_dir, sign } => (*prev_dir, *sign),
        _ => ([1.0, 0.0], ForceSign::Repulsive),
    };
    direction_from_force(repulsive_force(world, sign, prev_dir), prev_dir)
}

fn direction_from_force(force: Vec2, prev_dir: Vec2) -> Vec2 {
    geometry::unit(force)
        .or_else(|| geometry::unit(prev_dir))
        .unwrap_or([1.0, 0.0])
}

/// Displacement of an externally commanded evader.
///
/// Returns the displacement and whether the command had to be normalised.
pub fn external_evader_step(cmd: Vec2, speed: f64) -> Result<(Vec2, bool)> {
    let (dir, flagged) = normalize_command(cmd)?;
    Ok((geometry::scale(dir, speed), flagged))
}

/// Accepts zero or unit directions; anything else is normalised and flagged.
pub fn normalize_command(cmd: Vec2) -> Result<(Vec2, bool)> {
    if !geometry::is_finite2(cmd) {
        return Err(Error::domain("non-finite evader command"));
    }
    let n = geometry::norm(cmd);
    if n == 0.0 {
        return Ok(([0.0, 0.0], false));
    }
    if (n - 1.0).abs() <= 1e-9 {
        return Ok((cmd, false));
    }
    Ok(([cmd[0] / n, cmd[1] / n], true))
}

/// Computes the evader's direction for this step and its updated behaviour
/// state. `external` is the latest human command, only used by
/// [`EvaderBehavior::External`].
pub fn evader_command(world: &WorldState, external: Vec2) -> Result<(Vec2, EvaderBehavior)> {
    let e = world.evader.position();
    let speed = world.evader.speed;
    match &world.evader.behavior {
        EvaderBehavior::Repulsive { prev_dir, sign } => {
            let dir = direction_from_force(repulsive_force(world, *sign, *prev_dir), *prev_dir);
            Ok((
                dir,
                EvaderBehavior::Repulsive {
                    prev_dir: dir,
                    sign: *sign,
                },
            ))
        }
        EvaderBehavior::FixedPath(path) => {
            let (next, p) = fixed_path_step(path, speed);
            let dir = if speed > 0.0 {
                let delta = geometry::sub(p, e);
                geometry::unit(delta).unwrap_or([0.0, 0.0])
            } else {
                [0.0, 0.0]
            };
            Ok((dir, EvaderBehavior::FixedPath(next)))
        }
        EvaderBehavior::External => {
            let (dir, _) = normalize_command(external)?;
            Ok((dir, EvaderBehavior::External))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PathId {
    /// Circle of radius 0.7·R.
    A,
    /// Figure-eight (lemniscate of Gerono) of half-width 0.75·R.
    B,
    /// Equilateral triangle reaching 0.75·R at its rounded corners.
    C,
}

impl PathId {
    pub const ALL: [PathId; 3] = [PathId::A, PathId::B, PathId::C];
}

impl std::str::FromStr for PathId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "A" => Ok(PathId::A),
            "B" => Ok(PathId::B),
            "C" => Ok(PathId::C),
            other => Err(Error::config(format!("unknown path id {other:?}"))),
        }
    }
}

const CIRCLE_RADIUS: f64 = 0.7;
const LEMNISCATE_HALF_WIDTH: f64 = 0.75;
const TRIANGLE_OUTER_RADIUS: f64 = 0.75;
const TRIANGLE_CORNER_RADIUS: f64 = 0.12;
const LEMNISCATE_TABLE_SIZE: usize = 8192;

/// Evader progress along one of the fixed paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPath {
    pub id: PathId,
    pub arena_radius: f64,
    /// Curve parameter in `[0, 1)`.
    pub param: f64,
    /// Arc-length progress from the path origin, in pixels.
    pub phase: f64,
}

impl FixedPath {
    pub fn new(id: PathId, arena_radius: f64, param: f64) -> Self {
        let param = param.rem_euclid(1.0);
        Self {
            id,
            arena_radius,
            param,
            phase: unit_arc_length(id, param) * arena_radius,
        }
    }

    pub fn random_start<R: Rng + ?Sized>(id: PathId, arena_radius: f64, rng: &mut R) -> Self {
        Self::new(id, arena_radius, rng.random::<f64>())
    }

    pub fn position(&self) -> Vec2 {
        point_at(self.id, self.arena_radius, self.param)
    }

    /// Closed-curve length in pixels.
    pub fn length(&self) -> f64 {
        unit_length(self.id) * self.arena_radius
    }

    /// `samples` points evenly spaced in the curve parameter, for rendering.
    pub fn polyline(id: PathId, arena_radius: f64, samples: usize) -> Vec<Vec2> {
        (0..samples)
            .map(|k| point_at(id, arena_radius, k as f64 / samples as f64))
            .collect()
    }
}

/// Moves along the path so that the new position is exactly `speed` away
/// (Euclidean) from the current one. The path loops.
pub fn fixed_path_step(path: &FixedPath, speed: f64) -> (FixedPath, Vec2) {
    let p0 = path.position();
    if speed <= 0.0 {
        return (path.clone(), p0);
    }
    let length = path.length();
    let chord = |t: f64| geometry::dist(point_at(path.id, path.arena_radius, t), p0);

    // the chord never exceeds the arc, so the arc-length guess undershoots
    let s0 = unit_arc_length(path.id, path.param) * path.arena_radius;
    let mut lo = path.param + param_delta_for_arc(path.id, path.param, s0, speed, length);
    if chord(lo) > speed {
        lo = path.param;
    }
    let mut step = (lo - path.param).max(1e-9);
    let mut hi = lo + 0.5 * step;
    while chord(hi) < speed {
        lo = hi;
        step *= 2.0;
        hi = lo + step;
        if hi - path.param > 0.5 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if chord(mid) < speed {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = if (chord(lo) - speed).abs() <= (chord(hi) - speed).abs() {
        lo
    } else {
        hi
    };
    let next = FixedPath::new(path.id, path.arena_radius, t);
    let p = next.position();
    (next, p)
}

fn param_delta_for_arc(id: PathId, param: f64, s0: f64, arc: f64, length: f64) -> f64 {
    let target = s0 + arc;
    let laps = (target / length).floor();
    let t = param_at_unit_arc(id, (target - laps * length) / length * unit_length(id));
    let mut dt = t + laps - param;
    if dt <= 0.0 {
        dt += 1.0;
    }
    dt
}

fn point_at(id: PathId, arena_radius: f64, t: f64) -> Vec2 {
    geometry::scale(unit_point(id, t.rem_euclid(1.0)), arena_radius)
}

/// Point on the unit-arena version of the curve.
fn unit_point(id: PathId, t: f64) -> Vec2 {
    match id {
        PathId::A => {
            let th = TAU * t;
            [CIRCLE_RADIUS * th.cos(), CIRCLE_RADIUS * th.sin()]
        }
        PathId::B => {
            let th = TAU * t;
            let a = LEMNISCATE_HALF_WIDTH;
            [a * th.sin(), a * th.sin() * th.cos()]
        }
        PathId::C => triangle_point(t * triangle_length()),
    }
}

fn triangle_inner_radius() -> f64 {
    TRIANGLE_OUTER_RADIUS - TRIANGLE_CORNER_RADIUS
}

fn triangle_edge() -> f64 {
    triangle_inner_radius() * 3f64.sqrt()
}

fn triangle_arc() -> f64 {
    TRIANGLE_CORNER_RADIUS * TAU / 3.0
}

fn triangle_length() -> f64 {
    3.0 * (triangle_edge() + triangle_arc())
}

/// Rounded triangle parameterised by arc length: three straight edges of the
/// inner triangle pushed outward by the corner radius, joined by 120° arcs
/// centred on the inner vertices.
fn triangle_point(s: f64) -> Vec2 {
    let rho = triangle_inner_radius();
    let rc = TRIANGLE_CORNER_RADIUS;
    let seg = triangle_edge() + triangle_arc();
    let s = s.rem_euclid(triangle_length());
    let k = ((s / seg).floor() as usize).min(2);
    let local = s - k as f64 * seg;
    let vertex = |i: usize| {
        let th = PI / 2.0 + TAU * (i % 3) as f64 / 3.0;
        [rho * th.cos(), rho * th.sin()]
    };
    let normal_angle = PI / 2.0 + TAU * k as f64 / 3.0 + PI / 3.0;
    if local < triangle_edge() {
        let (v0, v1) = (vertex(k), vertex(k + 1));
        let f = local / triangle_edge();
        let n = [normal_angle.cos(), normal_angle.sin()];
        [
            v0[0] + f * (v1[0] - v0[0]) + rc * n[0],
            v0[1] + f * (v1[1] - v0[1]) + rc * n[1],
        ]
    } else {
        let v1 = vertex(k + 1);
        let ang = normal_angle + (local - triangle_edge()) / rc;
        [v1[0] + rc * ang.cos(), v1[1] + rc * ang.sin()]
    }
}

/// Cumulative arc length of the unit lemniscate, sampled uniformly in t.
fn lemniscate_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = LEMNISCATE_TABLE_SIZE;
        let mut out = Vec::with_capacity(n + 1);
        out.push(0.0);
        let mut acc = 0.0;
        // Simpson's rule on |r'(t)| within each table cell
        let speed = |t: f64| {
            let th = TAU * t;
            let a = LEMNISCATE_HALF_WIDTH;
            let dx = a * TAU * th.cos();
            let dy = a * TAU * (2.0 * th).cos();
            dx.hypot(dy)
        };
        for k in 0..n {
            let t0 = k as f64 / n as f64;
            let t1 = (k + 1) as f64 / n as f64;
            let h = t1 - t0;
            acc += h / 6.0 * (speed(t0) + 4.0 * speed(0.5 * (t0 + t1)) + speed(t1));
            out.push(acc);
        }
        out
    })
}

fn unit_length(id: PathId) -> f64 {
    match id {
        PathId::A => TAU * CIRCLE_RADIUS,
        PathId::B => *lemniscate_table().last().expect("table is non-empty"),
        PathId::C => triangle_length(),
    }
}

fn unit_arc_length(id: PathId, t: f64) -> f64 {
    let t = t.rem_euclid(1.0);
    match id {
        PathId::A | PathId::C => t * unit_length(id),
        PathId::B => {
            let table = lemniscate_table();
            let n = table.len() - 1;
            let x = t * n as f64;
            let k = (x.floor() as usize).min(n - 1);
            let f = x - k as f64;
            table[k] + f * (table[k + 1] - table[k])
        }
    }
}

fn param_at_unit_arc(id: PathId, s: f64) -> f64 {
    let len = unit_length(id);
    let s = s.rem_euclid(len);
    match id {
        PathId::A | PathId::C => s / len,
        PathId::B => {
            let table = lemniscate_table();
            let n = table.len() - 1;
            let k = table.partition_point(|&v| v <= s).clamp(1, n) - 1;
            let span = table[k + 1] - table[k];
            let f = if span > 0.0 { (s - table[k]) / span } else { 0.0 };
            (k as f64 + f) / n as f64
        }
    }
}
