//! Trial runner, parameter sweeps and report/replay emission.
//!
//! Seeds: trial `k` of sweep value `j` uses `base_seed + j·1_000_000 + k`.
//! Trials run on the rayon pool and are merged back in seed order, so every
//! aggregate is reproducible bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::evaders::{evader_command, EvaderBehavior, ForceSign, PathId};
use crate::geometry::Vec2;
use crate::policy::PursuitPolicy;
use crate::rewards::group_score;
use crate::sim::{reset_world_with, step_world, Action, EvaderKind, SimConfig, WorldState};
use crate::{seeded_rng, Error, Result};

/// Seed stride between sweep values.
pub const SEED_STRIDE: u64 = 1_000_000;

/// Protocol version carried by every frame.
pub const FRAME_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOptions {
    /// Record per-step formation score and minimum distance.
    pub traces: bool,
    pub force_sign: ForceSign,
}

impl Default for TrialOptions {
    fn default() -> Self {
        Self {
            traces: true,
            force_sign: ForceSign::Repulsive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub seed: u64,
    pub captured: bool,
    pub captor: Option<usize>,
    pub steps: u32,
    /// Formation score after each step.
    pub q_trace: Vec<f64>,
    /// Closest pursuer-evader distance after each step.
    pub min_dist_trace: Vec<f64>,
}

/// Advances `world` one step with the given pursuer actions, computing the
/// evader's move from its behaviour (`external` feeds a human evader).
pub fn step_with_actions(
    world: &WorldState,
    actions: &[Action],
    external: Vec2,
    cfg: &SimConfig,
) -> Result<WorldState> {
    let (dir, behavior) = evader_command(world, external)?;
    let mut next = step_world(world, actions, dir, cfg)?;
    next.evader.behavior = behavior;
    Ok(next)
}

/// Asks `policy` for actions and advances one step.
pub fn step_policy<P: PursuitPolicy + ?Sized>(
    world: &WorldState,
    policy: &mut P,
    external: Vec2,
    cfg: &SimConfig,
) -> Result<WorldState> {
    let actions = policy.act(world, cfg)?;
    step_with_actions(world, &actions, external, cfg)
}

/// Initial world of trial `seed`.
pub fn trial_world(kind: EvaderKind, cfg: &SimConfig, seed: u64, opts: &TrialOptions) -> WorldState {
    let mut world = reset_world_with(cfg, kind, &mut seeded_rng(seed));
    if let EvaderBehavior::Repulsive { sign, .. } = &mut world.evader.behavior {
        *sign = opts.force_sign;
    }
    world
}

fn run_inner<P: PursuitPolicy + ?Sized>(
    policy: &mut P,
    kind: EvaderKind,
    cfg: &SimConfig,
    seed: u64,
    opts: &TrialOptions,
    mut on_world: impl FnMut(&WorldState),
) -> Result<TrialReport> {
    cfg.validate()?;
    policy.reset();
    let mut world = trial_world(kind, cfg, seed, opts);
    on_world(&world);
    let mut q_trace = Vec::new();
    let mut min_dist_trace = Vec::new();
    while world.outcome.is_running() {
        world = step_policy(&world, policy, [0.0, 0.0], cfg)?;
        if opts.traces {
            q_trace.push(group_score(&world));
            min_dist_trace.push(world.min_distance_to_evader());
        }
        on_world(&world);
    }
    let captor = world.outcome.captor();
    Ok(TrialReport {
        seed,
        captured: captor.is_some(),
        captor,
        steps: world.t,
        q_trace,
        min_dist_trace,
    })
}

/// Simulates one full episode. Deterministic in `seed`.
pub fn run_trial<P: PursuitPolicy + ?Sized>(
    policy: &mut P,
    kind: EvaderKind,
    cfg: &SimConfig,
    seed: u64,
    opts: &TrialOptions,
) -> Result<TrialReport> {
    run_inner(policy, kind, cfg, seed, opts, |_| {})
}

/// [`run_trial`] that also returns one frame for the initial world and one
/// per step.
pub fn run_trial_logged<P: PursuitPolicy + ?Sized>(
    policy: &mut P,
    kind: EvaderKind,
    cfg: &SimConfig,
    seed: u64,
    opts: &TrialOptions,
) -> Result<(TrialReport, Vec<Frame>)> {
    let mut frames = Vec::new();
    let report = run_inner(policy, kind, cfg, seed, opts, |w| {
        frames.push(Frame::from_world(w, cfg.capture_radius))
    })?;
    Ok((report, frames))
}

/// Success statistics of a batch of trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub trials: usize,
    pub captures: usize,
    pub success_rate: f64,
    /// Mean steps over captured trials only; `None` without captures.
    pub avg_steps_on_success: Option<f64>,
    /// Binomial standard error of the success rate.
    pub stderr: f64,
}

impl TrialStats {
    /// Independent of the order of `reports`.
    pub fn from_reports(reports: &[TrialReport]) -> Self {
        let trials = reports.len();
        let captures = reports.iter().filter(|r| r.captured).count();
        let step_sum: u64 = reports
            .iter()
            .filter(|r| r.captured)
            .map(|r| u64::from(r.steps))
            .sum();
        let p = if trials > 0 {
            captures as f64 / trials as f64
        } else {
            0.0
        };
        Self {
            trials,
            captures,
            success_rate: p,
            avg_steps_on_success: (captures > 0).then(|| step_sum as f64 / captures as f64),
            stderr: if trials > 0 {
                (p * (1.0 - p) / trials as f64).sqrt()
            } else {
                0.0
            },
        }
    }
}

/// Runs `seeds` in parallel with clones of `policy`; reports come back in
/// seed order.
pub fn run_trials(
    policy: &dyn PursuitPolicy,
    kind: EvaderKind,
    cfg: &SimConfig,
    seeds: &[u64],
    opts: &TrialOptions,
) -> Result<Vec<TrialReport>> {
    seeds
        .par_iter()
        .map_init(
            || policy.box_clone(),
            |p, &seed| run_trial(p.as_mut(), kind, cfg, seed, opts),
        )
        .collect()
}

/// `trials` consecutive seeds from `base_seed`, aggregated.
pub fn evaluate(
    policy: &dyn PursuitPolicy,
    kind: EvaderKind,
    cfg: &SimConfig,
    trials: usize,
    base_seed: u64,
) -> Result<TrialStats> {
    let seeds: Vec<u64> = (0..trials as u64).map(|k| base_seed + k).collect();
    let opts = TrialOptions {
        traces: false,
        ..TrialOptions::default()
    };
    Ok(TrialStats::from_reports(&run_trials(policy, kind, cfg, &seeds, &opts)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Evader speed as a multiple of the pursuer speed.
    EvaderSpeedRatio,
    NPursuers,
    /// Multiplies the arena radius and the evader spawn annulus; the
    /// pursuer spawn disk is unchanged.
    ArenaScale,
    /// Values are pursuer counts; the neighbour cap is fixed by the policy.
    NeighborCap,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::EvaderSpeedRatio => "evader_speed_ratio",
            SweepAxis::NPursuers => "n_pursuers",
            SweepAxis::ArenaScale => "arena_scale",
            SweepAxis::NeighborCap => "neighbor_cap",
        }
    }

    /// `base` with this axis set to `value`.
    pub fn apply(self, base: &SimConfig, value: f64) -> Result<SimConfig> {
        let mut cfg = base.clone();
        match self {
            SweepAxis::EvaderSpeedRatio => cfg.evader_speed = value * base.pursuer_speed,
            SweepAxis::NPursuers | SweepAxis::NeighborCap => {
                if value.fract() != 0.0 || value < 1.0 {
                    return Err(Error::config(format!("pursuer count {value} is not a positive integer")));
                }
                cfg.n_pursuers = value as usize;
            }
            SweepAxis::ArenaScale => {
                cfg.arena_radius = base.arena_radius * value;
                cfg.evader_spawn_inner_radius = base.evader_spawn_inner_radius * value;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "evader_speed_ratio" | "speed" => Ok(SweepAxis::EvaderSpeedRatio),
            "n_pursuers" | "n" => Ok(SweepAxis::NPursuers),
            "arena_scale" | "arena" => Ok(SweepAxis::ArenaScale),
            "neighbor_cap" => Ok(SweepAxis::NeighborCap),
            other => Err(Error::config(format!("unknown sweep axis {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub trials_per_value: usize,
    pub base_seed: u64,
    /// One group of rows per evader; several fixed paths also get a joint
    /// `all_paths` group.
    pub evaders: Vec<EvaderKind>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials_per_value == 0 {
            return Err(Error::config("trials_per_value must be at least 1"));
        }
        if self.values.is_empty() || self.evaders.is_empty() {
            return Err(Error::config("sweep needs at least one value and one evader"));
        }
        if self.trials_per_value as u64 > SEED_STRIDE {
            return Err(Error::config("too many trials per value for the seed layout"));
        }
        Ok(())
    }

    pub fn seed(&self, value_idx: usize, trial: usize) -> u64 {
        self.base_seed + value_idx as u64 * SEED_STRIDE + trial as u64
    }
}

/// The speed levels 0.8, 1.0, ..., 2.0.
pub fn default_speed_ratios() -> Vec<f64> {
    (0..7).map(|i| (8 + 2 * i) as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Evader label (`repulsive`, `path_a`, ..., `all_paths`).
    pub group: String,
    pub axis: String,
    pub value: f64,
    pub trials: usize,
    pub captures: usize,
    pub success_rate: f64,
    pub avg_steps_on_success: Option<f64>,
    pub stderr: f64,
}

pub fn evader_label(kind: EvaderKind) -> String {
    match kind {
        EvaderKind::Repulsive => "repulsive".into(),
        EvaderKind::External => "external".into(),
        EvaderKind::FixedPath(PathId::A) => "path_a".into(),
        EvaderKind::FixedPath(PathId::B) => "path_b".into(),
        EvaderKind::FixedPath(PathId::C) => "path_c".into(),
    }
}

/// Builds a policy for the configuration of one sweep value.
pub type PolicyFactory<'a> = dyn Fn(&SimConfig) -> Result<Box<dyn PursuitPolicy>> + Sync + 'a;

/// Runs every (value, evader) cell of `spec` on top of `base`.
pub fn run_sweep(spec: &SweepSpec, base: &SimConfig, make_policy: &PolicyFactory) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let opts = TrialOptions {
        traces: false,
        ..TrialOptions::default()
    };
    let joint = spec.evaders.len() > 1
        && spec
            .evaders
            .iter()
            .all(|k| matches!(k, EvaderKind::FixedPath(_)));
    let mut rows = Vec::new();
    for (j, &value) in spec.values.iter().enumerate() {
        let cfg = spec.axis.apply(base, value)?;
        let policy = make_policy(&cfg)?;
        let seeds: Vec<u64> = (0..spec.trials_per_value).map(|k| spec.seed(j, k)).collect();
        let mut all = Vec::new();
        for &kind in &spec.evaders {
            let reports = run_trials(policy.as_ref(), kind, &cfg, &seeds, &opts)?;
            rows.push(row(evader_label(kind), spec.axis, value, &reports));
            all.extend(reports);
        }
        if joint {
            rows.push(row("all_paths".into(), spec.axis, value, &all));
        }
    }
    Ok(rows)
}

fn row(group: String, axis: SweepAxis, value: f64, reports: &[TrialReport]) -> SweepRow {
    let s = TrialStats::from_reports(reports);
    SweepRow {
        group,
        axis: axis.name().into(),
        value,
        trials: s.trials,
        captures: s.captures,
        success_rate: s.success_rate,
        avg_steps_on_success: s.avg_steps_on_success,
        stderr: s.stderr,
    }
}

/// CSV with a header row; undefined averages are empty cells.
pub fn write_rows_csv<W: Write>(w: W, rows: &[SweepRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

pub fn write_rows_json<W: Write>(w: W, rows: &[SweepRow]) -> Result<()> {
    serde_json::to_writer_pretty(w, rows)?;
    Ok(())
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`.
pub fn write_sweep_artifacts(dir: &Path, stem: &str, rows: &[SweepRow]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_rows_csv(File::create(dir.join(format!("{stem}.csv")))?, rows)?;
    let mut json = BufWriter::new(File::create(dir.join(format!("{stem}.json")))?);
    write_rows_json(&mut json, rows)?;
    json.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

/// World snapshot shared by the live protocol and replay files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub v: u32,
    #[serde(rename = "type")]
    pub kind: String,
    pub t: u32,
    pub agents: Vec<Pose>,
    pub evader: Point,
    pub d_cap: f64,
    pub q: f64,
    /// `running`, `captured` or `timeout`.
    pub outcome: String,
}

impl Frame {
    pub fn from_world(world: &WorldState, d_cap: f64) -> Self {
        Self {
            v: FRAME_VERSION,
            kind: "frame".into(),
            t: world.t,
            agents: world
                .agents
                .iter()
                .map(|a| Pose {
                    x: a.x,
                    y: a.y,
                    psi: a.psi,
                })
                .collect(),
            evader: Point {
                x: world.evader.x,
                y: world.evader.y,
            },
            d_cap,
            q: group_score(world),
            outcome: world.outcome.label().into(),
        }
    }
}

/// One JSON frame per line.
pub fn write_replay<W: Write>(mut w: W, frames: &[Frame]) -> Result<()> {
    for f in frames {
        serde_json::to_writer(&mut w, f)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_replay<R: BufRead>(r: R) -> Result<Vec<Frame>> {
    let mut frames = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Frame = serde_json::from_str(&line)?;
        if f.v != FRAME_VERSION {
            return Err(Error::Config(format!("unsupported frame version {}", f.v)));
        }
        frames.push(f);
    }
    Ok(frames)
}

/// Runs trial `seed` and writes its replay to `path`.
pub fn replay_export<P: PursuitPolicy + ?Sized>(
    path: &Path,
    policy: &mut P,
    kind: EvaderKind,
    cfg: &SimConfig,
    seed: u64,
) -> Result<TrialReport> {
    let (report, frames) = run_trial_logged(policy, kind, cfg, seed, &TrialOptions::default())?;
    write_replay(BufWriter::new(File::create(path)?), &frames)?;
    Ok(report)
}

pub fn load_replay(path: &Path) -> Result<Vec<Frame>> {
    read_replay(BufReader::new(File::open(path)?))
}

/// All three fixed paths.
pub fn all_paths() -> Vec<EvaderKind> {
    PathId::ALL.iter().map(|&p| EvaderKind::FixedPath(p)).collect()
}
