//! One live game: the pursuit policy against a directly commanded evader.
//!
//! The session is plain synchronous state; the server owns it in a single
//! task and calls [`Session::handle_command`] and [`Session::tick`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use pursuit::bench::{step_policy, Frame, FRAME_VERSION};
use pursuit::evaders::normalize_command;
use pursuit::geometry::Vec2;
use pursuit::policy::PursuitPolicy;
use pursuit::sim::{reset_world_with, EvaderKind, SimConfig, WorldState};
use pursuit::{seeded_rng, Error, Result};

/// Default evader speed relative to the pursuers.
pub const HUMAN_SPEED_RATIO: f64 = 1.2;

#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub sim: SimConfig,
    pub tick_hz: f64,
    /// Seconds an ended episode stays on screen before the next one starts.
    pub auto_reset_secs: f64,
    pub seed: u64,
}

impl SessionConfig {
    /// `sim` with the evader speed set to 1.2 × the pursuer speed.
    pub fn new(sim: SimConfig, seed: u64) -> Self {
        let evader_speed = HUMAN_SPEED_RATIO * sim.pursuer_speed;
        Self {
            sim: SimConfig { evader_speed, ..sim },
            tick_hz: 20.0,
            auto_reset_secs: 2.0,
            seed,
        }
    }

    pub fn auto_reset_ticks(&self) -> u32 {
        (self.auto_reset_secs * self.tick_hz).round() as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Live,
    Paused,
    Replay,
}

/// Client → server messages.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Command {
    Move {
        dir: [f64; 2],
        seq: u64,
        #[serde(default)]
        v: Option<u32>,
    },
    /// Toggles pause, or sets it when `paused` is given.
    Pause {
        #[serde(default)]
        paused: Option<bool>,
        #[serde(default)]
        v: Option<u32>,
    },
    Reset {
        seed: u64,
        #[serde(default)]
        v: Option<u32>,
    },
}

impl Command {
    fn version(&self) -> Option<u32> {
        match self {
            Command::Move { v, .. } | Command::Pause { v, .. } | Command::Reset { v, .. } => *v,
        }
    }
}

/// Server → client replies other than frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Reply {
    Ack {
        v: u32,
        seq: Option<u64>,
        stale: bool,
        /// Set when the direction had to be rescaled to unit length.
        normalized: bool,
        mode: Mode,
    },
    Error {
        v: u32,
        message: String,
    },
}

impl Reply {
    pub fn error(message: impl Into<String>) -> Self {
        Reply::Error {
            v: FRAME_VERSION,
            message: message.into(),
        }
    }
}

/// Everything needed to re-run an episode: its seed and the evader
/// direction applied at each step.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CommandLog {
    pub seed: u64,
    pub dirs: Vec<Vec2>,
}

impl CommandLog {
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_vec(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }
}

pub struct Session {
    cfg: SessionConfig,
    policy: Box<dyn PursuitPolicy>,
    world: WorldState,
    mode: Mode,
    latest_dir: Vec2,
    latest_seq: Option<u64>,
    log: CommandLog,
    finished: Vec<CommandLog>,
    ended_for: u32,
    replay: Vec<Frame>,
    replay_pos: usize,
}

impl Session {
    pub fn new(cfg: SessionConfig, policy: Box<dyn PursuitPolicy>) -> Result<Self> {
        cfg.sim.validate()?;
        if !(cfg.tick_hz > 0.0 && cfg.tick_hz.is_finite()) {
            return Err(Error::Config("tick rate must be positive".into()));
        }
        let seed = cfg.seed;
        let mut s = Self {
            world: fresh_world(&cfg.sim, seed),
            cfg,
            policy,
            mode: Mode::Live,
            latest_dir: [0.0, 0.0],
            latest_seq: None,
            log: CommandLog { seed, dirs: Vec::new() },
            finished: Vec::new(),
            ended_for: 0,
            replay: Vec::new(),
            replay_pos: 0,
        };
        s.policy.reset();
        Ok(s)
    }

    /// A session that streams recorded frames instead of simulating.
    pub fn replay(cfg: SessionConfig, policy: Box<dyn PursuitPolicy>, frames: Vec<Frame>) -> Result<Self> {
        let mut s = Self::new(cfg, policy)?;
        s.mode = Mode::Replay;
        s.replay = frames;
        Ok(s)
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn config(&self) -> &SessionConfig {
        &self.cfg
    }

    pub fn tick_hz(&self) -> f64 {
        self.cfg.tick_hz
    }

    /// Command log of the current episode.
    pub fn log(&self) -> &CommandLog {
        &self.log
    }

    /// Logs of episodes that have been reset away, oldest first.
    pub fn finished_logs(&self) -> &[CommandLog] {
        &self.finished
    }

    pub fn frame(&self) -> Frame {
        Frame::from_world(&self.world, self.cfg.sim.capture_radius)
    }

    /// Parses and applies one client message. Malformed input yields an
    /// error reply and leaves the session untouched.
    pub fn handle_text(&mut self, text: &str) -> Reply {
        match serde_json::from_str::<Command>(text) {
            Ok(cmd) => self.handle_command(cmd),
            Err(e) => Reply::error(format!("malformed message: {e}")),
        }
    }

    pub fn handle_command(&mut self, cmd: Command) -> Reply {
        if let Some(v) = cmd.version() {
            if v != FRAME_VERSION {
                return Reply::error(format!("unsupported protocol version {v}"));
            }
        }
        match cmd {
            Command::Move { dir, seq, .. } => {
                let stale = self.latest_seq.is_some_and(|s| seq <= s);
                let mut normalized = false;
                if !stale {
                    match normalize_command(dir) {
                        Ok((d, flagged)) => {
                            self.latest_dir = d;
                            self.latest_seq = Some(seq);
                            normalized = flagged;
                        }
                        Err(e) => return Reply::error(e.to_string()),
                    }
                }
                self.ack(Some(seq), stale, normalized)
            }
            Command::Pause { paused, .. } => {
                if self.mode != Mode::Replay {
                    let pause = paused.unwrap_or(self.mode == Mode::Live);
                    self.mode = if pause { Mode::Paused } else { Mode::Live };
                }
                self.ack(None, false, false)
            }
            Command::Reset { seed, .. } => {
                self.reset(seed);
                self.ack(None, false, false)
            }
        }
    }

    fn ack(&self, seq: Option<u64>, stale: bool, normalized: bool) -> Reply {
        Reply::Ack {
            v: FRAME_VERSION,
            seq,
            stale,
            normalized,
            mode: self.mode,
        }
    }

    /// Starts a new episode from `seed`, back in live mode.
    pub fn reset(&mut self, seed: u64) {
        let done = std::mem::replace(&mut self.log, CommandLog { seed, dirs: Vec::new() });
        if !done.dirs.is_empty() {
            self.finished.push(done);
        }
        self.world = fresh_world(&self.cfg.sim, seed);
        self.policy.reset();
        self.latest_dir = [0.0, 0.0];
        self.ended_for = 0;
        if self.mode == Mode::Paused {
            self.mode = Mode::Live;
        }
        if self.mode == Mode::Replay {
            self.replay_pos = 0;
        }
    }

    /// Advances one tick. Returns the frame to broadcast, or `None` while
    /// paused (the world is frozen).
    pub fn tick(&mut self) -> Result<Option<Frame>> {
        match self.mode {
            Mode::Paused => Ok(None),
            Mode::Replay => {
                if self.replay.is_empty() {
                    return Ok(None);
                }
                let f = self.replay[self.replay_pos % self.replay.len()].clone();
                self.replay_pos += 1;
                Ok(Some(f))
            }
            Mode::Live => {
                if !self.world.outcome.is_running() {
                    self.ended_for += 1;
                    if self.ended_for >= self.cfg.auto_reset_ticks() {
                        let next = self.log.seed.wrapping_add(1);
                        self.reset(next);
                    }
                    return Ok(Some(self.frame()));
                }
                let dir = self.latest_dir;
                self.world = step_policy(&self.world, self.policy.as_mut(), dir, &self.cfg.sim)?;
                self.log.dirs.push(dir);
                Ok(Some(self.frame()))
            }
        }
    }
}

fn fresh_world(sim: &SimConfig, seed: u64) -> WorldState {
    reset_world_with(sim, EvaderKind::External, &mut seeded_rng(seed))
}

/// Re-runs a logged episode; returns the initial frame and one per step.
pub fn replay_log(
    sim: &SimConfig,
    policy: &mut dyn PursuitPolicy,
    log: &CommandLog,
) -> Result<Vec<Frame>> {
    policy.reset();
    let mut world = fresh_world(sim, log.seed);
    let mut frames = vec![Frame::from_world(&world, sim.capture_radius)];
    for &dir in &log.dirs {
        world = step_policy(&world, policy, dir, sim)?;
        frames.push(Frame::from_world(&world, sim.capture_radius));
    }
    Ok(frames)
}
