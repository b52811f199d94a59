//! Pursuit policies behind one interface, so the benchmark, trainer and live
//! server can drive classical baselines and learned policies alike.

use serde::{Deserialize, Serialize};

use crate::sim::{Action, SimConfig, WorldState};
use crate::Result;

/// Chooses one action per pursuer for the current world.
///
/// Policies may keep per-episode memory (previous observations, previous
/// evader position); [`PursuitPolicy::reset`] clears it.
pub trait PursuitPolicy: Send + Sync {
    fn name(&self) -> &'static str;

    fn reset(&mut self) {}

    fn act(&mut self, world: &WorldState, cfg: &SimConfig) -> Result<Vec<Action>>;

    fn box_clone(&self) -> Box<dyn PursuitPolicy>;
}

impl Clone for Box<dyn PursuitPolicy> {
    fn clone(&self) -> Self {
        self.box_clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Janosov,
    Angelani,
    PurePursuit,
    Td3,
}

impl std::str::FromStr for PolicyKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "janosov" => Ok(PolicyKind::Janosov),
            "angelani" => Ok(PolicyKind::Angelani),
            "pure_pursuit" | "pure-pursuit" => Ok(PolicyKind::PurePursuit),
            "td3" => Ok(PolicyKind::Td3),
            other => Err(crate::Error::config(format!("unknown policy {other:?}"))),
        }
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PolicyKind::Janosov => "janosov",
            PolicyKind::Angelani => "angelani",
            PolicyKind::PurePursuit => "pure_pursuit",
            PolicyKind::Td3 => "td3",
        })
    }
}

/// Every pursuer holds its heading; useful as a null policy in tests.
#[derive(Debug, Clone, Default)]
pub struct StraightPolicy;

impl PursuitPolicy for StraightPolicy {
    fn name(&self) -> &'static str {
        "straight"
    }

    fn act(&mut self, world: &WorldState, cfg: &SimConfig) -> Result<Vec<Action>> {
        Ok(vec![
            Action {
                omega: 0.0,
                v: cfg.pursuer_speed,
            };
            world.n()
        ])
    }

    fn box_clone(&self) -> Box<dyn PursuitPolicy> {
        Box::new(self.clone())
    }
}
