//! Per-agent rewards.
//!
//! On a capture step the captor receives `captor` and every other pursuer
//! `helper`. Otherwise every pursuer receives `−w_q·q − w_d·d_i`, with `q` the
//! group formation score of the post-step world and `d_i` its own distance
//! to the target.

use serde::{Deserialize, Serialize};

use crate::geometry;
use crate::sim::{Outcome, WorldState};
use crate::{Error, Result};

/// Which of the two terminal values goes to the captor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalOrder {
    /// Captor gets the larger terminal reward.
    #[default]
    CaptorLarger,
    /// Captor gets the smaller one; for ablation only.
    Swapped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub captor: f64,
    pub helper: f64,
    /// Weight on the formation score.
    pub w_q: f64,
    /// Weight per pixel of distance to the target.
    pub w_d: f64,
    pub terminal_order: TerminalOrder,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            captor: 100.0,
            helper: 10.0,
            w_q: 0.1,
            w_d: 0.002,
            terminal_order: TerminalOrder::CaptorLarger,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        if self.w_q < 0.0 || self.w_d < 0.0 {
            return Err(Error::config("reward weights must be non-negative"));
        }
        if self.terminal_order == TerminalOrder::CaptorLarger && self.captor <= self.helper {
            return Err(Error::config("captor reward must exceed helper reward"));
        }
        Ok(())
    }

    /// (captor, helper) after applying [`TerminalOrder`].
    pub fn terminal_values(&self) -> (f64, f64) {
        match self.terminal_order {
            TerminalOrder::CaptorLarger => (self.captor, self.helper),
            TerminalOrder::Swapped => (self.helper, self.captor),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormationScore {
    pub q: f64,
    /// Some pursuer sat exactly on the target; its direction was taken as +x.
    pub degenerate: bool,
}

/// Formation score in `[0, 2]`: the mean over pursuers of
/// `û_0T · û_iT + 1`, where agent 0 is the pursuer nearest the target (ties to
/// the lowest index) and `û_iT` points from pursuer i to the target. Lower
/// means the team surrounds the target from more spread-out directions.
pub fn formation_score(world: &WorldState) -> Result<FormationScore> {
    let n = world.n();
    if n < 2 {
        return Err(Error::domain("formation score needs at least two pursuers"));
    }
    let target = world.evader.position();
    let mut degenerate = false;
    let units: Vec<_> = world
        .agents
        .iter()
        .map(|a| {
            geometry::unit(geometry::sub(target, a.position())).unwrap_or_else(|| {
                degenerate = true;
                [1.0, 0.0]
            })
        })
        .collect();
    let mut closest = 0;
    let mut best = f64::INFINITY;
    for i in 0..n {
        let d = world.distance_to_evader(i);
        if d < best {
            best = d;
            closest = i;
        }
    }
    let u0 = units[closest];
    let sum: f64 = units.iter().map(|u| geometry::dot(u0, *u) + 1.0).sum();
    // rounding in the dot products can stray an ulp outside the range
    let q = (sum / n as f64).clamp(0.0, 2.0);
    Ok(FormationScore { q, degenerate })
}

/// Formation score, defined as 0 for a lone pursuer.
pub fn group_score(world: &WorldState) -> f64 {
    formation_score(world).map(|f| f.q).unwrap_or(0.0)
}

/// Rewards for the step that produced `after`.
pub fn per_agent_rewards(
    _before: &WorldState,
    after: &WorldState,
    cfg: &RewardConfig,
) -> Vec<f64> {
    let n = after.n();
    match after.outcome {
        Outcome::Captured { captor, .. } => {
            let (captor_r, helper_r) = cfg.terminal_values();
            (0..n)
                .map(|i| if i == captor { captor_r } else { helper_r })
                .collect()
        }
        Outcome::Running | Outcome::Timeout => {
            let q = if cfg.w_q != 0.0 { group_score(after) } else { 0.0 };
            (0..n)
                .map(|i| -cfg.w_q * q - cfg.w_d * after.distance_to_evader(i))
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaders::EvaderBehavior;
    use crate::sim::{AgentState, EvaderState, SimConfig};

    pub(crate) fn world(points: &[(f64, f64)], target: (f64, f64)) -> WorldState {
        let limits = SimConfig::default().limits();
        WorldState {
            arena_radius: 430.0,
            agents: points
                .iter()
                .map(|&(x, y)| AgentState::new(x, y, 0.0, limits))
                .collect(),
            evader: EvaderState {
                x: target.0,
                y: target.1,
                speed: 0.0,
                behavior: EvaderBehavior::External,
            },
            t: 0,
            outcome: Outcome::Running,
        }
    }

    #[test]
    fn hand_cases() {
        let q = |pts: &[(f64, f64)]| formation_score(&world(pts, (0.0, 0.0))).unwrap().q;
        assert_eq!(q(&[(-10.0, 0.0), (20.0, 0.0)]), 1.0);
        assert_eq!(q(&[(-10.0, 0.0), (-20.0, 0.0)]), 2.0);
        assert_eq!(q(&[(-10.0, 0.0), (20.0, 0.0), (0.0, 30.0), (0.0, -40.0)]), 1.0);
    }

    #[test]
    fn lone_pursuer_is_an_error() {
        assert!(formation_score(&world(&[(1.0, 0.0)], (0.0, 0.0))).is_err());
        assert_eq!(group_score(&world(&[(1.0, 0.0)], (0.0, 0.0))), 0.0);
    }

    #[test]
    fn pursuer_on_target_is_flagged() {
        let f = formation_score(&world(&[(0.0, 0.0), (5.0, 0.0)], (0.0, 0.0))).unwrap();
        assert!(f.degenerate);
        assert!((0.0..=2.0).contains(&f.q));
    }

    #[test]
    fn capture_case() {
        let before = world(&[(100.0, 0.0), (0.0, 100.0), (5.0, 0.0)], (0.0, 0.0));
        let mut after = before.clone();
        after.outcome = Outcome::Captured { captor: 2, t: 1 };
        let r = per_agent_rewards(&before, &after, &RewardConfig::default());
        assert_eq!(r, vec![10.0, 10.0, 100.0]);
        let swapped = RewardConfig {
            terminal_order: TerminalOrder::Swapped,
            ..RewardConfig::default()
        };
        assert_eq!(per_agent_rewards(&before, &after, &swapped), vec![100.0, 100.0, 10.0]);
    }

    #[test]
    fn dense_case() {
        // pursuer 0 at distance 500, others antipodal / orthogonal -> q = 1
        let w = world(&[(-500.0, 0.0), (300.0, 0.0), (0.0, 450.0), (0.0, -450.0)], (0.0, 0.0));
        assert_eq!(group_score(&w), (2.0 + 0.0 + 1.0 + 1.0) / 4.0);
        // the nearest is pursuer 1 at 300; q is symmetric in the choice here
        let r = per_agent_rewards(&w, &w, &RewardConfig::default());
        assert!((r[0] - (-0.1 * 1.0 - 0.002 * 500.0)).abs() < 1e-12);
        assert!((r[0] + 1.1).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(RewardConfig::default().validate().is_ok());
        let bad = RewardConfig {
            captor: 10.0,
            helper: 100.0,
            ..RewardConfig::default()
        };
        assert!(bad.validate().is_err());
        let ablation = RewardConfig {
            terminal_order: TerminalOrder::Swapped,
            ..RewardConfig::default()
        };
        assert!(ablation.validate().is_ok());
    }

    #[test]
    fn distance_dominates_beyond_crossover() {
        // w_q·q is at most 2·w_q; the distance term exceeds that past 2·w_q/w_d
        let cfg = RewardConfig::default();
        let crossover = 2.0 * cfg.w_q / cfg.w_d;
        assert!((crossover - 100.0).abs() < 1e-9);
        let far = world(&[(-400.0, 0.0), (-410.0, 0.0)], (0.0, 0.0));
        let r = per_agent_rewards(&far, &far, &cfg);
        let q_part = cfg.w_q * group_score(&far);
        assert!(cfg.w_d * 400.0 > q_part);
        assert!(r[0] < -0.8);
    }
}
