//! Capture-radius curriculum: start wide, shrink linearly to the test radius.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumState {
    pub start: f64,
    pub end: f64,
    /// Environment steps over which the radius shrinks.
    pub horizon: u64,
    pub current: f64,
}

impl CurriculumState {
    pub fn linear(start: f64, end: f64, horizon: u64) -> Self {
        Self {
            start,
            end,
            horizon,
            current: start,
        }
    }

    /// No curriculum: always the test radius.
    pub fn constant(radius: f64) -> Self {
        Self::linear(radius, radius, 0)
    }

    /// Radius after `env_steps` steps. Never increases the current radius.
    pub fn step(&mut self, env_steps: u64) -> f64 {
        let scheduled = self.radius_at(env_steps);
        self.current = self.current.min(scheduled);
        self.current
    }

    pub fn radius_at(&self, env_steps: u64) -> f64 {
        if self.horizon == 0 || env_steps >= self.horizon {
            return self.end;
        }
        let f = env_steps as f64 / self.horizon as f64;
        self.start + f * (self.end - self.start)
    }
}

/// Stateless form of [`CurriculumState::step`].
pub fn curriculum_step(c: &mut CurriculumState, env_steps: u64) -> f64 {
    c.step(env_steps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_points() {
        let mut c = CurriculumState::linear(100.0, 30.0, 1000);
        assert_eq!(c.step(0), 100.0);
        assert_eq!(c.radius_at(500), 65.0);
        assert_eq!(c.step(1000), 30.0);
        assert_eq!(c.step(5000), 30.0);
    }

    #[test]
    fn never_increases() {
        let mut c = CurriculumState::linear(100.0, 30.0, 1000);
        c.step(800);
        let r = c.current;
        // going back in step count does not widen the radius
        assert_eq!(c.step(10), r);
        let mut prev = f64::INFINITY;
        for s in (0..2000).step_by(37) {
            let d = c.step(s);
            assert!(d <= prev && (30.0..=100.0).contains(&d));
            prev = d;
        }
    }

    #[test]
    fn constant_curriculum() {
        let mut c = CurriculumState::constant(30.0);
        assert_eq!(c.step(0), 30.0);
        assert_eq!(c.step(10), 30.0);
    }
}
