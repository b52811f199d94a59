//! Run configuration: one TOML file with `[sim]`, `[reward]`, `[td3]`,
//! `[policy]` and `[bench]` tables, plus dotted `key=value` overrides
//! (`sim.n_pursuers=5`, `td3.hidden=[64,64]`) applied on top.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{AngelaniParams, BaselinePolicy, JanosovParams, DEFAULT_GAIN};
use crate::bench::{default_speed_ratios, SweepAxis};
use crate::evaders::PathId;
use crate::policy::{PolicyKind, PursuitPolicy};
use crate::rewards::RewardConfig;
use crate::sim::{EvaderKind, SimConfig};
use crate::td3::{load_checkpoint, Td3Config, Td3Policy, TrainConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    /// Heading-controller gain of the classical baselines.
    pub gain: f64,
    /// Trained policy file, required for `td3`.
    pub checkpoint: Option<PathBuf>,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            kind: PolicyKind::Janosov,
            gain: DEFAULT_GAIN,
            checkpoint: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub trials: usize,
    pub base_seed: u64,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    /// `repulsive`, `path_a`, `path_b`, `path_c` or `paths` (all three).
    pub evaders: Vec<String>,
    pub out_dir: PathBuf,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            trials: 100,
            base_seed: 0,
            axis: SweepAxis::EvaderSpeedRatio,
            values: default_speed_ratios(),
            evaders: vec!["repulsive".into()],
            out_dir: PathBuf::from("results"),
        }
    }
}

impl BenchConfig {
    pub fn evader_kinds(&self) -> Result<Vec<EvaderKind>> {
        let mut out = Vec::new();
        for e in &self.evaders {
            match e.as_str() {
                "paths" => out.extend(PathId::ALL.map(EvaderKind::FixedPath)),
                other => out.push(parse_evader(other)?),
            }
        }
        Ok(out)
    }
}

/// Instantiates the configured policy. A learned policy needs its
/// checkpoint; a missing one is a configuration error.
pub fn build_policy(cfg: &PolicyConfig) -> Result<Box<dyn PursuitPolicy>> {
    Ok(match cfg.kind {
        PolicyKind::Janosov => Box::new(BaselinePolicy::janosov(JanosovParams::default(), cfg.gain)),
        PolicyKind::Angelani => Box::new(BaselinePolicy::angelani(AngelaniParams::default(), cfg.gain)),
        PolicyKind::PurePursuit => Box::new(BaselinePolicy::pure_pursuit(cfg.gain)),
        PolicyKind::Td3 => {
            let path = cfg
                .checkpoint
                .as_ref()
                .ok_or_else(|| Error::config("policy.kind = td3 needs policy.checkpoint"))?;
            Box::new(Td3Policy::from_checkpoint(&load_checkpoint(path)?)?)
        }
    })
}

pub fn parse_evader(s: &str) -> Result<EvaderKind> {
    match s {
        "repulsive" => Ok(EvaderKind::Repulsive),
        "external" => Ok(EvaderKind::External),
        _ => match s.strip_prefix("path_").or_else(|| s.strip_prefix("path-")) {
            Some(id) => Ok(EvaderKind::FixedPath(id.parse()?)),
            None => Err(Error::config(format!("unknown evader {s:?}"))),
        },
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub sim: SimConfig,
    pub reward: RewardConfig,
    pub td3: Td3Config,
    pub policy: PolicyConfig,
    pub bench: BenchConfig,
}

impl RunConfig {
    /// Parses TOML text, then applies `overrides` in order.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path` (or starts from defaults when `None`) and applies
    /// `overrides`.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_toml_str(&text, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.reward.validate()?;
        self.td3.validate()?;
        if !(self.policy.gain > 0.0) {
            return Err(Error::config("policy.gain must be positive"));
        }
        if self.bench.trials == 0 {
            return Err(Error::config("bench.trials must be at least 1"));
        }
        self.bench.evader_kinds()?;
        Ok(())
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            sim: self.sim.clone(),
            reward: self.reward.clone(),
            td3: self.td3.clone(),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Sets `section.key` (any depth) to `value`, read as a TOML value when it
/// parses as one and as a bare string otherwise.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::config(format!("override {assignment:?} is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = parse_value(raw);
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts
        .pop()
        .filter(|k| !k.is_empty())
        .ok_or_else(|| Error::config(format!("empty key in {assignment:?}")))?;
    let mut cur = table;
    for p in parts {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::config(format!("{p:?} in {key:?} is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_from_empty_text() {
        let cfg = RunConfig::from_toml_str("", &[]).unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn overrides_beat_the_file() {
        let text = "[sim]\nn_pursuers = 4\n[td3]\nhidden = [32]\n";
        let cfg = RunConfig::from_toml_str(
            text,
            &[
                "sim.n_pursuers=6".into(),
                "td3.hidden=[8, 8]".into(),
                "policy.kind=td3".into(),
                "sim.evader_speed=1.5e1".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.sim.n_pursuers, 6);
        assert_eq!(cfg.td3.hidden, vec![8, 8]);
        assert_eq!(cfg.policy.kind, PolicyKind::Td3);
        assert_eq!(cfg.sim.evader_speed, 15.0);
    }

    #[test]
    fn bad_input_is_a_config_error() {
        for bad in [
            RunConfig::from_toml_str("[sim]\nunknown = 1\n", &[]),
            RunConfig::from_toml_str("", &["sim.capture_radius=-1".into()]),
            RunConfig::from_toml_str("", &["novalue".into()]),
            RunConfig::from_toml_str("", &["bench.evaders=[\"ghost\"]".into()]),
            RunConfig::from_toml_str("[sim\n", &[]),
        ] {
            assert!(matches!(bad, Err(Error::Config(_))), "{bad:?}");
        }
    }

    #[test]
    fn td3_without_checkpoint_is_rejected() {
        let cfg = PolicyConfig {
            kind: PolicyKind::Td3,
            ..PolicyConfig::default()
        };
        assert!(matches!(build_policy(&cfg), Err(Error::Config(_))));
        assert_eq!(build_policy(&PolicyConfig::default()).unwrap().name(), "janosov");
    }

    #[test]
    fn evader_names() {
        assert_eq!(parse_evader("path_b").unwrap(), EvaderKind::FixedPath(PathId::B));
        let b = BenchConfig {
            evaders: vec!["paths".into(), "repulsive".into()],
            ..BenchConfig::default()
        };
        assert_eq!(b.evader_kinds().unwrap().len(), 4);
    }

    #[test]
    fn serialised_config_round_trips() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml_str(&text, &[]).unwrap(), cfg);
    }
}
