use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minitower::EnvConfig;
use crate::nn::ArchConfig;
use crate::ppo::PpoConfig;
use crate::wrappers::{build_action_set, ActionSetId, RewardConfig, StackConfig, WrapperConfig, DEFAULT_STATS_STEPS};

/// Widths of the policy network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetConfig {
    pub hidden: usize,
    pub recurrent_width: usize,
    pub recurrent: bool,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig { hidden: 256, recurrent_width: 256, recurrent: true }
    }
}

/// Disjoint environment-seed sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeedSplits {
    pub train: Vec<u64>,
    pub validation: Vec<u64>,
    pub test: Vec<u64>,
}

impl Default for SeedSplits {
    fn default() -> Self {
        SeedSplits { train: (0..95).collect(), validation: (95..105).collect(), test: (105..110).collect() }
    }
}

impl SeedSplits {
    pub fn validate(&self) -> Result<()> {
        if self.train.is_empty() {
            return Err(Error::Config("training seed split is empty".into()));
        }
        let sets = [("train", &self.train), ("validation", &self.validation), ("test", &self.test)];
        for (i, (na, a)) in sets.iter().enumerate() {
            let a: BTreeSet<_> = a.iter().collect();
            for (nb, b) in &sets[i + 1..] {
                if let Some(s) = b.iter().find(|s| a.contains(s)) {
                    return Err(Error::Config(format!("seed {s} is in both the {na} and {nb} splits")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StatsConfig {
    /// Existing statistics file. When absent the trainer builds one in the
    /// run directory.
    pub path: Option<PathBuf>,
    pub steps: usize,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig { path: None, steps: DEFAULT_STATS_STEPS }
    }
}

/// Everything that defines a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub total_steps: u64,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    /// Write a checkpoint every this many update cycles (0: only at the end).
    pub checkpoint_interval: u64,
    pub env: EnvConfig,
    pub wrappers: WrapperConfig,
    pub ppo: PpoConfig,
    pub network: NetConfig,
    pub seeds: SeedSplits,
    pub stats: StatsConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::dash()
    }
}

/// Named starting points for config files (`preset = "baseline"`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Dash,
    Baseline,
}

impl RunConfig {
    /// All improvements enabled.
    pub fn dash() -> Self {
        RunConfig {
            total_steps: 2_000_000,
            master_seed: 0,
            output_dir: PathBuf::from("runs/dash"),
            checkpoint_interval: 10,
            env: EnvConfig::default(),
            wrappers: WrapperConfig::default(),
            ppo: PpoConfig::dash(),
            network: NetConfig::default(),
            seeds: SeedSplits::default(),
            stats: StatsConfig::default(),
        }
    }

    /// Plain PPO: all 54 actions, four full frames, state drawn into the
    /// pixels, raw rewards, no normalization, no memory, 50 agents.
    pub fn baseline() -> Self {
        RunConfig {
            output_dir: PathBuf::from("runs/baseline"),
            env: EnvConfig { retro: true, ..EnvConfig::default() },
            wrappers: WrapperConfig {
                action_set: ActionSetId::A54,
                stack: StackConfig::FULL_FOUR,
                reward: RewardConfig::default(),
                shape_rewards: false,
                normalize: false,
                vector_obs: false,
            },
            ppo: PpoConfig::baseline(),
            network: NetConfig { recurrent: false, ..NetConfig::default() },
            ..RunConfig::dash()
        }
    }

    pub fn preset(p: Preset) -> Self {
        match p {
            Preset::Dash => RunConfig::dash(),
            Preset::Baseline => RunConfig::baseline(),
        }
    }

    pub fn arch(&self) -> ArchConfig {
        ArchConfig {
            input_dim: self.wrappers.input_dim(self.env.observation_shape(), self.env.max_keys),
            hidden: self.network.hidden,
            recurrent_width: self.network.recurrent_width,
            recurrent: self.network.recurrent,
            n_actions: build_action_set(self.wrappers.action_set).len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.wrappers.stack.validate()?;
        self.ppo.validate(self.network.recurrent)?;
        self.arch().validate()?;
        self.seeds.validate()?;
        if self.total_steps == 0 {
            return Err(Error::Config("total_steps must be positive".into()));
        }
        Ok(())
    }

    /// Update cycles needed to consume `total_steps` (rounded up).
    pub fn cycles(&self) -> u64 {
        self.total_steps.div_ceil(self.ppo.steps_per_cycle())
    }

    /// Reads a TOML file on top of its preset (default `dash`), then applies
    /// `key.path=value` overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let user = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                text.parse::<toml::Table>().map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        Self::from_table(user, overrides)
    }

    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let user = text.parse::<toml::Table>().map_err(|e| Error::Config(e.to_string()))?;
        Self::from_table(user, overrides)
    }

    fn from_table(mut user: toml::Table, overrides: &[String]) -> Result<Self> {
        for o in overrides {
            apply_override(&mut user, o)?;
        }
        let preset = match user.remove("preset") {
            Some(v) => v.try_into::<Preset>().map_err(|e| Error::Config(format!("preset: {e}")))?,
            None => Preset::Dash,
        };
        let mut merged = toml::Table::try_from(RunConfig::preset(preset)).map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut merged, user);
        let cfg: RunConfig = toml::Value::Table(merged).try_into().map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Sets `a.b.c=value` in `table`. The value is parsed as TOML and falls back
/// to a bare string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not of the form key=value")))?;
    let value = format!("v = {}", raw.trim())
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key `{key}`")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| Error::Config(format!("`{p}` in `{key}` is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
