use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::AdamConfig;

/// Switch to fewer epochs and a different learning rate once a step count is
/// reached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Schedule {
    /// `None` means "half of the run's total steps" once resolved by the
    /// trainer; [`apply_schedule`] treats an unresolved threshold as never.
    pub threshold_steps: Option<u64>,
    pub disabled: bool,
    pub post_epochs: usize,
    pub post_lr: f64,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule { threshold_steps: None, disabled: false, post_epochs: 1, post_lr: 1e-4 }
    }
}

impl Schedule {
    pub const NEVER: Schedule = Schedule { threshold_steps: None, disabled: true, post_epochs: 1, post_lr: 1e-4 };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    /// Rollout horizon `T`.
    pub rollout_len: usize,
    /// Concurrent environments `N`.
    pub num_envs: usize,
    pub epochs: usize,
    pub minibatches: usize,
    pub clip_epsilon: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub learning_rate: f64,
    /// Decay the learning rate linearly to zero over the run.
    pub anneal_lr: bool,
    pub schedule: Schedule,
    pub adam: AdamConfig,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig::dash()
    }
}

impl PpoConfig {
    /// Large-scale settings: long rollouts, 8 epochs, small constant lr.
    pub fn dash() -> Self {
        PpoConfig {
            rollout_len: 512,
            num_envs: 32,
            epochs: 8,
            minibatches: 8,
            clip_epsilon: 0.2,
            value_coef: 0.5,
            entropy_coef: 0.001,
            gamma: 0.99,
            gae_lambda: 0.95,
            learning_rate: 1e-4,
            anneal_lr: false,
            schedule: Schedule::default(),
            adam: AdamConfig::default(),
        }
    }

    /// Common defaults of the reference PPO implementation family, with 50
    /// concurrent agents.
    pub fn baseline() -> Self {
        PpoConfig {
            rollout_len: 128,
            num_envs: 50,
            epochs: 4,
            minibatches: 4,
            clip_epsilon: 0.1,
            value_coef: 0.5,
            entropy_coef: 0.01,
            gamma: 0.99,
            gae_lambda: 0.95,
            learning_rate: 2.5e-4,
            anneal_lr: true,
            schedule: Schedule::NEVER,
            adam: AdamConfig::default(),
        }
    }

    /// Environment steps per collect/update cycle.
    pub fn steps_per_cycle(&self) -> u64 {
        (self.rollout_len * self.num_envs) as u64
    }

    pub fn validate(&self, recurrent: bool) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.rollout_len == 0 || self.num_envs == 0 || self.epochs == 0 || self.minibatches == 0 {
            return bad(format!(
                "rollout_len, num_envs, epochs and minibatches must be positive (got {}, {}, {}, {})",
                self.rollout_len, self.num_envs, self.epochs, self.minibatches
            ));
        }
        if recurrent && !self.num_envs.is_multiple_of(self.minibatches) {
            return bad(format!("{} minibatches do not divide {} environments", self.minibatches, self.num_envs));
        }
        if !recurrent && self.minibatches > self.rollout_len * self.num_envs {
            return bad(format!("{} minibatches exceed the buffer size", self.minibatches));
        }
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gamma and gae_lambda must lie in [0, 1]".into());
        }
        if self.clip_epsilon < 0.0 || self.learning_rate < 0.0 || self.schedule.post_lr < 0.0 {
            return bad("clip_epsilon and learning rates must be non-negative".into());
        }
        if self.schedule.post_epochs == 0 {
            return bad("schedule.post_epochs must be positive".into());
        }
        Ok(())
    }
}

/// `(epochs, learning_rate)` in effect at `step_count`.
pub fn apply_schedule(step_count: u64, cfg: &PpoConfig) -> (usize, f64) {
    match cfg.schedule.threshold_steps {
        Some(th) if !cfg.schedule.disabled && step_count >= th => (cfg.schedule.post_epochs, cfg.schedule.post_lr),
        _ => (cfg.epochs, cfg.learning_rate),
    }
}

/// Linear decay of `lr` to zero at `total_steps`.
pub fn annealed_lr(lr: f64, step_count: u64, total_steps: u64) -> f64 {
    if total_steps == 0 {
        return lr;
    }
    lr * (1.0 - step_count as f64 / total_steps as f64).max(0.0)
}
