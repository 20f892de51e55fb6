//! Observation, action and reward transformations between the environment
//! and the learner.

mod actions;
mod reward;
mod stack;
mod stats;
mod vector;

pub use actions::{apply_action, build_action_set, dump_action_tables, ActionSetId, ActionTable};
pub use reward::{shape_reward, RewardConfig};
pub use stack::{brightness, stack_frames, stack_pixels, FrameStacker, StackConfig};
pub use stats::{
    build_obs_stats, denormalize, normalize, ObsStats, StatsAccumulator, DEFAULT_STATS_STEPS, MIN_GLOBAL_STD,
    STATS_SEGMENT_LEN,
};
pub use vector::{encode_vector_obs, vector_obs_len};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minitower::{Observation, RawEvent};

/// Which wrapper layers are active.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WrapperConfig {
    pub action_set: ActionSetId,
    pub stack: StackConfig,
    pub reward: RewardConfig,
    /// Use shaped rewards; otherwise the environment's raw reward.
    pub shape_rewards: bool,
    pub normalize: bool,
    /// Append the time/key vector to the network input.
    pub vector_obs: bool,
}

impl Default for WrapperConfig {
    fn default() -> Self {
        WrapperConfig {
            action_set: ActionSetId::A8,
            stack: StackConfig::DASH,
            reward: RewardConfig::default(),
            shape_rewards: true,
            normalize: true,
            vector_obs: true,
        }
    }
}

impl WrapperConfig {
    pub fn input_dim(&self, shape: (usize, usize, usize), max_keys: usize) -> usize {
        let pixels = self.stack.output_channels(shape.0) * shape.1 * shape.2;
        pixels + if self.vector_obs { vector_obs_len(max_keys) } else { 0 }
    }

    pub fn reward(&self, event: &RawEvent, raw_reward: f64) -> f64 {
        if self.shape_rewards {
            shape_reward(event, &self.reward)
        } else {
            raw_reward
        }
    }
}

/// Per-environment observation pipeline: normalize, stack with history, then
/// append the vector observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationPipeline {
    stacker: FrameStacker,
    vector_obs: bool,
    max_keys: usize,
}

impl ObservationPipeline {
    pub fn new(cfg: &WrapperConfig, shape: (usize, usize, usize), max_keys: usize) -> Result<Self> {
        Ok(ObservationPipeline { stacker: FrameStacker::new(cfg.stack, shape)?, vector_obs: cfg.vector_obs, max_keys })
    }

    /// Forgets the frame history; call at every episode start.
    pub fn reset(&mut self) {
        self.stacker.reset();
    }

    pub fn process(&mut self, obs: &Observation, stats: Option<&ObsStats>) -> Result<Vec<f64>> {
        let frame = match stats {
            Some(s) => {
                if s.shape != obs.shape() {
                    return Err(Error::shape(format!("{:?}", s.shape), format!("{:?}", obs.shape())));
                }
                normalize(&obs.pixels, s)?
            }
            None => obs.pixels.clone(),
        };
        let mut input = self.stacker.push(frame)?;
        if self.vector_obs {
            input.extend(encode_vector_obs(obs.remaining_time_fraction, obs.keys_held, self.max_keys)?);
        }
        Ok(input)
    }
}
