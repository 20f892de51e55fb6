//! The PPO learner: rollout collection over a pool of environments,
//! generalized advantage estimation, sequence-preserving minibatches and the
//! clipped-surrogate update.

mod buffer;
mod config;
mod gae;
mod loss;
mod minibatch;
mod update;

pub use buffer::{collect_rollout, EnvPool, EnvSlot, EpisodeRecord, PoolSnapshot, RolloutBuffer, SlotSnapshot};
pub use config::{annealed_lr, apply_schedule, PpoConfig, Schedule};
pub use gae::{compute_gae, gae_advantages, standardize};
pub use loss::{evaluate_actions, ppo_loss, ppo_loss_and_grad, ActionEvaluation, LossStats};
pub use minibatch::{recurrent_minibatches, Minibatch, MinibatchData};
pub use update::{ppo_update, UpdateStats};

#[cfg(test)]
mod tests;
