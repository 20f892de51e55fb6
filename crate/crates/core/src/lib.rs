//! Recurrent PPO with the "Dash" set of practical improvements: reduced action
//! sets, a reduced frame stack with a brightness-only history channel, vector
//! observations, per-pixel observation normalization, shaped rewards and a
//! GRU memory.
//!
//! The crate also ships [`minitower`], a deterministic seeded multi-floor grid
//! tower used as the training environment, and a [`harness`] that trains,
//! validates on held-out seeds and runs ablation studies.
//!
//! Module map:
//!
//! - [`minitower`]: environment, floor generator, solver, text rendering.
//! - [`wrappers`]: action tables, frame stacking, observation statistics,
//!   reward shaping, vector-observation encoding.
//! - [`nn`]: MLP + GRU policy/value network with hand-written backprop and Adam.
//! - [`ppo`]: rollout collection, GAE, recurrent minibatching, clipped updates.
//! - [`harness`]: run configs, training loop, checkpoints, validation, studies,
//!   the text playtest mode.

pub mod error;
pub mod harness;
pub mod minitower;
pub mod nn;
pub mod ppo;
pub mod wrappers;

pub use error::{Error, Result};
