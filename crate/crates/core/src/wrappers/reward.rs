use serde::{Deserialize, Serialize};

use crate::minitower::{EventKind, RawEvent};

/// Shaped reward per event kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    pub floor_base: f64,
    /// Multiplies the remaining-time fraction on floor completion.
    pub floor_time_bonus_scale: f64,
    pub puzzle_reward: f64,
    pub health_pickup_reward: f64,
    pub game_over_reward: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            floor_base: 1.0,
            floor_time_bonus_scale: 3.0,
            puzzle_reward: 1.0,
            health_pickup_reward: 0.1,
            game_over_reward: -1.0,
        }
    }
}

pub fn shape_reward(event: &RawEvent, cfg: &RewardConfig) -> f64 {
    match event.kind {
        EventKind::FloorComplete => {
            cfg.floor_base + cfg.floor_time_bonus_scale * event.remaining_time_fraction.clamp(0.0, 1.0)
        }
        EventKind::PuzzleComplete => cfg.puzzle_reward,
        EventKind::HealthPickup => cfg.health_pickup_reward,
        EventKind::GameOver => cfg.game_over_reward,
        EventKind::Step => 0.0,
    }
}
