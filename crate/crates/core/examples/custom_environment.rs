//! Drives the PPO building blocks directly on a user-defined environment: a
//! one-step bandit where moving forward pays 1.
//!
//! `cargo run --release --example custom_environment`

use ppo_dash::minitower::{Environment, EventKind, FactoredAction, Move, Observation, RawEvent, StepOutcome};
use ppo_dash::nn::{forward, init_params, softmax, ArchConfig, OptimizerState};
use ppo_dash::ppo::{collect_rollout, compute_gae, ppo_update, EnvPool, PpoConfig};
use ppo_dash::wrappers::{ActionSetId, ActionTable, StackConfig, WrapperConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Bandit;

fn obs() -> Observation {
    Observation { channels: 1, height: 1, width: 1, pixels: vec![1.0], remaining_time_fraction: 1.0, keys_held: 0 }
}

impl Environment for Bandit {
    fn reset(&mut self, _seed: u64, _floor: usize) -> ppo_dash::Result<Observation> {
        Ok(obs())
    }
    fn step(&mut self, action: FactoredAction) -> ppo_dash::Result<StepOutcome> {
        Ok(StepOutcome {
            event: RawEvent { kind: EventKind::Step, remaining_time_fraction: 1.0 },
            raw_reward: if action.mv == Move::Forward { 1.0 } else { 0.0 },
            done: true,
            observation: obs(),
        })
    }
    fn observation_shape(&self) -> (usize, usize, usize) {
        (1, 1, 1)
    }
    fn num_floors(&self) -> usize {
        1
    }
    fn max_keys(&self) -> usize {
        0
    }
    fn floor(&self) -> usize {
        0
    }
    fn seed(&self) -> Option<u64> {
        Some(0)
    }
}

fn main() -> anyhow::Result<()> {
    let table = ActionTable {
        set_id: ActionSetId::A6,
        entries: vec![FactoredAction::NOOP, FactoredAction::with_move(Move::Forward)],
    };
    let wrappers = WrapperConfig {
        stack: StackConfig::NONE,
        shape_rewards: false,
        normalize: false,
        vector_obs: false,
        ..WrapperConfig::default()
    };
    let mut pool = EnvPool::new(|_| Bandit, 8, table, wrappers, None, vec![0], 0, 0)?;
    let arch = ArchConfig { input_dim: 1, hidden: 8, recurrent_width: 0, recurrent: false, n_actions: 2 };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut params = init_params(&mut rng, &arch)?;
    let mut opt = OptimizerState::new(params.len());
    let cfg =
        PpoConfig { rollout_len: 4, num_envs: 8, epochs: 4, minibatches: 2, learning_rate: 3e-3, ..PpoConfig::dash() };
    for update in 0..=200 {
        if update % 50 == 0 {
            let p = softmax(&forward(&params, &[1.0], &[], &[1.0])?.logits);
            println!("update {update:>3}: P(paying arm) = {:.4}", p[1]);
        }
        let buf = collect_rollout(&params, &mut pool, cfg.rollout_len)?;
        let (adv, ret) = compute_gae(&buf, cfg.gamma, cfg.gae_lambda);
        ppo_update(&mut params, &mut opt, &buf, &adv, &ret, &cfg, cfg.epochs, cfg.learning_rate, &mut rng)?;
    }
    Ok(())
}
