//! Trains a small recurrent policy on a two-floor tower and prints the
//! per-cycle metrics.
//!
//! `cargo run --release --example train_quickstart -- [output_dir]`

use ppo_dash::harness::{train, RunConfig};

fn main() -> anyhow::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "runs/quickstart".into());
    let mut cfg = RunConfig::dash();
    cfg.output_dir = out.into();
    cfg.env.num_floors = 2;
    cfg.seeds.train = (0..20).collect();
    cfg.network.hidden = 32;
    cfg.network.recurrent_width = 32;
    cfg.ppo.rollout_len = 64;
    cfg.ppo.num_envs = 8;
    cfg.ppo.minibatches = 4;
    cfg.ppo.learning_rate = 1e-3;
    cfg.total_steps = 20 * 64 * 8;
    cfg.stats.steps = 2_000;

    let result = train(cfg)?;
    println!("{:>5} {:>8} {:>8} {:>10} {:>8} {:>8}", "cycle", "steps", "episodes", "return", "floor", "entropy");
    for m in &result.metrics {
        println!(
            "{:>5} {:>8} {:>8} {:>10} {:>8} {:>8.3}",
            m.cycle,
            m.env_steps,
            m.episodes,
            m.mean_episode_reward.map_or("-".into(), |r| format!("{r:.2}")),
            m.mean_floor.map_or("-".into(), |f| format!("{f:.2}")),
            m.update.entropy
        );
    }
    println!("final checkpoint: {}", result.final_checkpoint.display());
    Ok(())
}
