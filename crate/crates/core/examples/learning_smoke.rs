//! Trains the default configuration on a two-floor tower (training seeds
//! 0-19) and compares 100 episodes of the trained policy with 1,000 episodes
//! of a uniform-random policy.
//!
//! `cargo run --release --example learning_smoke -- [steps] [output_dir]`

use std::time::Instant;

use ppo_dash::harness::{episode_returns, load_run_stats, mean_and_se, train, EvalSetup, RunConfig, UniformPolicy};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let steps: u64 = args.next().map_or(Ok(200_000), |s| s.parse())?;
    let mut cfg = RunConfig::dash();
    cfg.output_dir = args.next().unwrap_or_else(|| "runs/smoke".into()).into();
    cfg.env.num_floors = 2;
    cfg.seeds.train = (0..20).collect();
    cfg.total_steps = steps;
    cfg.checkpoint_interval = 0;

    let started = Instant::now();
    let result = train(cfg.clone())?;
    println!("trained {} steps in {:.0?}", result.env_steps, started.elapsed());

    let stats = load_run_stats(&cfg, &cfg.output_dir, None, None)?;
    let setup = EvalSetup::from_run(&cfg, stats);
    let ck = ppo_dash::harness::Checkpoint::load(&result.final_checkpoint)?;
    let trained = episode_returns(&ck.params, &setup, &cfg.seeds.train, 100, 1)?;
    let random = episode_returns(&UniformPolicy(cfg.arch().n_actions), &setup, &cfg.seeds.train, 1000, 2)?;
    let (mt, st) = mean_and_se(&trained);
    let (mr, sr) = mean_and_se(&random);
    let z = (mt - mr) / (st * st + sr * sr).sqrt();
    println!("trained return {mt:.3} (se {st:.3}), random {mr:.3} (se {sr:.3}), difference {z:.2} standard errors");
    Ok(())
}
