//! Shows that a run resumed from a mid-run checkpoint ends with exactly the
//! parameters of an uninterrupted run.
//!
//! `cargo run --release --example resume_training -- [scratch_dir]`

use std::path::PathBuf;

use ppo_dash::harness::{train, Checkpoint, RunConfig, Trainer};

fn tiny(out: PathBuf) -> RunConfig {
    let mut cfg = RunConfig::dash();
    cfg.output_dir = out;
    cfg.env.num_floors = 2;
    cfg.network.hidden = 16;
    cfg.network.recurrent_width = 16;
    cfg.ppo.rollout_len = 32;
    cfg.ppo.num_envs = 4;
    cfg.ppo.minibatches = 2;
    cfg.stats.steps = 500;
    cfg.total_steps = 6 * 32 * 4;
    cfg.checkpoint_interval = 2;
    cfg
}

fn main() -> anyhow::Result<()> {
    let root = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "runs/resume_demo".into()));
    let full = train(tiny(root.join("full")))?;

    let mut first = Trainer::new(tiny(root.join("split")))?;
    first.run_until(3 * 32 * 4)?;
    let mid = first.save_checkpoint("mid.ckpt")?;
    drop(first);
    let resumed = Trainer::resume(&mid, &root.join("split"), None)?.finish()?;

    let a = Checkpoint::load(&full.final_checkpoint)?;
    let b = Checkpoint::load(&resumed.final_checkpoint)?;
    println!("uninterrupted: {} steps, resumed: {} steps", full.env_steps, resumed.env_steps);
    println!("identical parameters: {}", a.params == b.params && a.opt == b.opt);
    let m1 = std::fs::read(root.join("full/metrics.jsonl"))?;
    let m2 = std::fs::read(root.join("split/metrics.jsonl"))?;
    println!("identical metrics logs: {}", m1 == m2);
    Ok(())
}
