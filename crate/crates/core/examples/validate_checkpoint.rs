//! Evaluates a checkpoint on held-out seeds: five stochastic runs per seed,
//! per-seed mean floors and the mean of means.
//!
//! `cargo run --release --example validate_checkpoint -- <checkpoint> [test]`

use std::path::PathBuf;

use anyhow::Context;
use ppo_dash::harness::{validate, Checkpoint, TrainerState};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let ckpt = PathBuf::from(args.next().context("usage: validate_checkpoint <checkpoint> [test]")?);
    let use_test = args.next().as_deref() == Some("test");
    let seeds = if use_test {
        let ck = Checkpoint::load(&ckpt)?;
        let state: TrainerState = serde_json::from_slice(&ck.trainer_state)?;
        Some(state.config.seeds.test)
    } else {
        None
    };
    let report = validate(&ckpt, seeds.as_deref(), 5, 0, None)?;
    print!("{}", report.to_text());
    Ok(())
}
