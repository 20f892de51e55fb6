//! Solves floor 0 of a tower with the breadth-first solver restricted to the
//! six-action set, then replays the plan through the text play mode.
//!
//! `cargo run --release --example solve_and_play -- [seed]`

use std::io::Cursor;

use anyhow::Context;
use ppo_dash::harness::play;
use ppo_dash::minitower::{generate_floor, solve, EnvConfig};
use ppo_dash::wrappers::{build_action_set, ActionSetId, RewardConfig};

fn main() -> anyhow::Result<()> {
    let seed: u64 = std::env::args().nth(1).map_or(Ok(0), |s| s.parse())?;
    let env = EnvConfig::default();
    let table = build_action_set(ActionSetId::A6);
    let layout = generate_floor(seed, 0, &env)?;
    println!("{}", layout.to_text());
    let plan = solve(&layout, &table.entries).context("floor 0 has no A6 solution")?;
    println!("A6 plan: {} actions", plan.len());

    let script: String = plan.iter().map(|i| format!("{i}\n")).chain(["quit\n".to_string()]).collect();
    let mut screen = Vec::new();
    let summary = play(seed, false, ActionSetId::A6, &env, &RewardConfig::default(), Cursor::new(script), &mut screen)?;
    let text = String::from_utf8(screen)?;
    println!("{}", text.lines().rev().take(12).collect::<Vec<_>>().into_iter().rev().collect::<Vec<_>>().join("\n"));
    println!(
        "reached floor {} after {} steps, shaped return {:.2}",
        summary.floor_reached, summary.steps, summary.shaped_return
    );
    Ok(())
}
