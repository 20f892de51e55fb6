//! Plays a solver-generated episode through two floors and prints the raw
//! event log next to the shaped rewards.
//!
//! `cargo run --release --example reward_shaping -- [seed]`

use anyhow::Context;
use ppo_dash::minitower::{solve, EnvConfig, EnvState, EventKind};
use ppo_dash::wrappers::{build_action_set, shape_reward, ActionSetId, RewardConfig};

fn main() -> anyhow::Result<()> {
    let seed: u64 = std::env::args().nth(1).map_or(Ok(0), |s| s.parse())?;
    let env = EnvConfig { num_floors: 4, ..EnvConfig::default() };
    let table = build_action_set(ActionSetId::A8);
    let reward = RewardConfig::default();
    let (mut state, _) = EnvState::reset(seed, 0, &env)?;
    let mut total = 0.0;
    while state.floor < 2 {
        let plan = solve(&state.layout, &table.entries).context("unsolvable floor")?;
        for i in plan {
            let out = state.step(table.get(i)?)?;
            if out.event.kind != EventKind::Step {
                let r = shape_reward(&out.event, &reward);
                total += r;
                println!(
                    "{:?} with {:.0}% time left: raw {:.1}, shaped {r:.3}",
                    out.event.kind,
                    100.0 * out.event.remaining_time_fraction,
                    out.raw_reward
                );
            }
        }
    }
    // Idle until the clock runs out.
    loop {
        let out = state.step(table.get(0)?)?;
        if out.done {
            let r = shape_reward(&out.event, &reward);
            total += r;
            println!("{:?}: shaped {r:.3}", out.event.kind);
            break;
        }
    }
    println!("episode shaped return {total:.3}");
    Ok(())
}
