//! Prints every action table and the generated layouts of the first floors
//! of one tower.
//!
//! `cargo run --release --example inspect_tables -- [seed] [floors]`

use ppo_dash::minitower::{dump_layout, EnvConfig};
use ppo_dash::wrappers::dump_action_tables;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(Ok(0), |s| s.parse())?;
    let floors: usize = args.next().map_or(Ok(4), |s| s.parse())?;
    print!("{}", dump_action_tables());
    let env = EnvConfig::default();
    for floor in 0..floors.min(env.num_floors) {
        println!("\n{}", dump_layout(seed, floor, &env)?);
    }
    Ok(())
}
