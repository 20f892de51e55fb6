//! Builds per-pixel observation statistics from random play on the training
//! seeds, writes them and prints the file hash.
//!
//! `cargo run --release --example build_obs_stats -- [output] [steps]`

use ppo_dash::harness::{build_stats_cmd, RunConfig};
use ppo_dash::wrappers::normalize;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next().unwrap_or_else(|| "obs_stats.bin".into());
    let mut cfg = RunConfig::dash();
    if let Some(n) = args.next() {
        cfg.stats.steps = n.parse()?;
    }
    let (stats, hash) = build_stats_cmd(&cfg, out.as_ref())?;
    println!("{} samples, shape {:?}, global std {:.4}", stats.sample_count, stats.shape, stats.global_std);
    println!("sha256 {hash}");
    let zeros = normalize(&vec![0.0; stats.pixel_mean.len()], &stats)?;
    println!("a black frame normalizes to mean {:.3}", zeros.iter().sum::<f64>() / zeros.len() as f64);
    Ok(())
}
