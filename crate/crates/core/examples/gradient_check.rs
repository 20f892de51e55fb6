//! Compares the analytic PPO loss gradient with central finite differences
//! on a width-32 recurrent network fed by a real rollout.
//!
//! `cargo run --release --example gradient_check -- [n_params]`

use ppo_dash::minitower::{EnvConfig, MiniTower};
use ppo_dash::nn::{init_params, ArchConfig};
use ppo_dash::ppo::{
    collect_rollout, compute_gae, ppo_loss, ppo_loss_and_grad, recurrent_minibatches, EnvPool, MinibatchData, PpoConfig,
};
use ppo_dash::wrappers::{build_action_set, WrapperConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> anyhow::Result<()> {
    let n_check: usize = std::env::args().nth(1).map_or(Ok(200), |s| s.parse())?;
    let env = EnvConfig { num_floors: 2, ..EnvConfig::default() };
    let wrappers = WrapperConfig { normalize: false, ..WrapperConfig::default() };
    let table = build_action_set(wrappers.action_set);
    let arch = ArchConfig {
        input_dim: wrappers.input_dim(env.observation_shape(), env.max_keys),
        hidden: 32,
        recurrent_width: 32,
        recurrent: true,
        n_actions: table.len(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut params = init_params(&mut rng, &arch)?;
    let mut pool = EnvPool::new(|_| MiniTower::new(env.clone()), 4, table, wrappers, None, (0..10).collect(), 32, 1)?;
    let buf = collect_rollout(&params, &mut pool, 32)?;
    let (adv, ret) = compute_gae(&buf, 0.99, 0.95);
    let mb = &recurrent_minibatches(buf.steps, buf.envs, 2, true, &mut rng)?[0];
    let mut data = MinibatchData::gather(&buf, mb, &adv, &ret);
    // Move the behaviour log-probs so some ratios leave the clip range.
    data.old_log_probs.iter_mut().for_each(|lp| *lp += rng.gen_range(-0.3..0.3));
    let cfg = PpoConfig::dash();

    let (_, grad) = ppo_loss_and_grad(&params, &data, &cfg)?;
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..n_check {
        let i = rng.gen_range(0..params.len());
        let orig = params.data[i];
        params.data[i] = orig + h;
        let up = ppo_loss(&params, &data, &cfg)?.total;
        params.data[i] = orig - h;
        let down = ppo_loss(&params, &data, &cfg)?.total;
        params.data[i] = orig;
        let fd = (up - down) / (2.0 * h);
        let scale = fd.abs().max(grad.data[i].abs());
        let rel = if scale < 1e-8 { 0.0 } else { (fd - grad.data[i]).abs() / scale };
        worst = worst.max(rel);
    }
    println!("{n_check} parameters checked, worst relative error {worst:.2e}");
    Ok(())
}
