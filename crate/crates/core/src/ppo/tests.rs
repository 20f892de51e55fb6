use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::minitower::{
    EnvConfig, Environment, EventKind, FactoredAction, MiniTower, Move, Observation, RawEvent, StepOutcome,
};
use crate::nn::{forward, init_params, ArchConfig, OptimizerState, PolicyParams, Tensor};
use crate::wrappers::{build_action_set, ActionSetId, ActionTable, StackConfig, WrapperConfig};
use crate::Result;

/// Double-sum oracle: `A_t = sum_k (gamma lambda)^(k-t) delta_k`, with the sum
/// cut at the first episode boundary after `t`.
fn gae_oracle(
    r: &[f64],
    v: &[f64],
    m: &[f64],
    boot: &[f64],
    bm: &[f64],
    t_len: usize,
    n_envs: usize,
    g: f64,
    l: f64,
) -> Vec<f64> {
    let mut out = vec![0.0; t_len * n_envs];
    for n in 0..n_envs {
        let next = |t: usize| {
            if t + 1 == t_len {
                (boot[n], bm[n])
            } else {
                (v[(t + 1) * n_envs + n], m[(t + 1) * n_envs + n])
            }
        };
        let delta = |t: usize| {
            let (nv, nm) = next(t);
            r[t * n_envs + n] + g * nv * nm - v[t * n_envs + n]
        };
        for t in 0..t_len {
            let mut sum = 0.0;
            let mut w = 1.0;
            for k in t..t_len {
                sum += w * delta(k);
                let (_, nm) = next(k);
                if nm == 0.0 {
                    break;
                }
                w *= g * l;
            }
            out[t * n_envs + n] = sum;
        }
    }
    out
}

#[test]
fn gae_matches_double_sum_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let t = rng.gen_range(1..=16);
        let n = rng.gen_range(1..=4);
        let r: Vec<f64> = (0..t * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..t * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m: Vec<f64> = (0..t * n).map(|_| if rng.gen_bool(0.2) { 0.0 } else { 1.0 }).collect();
        let boot: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let bm: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.2) { 0.0 } else { 1.0 }).collect();
        let (g, l) = (rng.gen_range(0.8..1.0), rng.gen_range(0.0..1.0));
        let (adv, ret) = gae_advantages(&r, &v, &m, &boot, &bm, t, n, g, l);
        let want = gae_oracle(&r, &v, &m, &boot, &bm, t, n, g, l);
        for i in 0..t * n {
            assert!((adv[i] - want[i]).abs() <= 1e-10);
            assert!((ret[i] - adv[i] - v[i]).abs() <= 1e-12);
        }
    }
}

/// Hand-built two-step buffer. With all weights zero the network outputs its
/// biases: logits (0, ln 3) give p = (0.25, 0.75), value 0.3.
#[test]
fn two_step_loss_matches_hand_computation() {
    let arch = ArchConfig { input_dim: 3, hidden: 2, recurrent_width: 2, recurrent: true, n_actions: 2 };
    let mut p = PolicyParams::zeros(arch);
    p.get_mut(Tensor::PiB)[1] = 3f64.ln();
    p.get_mut(Tensor::VB)[0] = 0.3;
    let mb = MinibatchData {
        steps: 2,
        batch: 1,
        obs: vec![0.1, 0.2, 0.3, -0.1, 0.0, 0.5],
        hidden0: vec![0.0, 0.0],
        masks: vec![0.0, 1.0],
        actions: vec![0, 1],
        // Ratios 1.5 and 0.5.
        old_log_probs: vec![(1.0f64 / 6.0).ln(), 1.5f64.ln()],
        advantages: vec![1.0, -1.0],
        returns: vec![0.5, 0.2],
    };
    let cfg = PpoConfig { clip_epsilon: 0.2, value_coef: 0.5, entropy_coef: 0.01, ..PpoConfig::dash() };
    let s = ppo_loss(&p, &mb, &cfg).unwrap();
    // policy = -(min(1.5, 1.2) * 1 + min(-0.5, -0.8)) / 2 = -0.2
    assert!((s.policy - -0.2).abs() < 1e-10);
    // value = 0.5 * (0.2^2 + 0.1^2) / 2 = 0.0125
    assert!((s.value - 0.0125).abs() < 1e-10);
    // H(0.25, 0.75) = 0.5623351446188083
    assert!((s.entropy - 0.562_335_144_618_808_3).abs() < 1e-10);
    assert!((s.total - -0.193_123_351_446_188_08).abs() < 1e-10);
    assert_eq!(s.clip_fraction, 1.0);
    assert!((s.mean_ratio - 1.0).abs() < 1e-10);
}

fn random_minibatch(params: &PolicyParams, steps: usize, batch: usize, rng: &mut ChaCha8Rng) -> MinibatchData {
    let a = params.arch;
    let rows = steps * batch;
    let obs: Vec<f64> = (0..rows * a.input_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let hidden0: Vec<f64> = (0..batch * a.state_width()).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let masks: Vec<f64> = (0..rows).map(|i| if i < batch || rng.gen_bool(0.1) { 0.0 } else { 1.0 }).collect();
    let actions: Vec<usize> = (0..rows).map(|_| rng.gen_range(0..a.n_actions)).collect();
    let mut mb = MinibatchData {
        steps,
        batch,
        obs,
        hidden0,
        masks,
        actions,
        old_log_probs: vec![0.0; rows],
        advantages: (0..rows).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        returns: (0..rows).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    };
    let (ev, _) = evaluate_actions(params, &mb).unwrap();
    mb.old_log_probs = ev.log_probs.iter().map(|lp| lp + rng.gen_range(-0.4..0.4)).collect();
    mb
}

#[test]
fn full_loss_gradient_matches_finite_differences() {
    let arch = ArchConfig { input_dim: 7, hidden: 6, recurrent_width: 5, recurrent: true, n_actions: 4 };
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut p = init_params(&mut rng, &arch).unwrap();
    // Larger head weights so policy terms dominate rounding.
    p.get_mut(Tensor::PiW).iter_mut().for_each(|w| *w *= 50.0);
    let mb = random_minibatch(&p, 5, 2, &mut rng);
    let cfg = PpoConfig { entropy_coef: 0.05, ..PpoConfig::dash() };
    let (_, g) = ppo_loss_and_grad(&p, &mb, &cfg).unwrap();
    let h = 1e-5;
    for i in 0..p.len() {
        let orig = p.data[i];
        p.data[i] = orig + h;
        let up = ppo_loss(&p, &mb, &cfg).unwrap().total;
        p.data[i] = orig - h;
        let down = ppo_loss(&p, &mb, &cfg).unwrap().total;
        p.data[i] = orig;
        let fd = (up - down) / (2.0 * h);
        let err = (fd - g.data[i]).abs();
        assert!(err <= 1e-3 * fd.abs().max(g.data[i].abs()) || err < 1e-9, "param {i}: {} vs {fd}", g.data[i]);
    }
}

#[test]
fn epsilon_zero_loss_is_minus_mean_advantage() {
    let arch = ArchConfig { input_dim: 4, hidden: 4, recurrent_width: 3, recurrent: false, n_actions: 3 };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = init_params(&mut rng, &arch).unwrap();
    let mut mb = random_minibatch(&p, 1, 20, &mut rng);
    mb.old_log_probs = evaluate_actions(&p, &mb).unwrap().0.log_probs;
    standardize(&mut mb.advantages);
    let cfg = PpoConfig { clip_epsilon: 0.0, ..PpoConfig::dash() };
    let s = ppo_loss(&p, &mb, &cfg).unwrap();
    assert!(s.policy.abs() < 1e-12);
    assert_eq!(s.clip_fraction, 0.0);
}

fn small_tower() -> EnvConfig {
    EnvConfig { num_floors: 2, ..EnvConfig::default() }
}

fn tower_pool(recurrent: bool, n: usize, seed: u64) -> (EnvPool<MiniTower>, PolicyParams) {
    let wrappers = WrapperConfig { normalize: false, ..WrapperConfig::default() };
    let cfg = small_tower();
    let shape = cfg.observation_shape();
    let table = build_action_set(wrappers.action_set);
    let sw = if recurrent { 8 } else { 0 };
    let pool = EnvPool::new(
        |_| MiniTower::new(cfg.clone()),
        n,
        table.clone(),
        wrappers.clone(),
        None,
        (0..5).collect(),
        sw,
        seed,
    )
    .unwrap();
    let arch = ArchConfig {
        input_dim: wrappers.input_dim(shape, cfg.max_keys),
        hidden: 16,
        recurrent_width: 8,
        recurrent,
        n_actions: table.len(),
    };
    let params = init_params(&mut ChaCha8Rng::seed_from_u64(seed), &arch).unwrap();
    (pool, params)
}

#[test]
fn rollout_shape_masks_and_determinism() {
    let (mut pool, params) = tower_pool(true, 4, 5);
    let buf = collect_rollout(&params, &mut pool, 400).unwrap();
    assert_eq!((buf.steps, buf.envs), (400, 4));
    assert_eq!(buf.obs.len(), 400 * 4 * buf.obs_dim);
    for n in 0..4 {
        assert_eq!(buf.masks[n], 0.0);
        for t in 1..400 {
            let i = t * 4 + n;
            assert_eq!(buf.masks[i] == 0.0, buf.dones[i - 4]);
        }
        assert_eq!(buf.bootstrap_masks[n] == 0.0, buf.dones[399 * 4 + n]);
    }
    assert!(buf.dones.iter().any(|&d| d), "expected at least one finished episode");
    assert_eq!(buf.episodes.len(), buf.dones.iter().filter(|&&d| d).count());
    let (mut pool2, _) = tower_pool(true, 4, 5);
    assert_eq!(collect_rollout(&params, &mut pool2, 400).unwrap(), buf);
    assert!(pool.seeds_used().iter().all(|s| *s < 5));
}

#[test]
fn replay_reproduces_rollout_log_probs_and_ratio_one() {
    for recurrent in [true, false] {
        let (mut pool, params) = tower_pool(recurrent, 4, 11);
        let buf = collect_rollout(&params, &mut pool, 64).unwrap();
        let (adv, ret) = compute_gae(&buf, 0.99, 0.95);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mbs = recurrent_minibatches(buf.steps, buf.envs, 2, recurrent, &mut rng).unwrap();
        for mb in &mbs {
            let data = MinibatchData::gather(&buf, mb, &adv, &ret);
            let (ev, _) = evaluate_actions(&params, &data).unwrap();
            for (a, b) in ev.log_probs.iter().zip(&data.old_log_probs) {
                assert!((a - b).abs() <= 1e-10);
            }
            let s = ppo_loss(&params, &data, &PpoConfig::dash()).unwrap();
            assert!(s.max_ratio_deviation <= 1e-10);
            assert_eq!(s.clip_fraction, 0.0);
        }
        let mean = adv.iter().sum::<f64>() / adv.len() as f64;
        let std = (adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / adv.len() as f64).sqrt();
        assert!(mean.abs() <= 1e-9 && (std - 1.0).abs() <= 1e-6);
    }
}

#[test]
fn snapshot_restore_continues_identically() {
    let (mut pool, params) = tower_pool(true, 3, 21);
    collect_rollout(&params, &mut pool, 50).unwrap();
    let snap = pool.snapshot();
    let json = serde_json::to_string(&snap).unwrap();
    let a = collect_rollout(&params, &mut pool, 80).unwrap();
    let (mut other, _) = tower_pool(true, 3, 999);
    other.restore(serde_json::from_str(&json).unwrap()).unwrap();
    let b = collect_rollout(&params, &mut other, 80).unwrap();
    assert_eq!(a, b);
}

/// One-step episodes: action 1 pays 1, action 0 pays 0.
struct Bandit;

impl Environment for Bandit {
    fn reset(&mut self, _: u64, _: usize) -> Result<Observation> {
        Ok(Observation {
            channels: 1,
            height: 1,
            width: 1,
            pixels: vec![1.0],
            remaining_time_fraction: 1.0,
            keys_held: 0,
        })
    }
    fn step(&mut self, action: FactoredAction) -> Result<StepOutcome> {
        let paid = action.mv == Move::Forward;
        Ok(StepOutcome {
            event: RawEvent { kind: EventKind::Step, remaining_time_fraction: 1.0 },
            raw_reward: if paid { 1.0 } else { 0.0 },
            done: true,
            observation: self.reset(0, 0)?,
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

#[test]
fn bandit_learns_the_paying_arm() {
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
    let mut pool = EnvPool::new(|_| Bandit, 8, table, wrappers, None, vec![0], 0, 1).unwrap();
    let arch = ArchConfig { input_dim: 1, hidden: 8, recurrent_width: 0, recurrent: false, n_actions: 2 };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut params = init_params(&mut rng, &arch).unwrap();
    let mut opt = OptimizerState::new(params.len());
    let cfg =
        PpoConfig { rollout_len: 4, num_envs: 8, epochs: 4, minibatches: 2, learning_rate: 3e-3, ..PpoConfig::dash() };
    for _ in 0..200 {
        let buf = collect_rollout(&params, &mut pool, cfg.rollout_len).unwrap();
        let (adv, ret) = compute_gae(&buf, cfg.gamma, cfg.gae_lambda);
        ppo_update(&mut params, &mut opt, &buf, &adv, &ret, &cfg, cfg.epochs, cfg.learning_rate, &mut rng).unwrap();
    }
    let out = forward(&params, &[1.0], &[], &[1.0]).unwrap();
    let p = crate::nn::softmax(&out.logits);
    assert!(p[1] > 0.99, "p = {p:?}");
}

#[test]
fn every_transition_used_once_per_epoch() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for recurrent in [true, false] {
        let mut counts = [0; 6 * 8];
        for _ in 0..3 {
            for mb in recurrent_minibatches(6, 8, 4, recurrent, &mut rng).unwrap() {
                for i in mb.transitions(6, 8) {
                    counts[i] += 1;
                }
            }
        }
        assert!(counts.iter().all(|&c| c == 3));
    }
}
