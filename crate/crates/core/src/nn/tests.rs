use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn arch(recurrent: bool) -> ArchConfig {
    ArchConfig { input_dim: 6, hidden: 5, recurrent_width: 4, recurrent, n_actions: 3 }
}

fn random_params(arch: &ArchConfig, seed: u64) -> PolicyParams {
    // Larger-than-init weights so every path carries signal.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = PolicyParams::zeros(*arch);
    p.data.iter_mut().for_each(|x| *x = rng.gen_range(-0.6..0.6));
    p
}

fn randn(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

struct Case {
    obs: Vec<f64>,
    h0: Vec<f64>,
    masks: Vec<f64>,
    wl: Vec<f64>,
    wv: Vec<f64>,
    steps: usize,
    batch: usize,
}

fn case(a: &ArchConfig, steps: usize, batch: usize, seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = steps * batch;
    let masks = (0..rows).map(|i| if i == batch + 1 { 0.0 } else { 1.0 }).collect();
    Case {
        obs: randn(rows * a.input_dim, &mut rng),
        h0: randn(batch * a.state_width(), &mut rng),
        masks,
        wl: randn(rows * a.n_actions, &mut rng),
        wv: randn(rows, &mut rng),
        steps,
        batch,
    }
}

/// Scalar test loss: a fixed linear functional of logits and values.
fn loss(p: &PolicyParams, c: &Case) -> f64 {
    let (out, _) = forward_sequence(p, &c.obs, &c.h0, &c.masks, c.steps, c.batch).unwrap();
    out.logits.iter().zip(&c.wl).map(|(a, b)| a * b).sum::<f64>()
        + out.values.iter().zip(&c.wv).map(|(a, b)| a * b).sum::<f64>()
}

fn gradient_check(recurrent: bool) {
    let a = arch(recurrent);
    let mut p = random_params(&a, 11);
    let c = case(&a, 4, 3, 5);
    let (_, tape) = forward_sequence(&p, &c.obs, &c.h0, &c.masks, c.steps, c.batch).unwrap();
    let g = backward(&p, &tape, &c.wl, &c.wv).unwrap();
    let eps = 1e-5;
    for i in 0..p.len() {
        let orig = p.data[i];
        p.data[i] = orig + eps;
        let up = loss(&p, &c);
        p.data[i] = orig - eps;
        let down = loss(&p, &c);
        p.data[i] = orig;
        let fd = (up - down) / (2.0 * eps);
        let rel = (fd - g.data[i]).abs() / fd.abs().max(g.data[i].abs()).max(1e-8);
        assert!(rel < 1e-3 || (fd - g.data[i]).abs() < 1e-9, "param {i}: analytic {} vs fd {fd}", g.data[i]);
    }
}

#[test]
fn gradient_matches_finite_differences_recurrent() {
    gradient_check(true);
}

#[test]
fn gradient_matches_finite_differences_feedforward() {
    gradient_check(false);
}

#[test]
fn init_outputs_are_small() {
    let a = ArchConfig { input_dim: 40, hidden: 32, recurrent_width: 16, recurrent: true, n_actions: 8 };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let p = init_params(&mut rng, &a).unwrap();
    for _ in 0..100 {
        let obs = randn(a.input_dim, &mut rng);
        let out = forward(&p, &obs, &[0.0; 16], &[1.0]).unwrap();
        assert!(out.logits.iter().all(|l| l.abs() < 0.1), "{:?}", out.logits);
        assert!(out.values[0].abs() < 1.0 + 1e-12);
    }
}

#[test]
fn rows_are_independent_of_batch_composition() {
    let a = arch(true);
    let p = random_params(&a, 2);
    let c = case(&a, 3, 4, 9);
    let (full, _) = forward_sequence(&p, &c.obs, &c.h0, &c.masks, 3, 4).unwrap();
    let (d, s) = (a.input_dim, a.state_width());
    for b in 0..4 {
        let obs: Vec<f64> = (0..3).flat_map(|t| c.obs[(t * 4 + b) * d..(t * 4 + b + 1) * d].to_vec()).collect();
        let masks: Vec<f64> = (0..3).map(|t| c.masks[t * 4 + b]).collect();
        let (one, _) = forward_sequence(&p, &obs, &c.h0[b * s..(b + 1) * s], &masks, 3, 1).unwrap();
        for t in 0..3 {
            let row = t * 4 + b;
            for k in 0..a.n_actions {
                assert!((one.logits[t * a.n_actions + k] - full.logits[row * a.n_actions + k]).abs() < 1e-12);
            }
            assert!((one.values[t] - full.values[row]).abs() < 1e-12);
        }
    }
}

#[test]
fn zero_mask_resets_state() {
    let a = arch(true);
    let p = random_params(&a, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let obs = randn(a.input_dim, &mut rng);
    let h_a = randn(4, &mut rng);
    let fresh = forward(&p, &obs, &[0.0; 4], &[1.0]).unwrap();
    let masked = forward(&p, &obs, &h_a, &[0.0]).unwrap();
    assert_eq!(fresh, masked);
    let carried = forward(&p, &obs, &h_a, &[1.0]).unwrap();
    assert_ne!(fresh.hidden, carried.hidden);
}

#[test]
fn sequence_equals_stepwise_replay() {
    let a = arch(true);
    let p = random_params(&a, 6);
    let c = case(&a, 6, 2, 3);
    let (seq, _) = forward_sequence(&p, &c.obs, &c.h0, &c.masks, 6, 2).unwrap();
    let mut h = c.h0.clone();
    let d = a.input_dim;
    for t in 0..6 {
        let out = forward(&p, &c.obs[t * 2 * d..(t + 1) * 2 * d], &h, &c.masks[t * 2..(t + 1) * 2]).unwrap();
        for (x, y) in out.logits.iter().zip(&seq.logits[t * 2 * 3..(t + 1) * 2 * 3]) {
            assert!((x - y).abs() <= 1e-10);
        }
        h = out.hidden;
    }
    assert!(h.iter().zip(&seq.hidden).all(|(x, y)| (x - y).abs() <= 1e-10));
}

#[test]
fn non_finite_and_bad_shapes_are_rejected() {
    let a = arch(true);
    let p = random_params(&a, 1);
    let mut obs = vec![0.0; a.input_dim];
    assert!(forward(&p, &obs[1..], &[0.0; 4], &[1.0]).is_err());
    assert!(forward(&p, &obs, &[0.0; 3], &[1.0]).is_err());
    obs[2] = f64::NAN;
    assert!(matches!(forward(&p, &obs, &[0.0; 4], &[1.0]), Err(crate::Error::NonFinite(_))));
}
