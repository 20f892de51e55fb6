use super::buffer::RolloutBuffer;

/// Raw GAE advantages and returns for time-major `(T, N)` arrays.
///
/// `masks[t][n] = 0` marks the start of a new episode at step `t`;
/// `bootstrap_masks[n]` plays that role for step `T`.
#[allow(clippy::too_many_arguments)]
pub fn gae_advantages(
    rewards: &[f64],
    values: &[f64],
    masks: &[f64],
    bootstrap_values: &[f64],
    bootstrap_masks: &[f64],
    steps: usize,
    envs: usize,
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let mut adv = vec![0.0; steps * envs];
    for n in 0..envs {
        let mut next_adv = 0.0;
        for t in (0..steps).rev() {
            let i = t * envs + n;
            let (next_value, next_mask) = if t + 1 == steps {
                (bootstrap_values[n], bootstrap_masks[n])
            } else {
                (values[i + envs], masks[i + envs])
            };
            let delta = rewards[i] + gamma * next_value * next_mask - values[i];
            next_adv = delta + gamma * lambda * next_mask * next_adv;
            adv[i] = next_adv;
        }
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, returns)
}

/// Shifts and scales to mean 0 and standard deviation 1.
pub fn standardize(xs: &mut [f64]) {
    if xs.is_empty() {
        return;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    xs.iter_mut().for_each(|x| *x = (*x - mean) / (std + 1e-8));
}

/// GAE over a collected buffer. Returns `(standardized advantages, returns)`;
/// returns are computed from the raw advantages.
pub fn compute_gae(buffer: &RolloutBuffer, gamma: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let (mut adv, ret) = gae_advantages(
        &buffer.rewards,
        &buffer.values,
        &buffer.masks,
        &buffer.bootstrap_values,
        &buffer.bootstrap_masks,
        buffer.steps,
        buffer.envs,
        gamma,
        lambda,
    );
    standardize(&mut adv);
    (adv, ret)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn lambda_zero_is_td_error() {
        let r = [1.0, 0.5, -0.2];
        let v = [0.3, 0.1, 0.4];
        let m = [1.0, 1.0, 0.0];
        let (adv, ret) = gae_advantages(&r, &v, &m, &[2.0], &[1.0], 3, 1, 0.9, 0.0);
        assert!((adv[0] - (1.0 + 0.9 * 0.1 - 0.3)).abs() < 1e-15);
        assert!((adv[1] - (0.5 - 0.1)).abs() < 1e-15);
        assert!((adv[2] - (-0.2 + 0.9 * 2.0 - 0.4)).abs() < 1e-15);
        assert!((ret[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn lambda_one_is_discounted_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = 16;
        let r: Vec<f64> = (0..t).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..t).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let boot = 0.7;
        let g = 0.97;
        let (adv, _) = gae_advantages(&r, &v, &vec![1.0; t], &[boot], &[1.0], t, 1, g, 1.0);
        for s in 0..t {
            let want =
                (s..t).map(|k| g.powi((k - s) as i32) * r[k]).sum::<f64>() + g.powi((t - s) as i32) * boot - v[s];
            assert!((adv[s] - want).abs() < 1e-10);
        }
    }

    #[test]
    fn done_blocks_credit_flow() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let t = 10;
        let r: Vec<f64> = (0..t).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..t).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut m = vec![1.0; t];
        m[6] = 0.0;
        let (a, _) = gae_advantages(&r, &v, &m, &[0.5], &[1.0], t, 1, 0.99, 0.95);
        let mut r2 = r.clone();
        for x in &mut r2[6..] {
            *x += 3.0;
        }
        let (b, _) = gae_advantages(&r2, &v, &m, &[-4.0], &[1.0], t, 1, 0.99, 0.95);
        assert_eq!(a[..6], b[..6]);
        assert_ne!(a[6], b[6]);
    }

    #[test]
    fn standardized_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut xs: Vec<f64> = (0..1000).map(|_| rng.gen_range(-5.0..20.0)).collect();
        standardize(&mut xs);
        let mean = xs.iter().sum::<f64>() / 1000.0;
        let std = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 1000.0).sqrt();
        assert!(mean.abs() <= 1e-9);
        assert!((std - 1.0).abs() <= 1e-6);
    }
}
