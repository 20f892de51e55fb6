use rand::Rng;
use serde::{Deserialize, Serialize};

use super::buffer::RolloutBuffer;
use super::config::PpoConfig;
use super::loss::{ppo_loss_and_grad, LossStats};
use super::minibatch::{recurrent_minibatches, MinibatchData};
use crate::error::{Error, Result};
use crate::nn::{adam_step, OptimizerState, PolicyParams};

/// Averages over every minibatch step of one update.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UpdateStats {
    pub epochs: usize,
    pub learning_rate: f64,
    pub minibatch_steps: usize,
    pub total_loss: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub mean_ratio: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
    pub grad_norm: f64,
    /// Largest `|ratio - 1|` in the first minibatch, before any change.
    pub first_max_ratio_deviation: f64,
    pub first_clip_fraction: f64,
}

/// Runs `epochs` passes of clipped-surrogate minibatch updates over `buffer`.
/// On a non-finite loss or gradient the parameters keep the values they had
/// before the offending step.
#[allow(clippy::too_many_arguments)]
pub fn ppo_update<R: Rng + ?Sized>(
    params: &mut PolicyParams,
    opt: &mut OptimizerState,
    buffer: &RolloutBuffer,
    advantages: &[f64],
    returns: &[f64],
    cfg: &PpoConfig,
    epochs: usize,
    lr: f64,
    rng: &mut R,
) -> Result<UpdateStats> {
    let recurrent = params.arch.recurrent;
    let mut stats = UpdateStats { epochs, learning_rate: lr, ..Default::default() };
    let mut acc = LossStats::default();
    for epoch in 0..epochs {
        let mbs = recurrent_minibatches(buffer.steps, buffer.envs, cfg.minibatches, recurrent, rng)?;
        for (k, mb) in mbs.iter().enumerate() {
            let data = MinibatchData::gather(buffer, mb, advantages, returns);
            let (ls, grads) = ppo_loss_and_grad(params, &data, cfg).map_err(|e| match e {
                Error::NonFinite(m) => Error::NonFinite(format!("epoch {epoch}, minibatch {k}: {m}")),
                other => other,
            })?;
            if stats.minibatch_steps == 0 {
                stats.first_max_ratio_deviation = ls.max_ratio_deviation;
                stats.first_clip_fraction = ls.clip_fraction;
            }
            let report = adam_step(params, grads, opt, lr, &cfg.adam)
                .map_err(|e| Error::NonFinite(format!("epoch {epoch}, minibatch {k}: {e}; loss {ls:?}")))?;
            acc.total += ls.total;
            acc.policy += ls.policy;
            acc.value += ls.value;
            acc.entropy += ls.entropy;
            acc.mean_ratio += ls.mean_ratio;
            acc.clip_fraction += ls.clip_fraction;
            acc.approx_kl += ls.approx_kl;
            stats.grad_norm += report.grad_norm;
            stats.minibatch_steps += 1;
        }
    }
    let n = stats.minibatch_steps.max(1) as f64;
    stats.total_loss = acc.total / n;
    stats.policy_loss = acc.policy / n;
    stats.value_loss = acc.value / n;
    stats.entropy = acc.entropy / n;
    stats.mean_ratio = acc.mean_ratio / n;
    stats.clip_fraction = acc.clip_fraction / n;
    stats.approx_kl = acc.approx_kl / n;
    stats.grad_norm /= n;
    Ok(stats)
}
