use super::config::PpoConfig;
use super::minibatch::MinibatchData;
use crate::error::{Error, Result};
use crate::nn::{backward, forward_sequence, log_softmax, Gradients, PolicyParams};

/// Loss terms and diagnostics for one minibatch.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossStats {
    pub total: f64,
    pub policy: f64,
    /// Already multiplied by the value coefficient.
    pub value: f64,
    /// Mean categorical entropy.
    pub entropy: f64,
    pub mean_ratio: f64,
    pub max_ratio_deviation: f64,
    pub clip_fraction: f64,
    /// Mean of `old_log_prob - new_log_prob`.
    pub approx_kl: f64,
}

/// Log probabilities of `actions`, values and entropies after replaying the
/// minibatch sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionEvaluation {
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
    pub entropies: Vec<f64>,
    /// Per-row log-softmax, `rows x n_actions`.
    pub log_policy: Vec<f64>,
}

impl ActionEvaluation {
    pub fn mean_entropy(&self) -> f64 {
        self.entropies.iter().sum::<f64>() / self.entropies.len().max(1) as f64
    }
}

/// Replays the recurrent forward pass over a stored sequence.
pub fn evaluate_actions(params: &PolicyParams, mb: &MinibatchData) -> Result<(ActionEvaluation, crate::nn::Tape)> {
    let rows = mb.rows();
    if mb.actions.len() != rows {
        return Err(Error::shape(format!("{rows} actions"), mb.actions.len()));
    }
    let (out, tape) = forward_sequence(params, &mb.obs, &mb.hidden0, &mb.masks, mb.steps, mb.batch)?;
    let na = params.arch.n_actions;
    let mut log_probs = Vec::with_capacity(rows);
    let mut entropies = Vec::with_capacity(rows);
    let mut log_policy = Vec::with_capacity(rows * na);
    for (row, &a) in out.logits.chunks_exact(na).zip(&mb.actions) {
        if a >= na {
            return Err(Error::Contract(format!("stored action {a} outside a table of {na}")));
        }
        let lp = log_softmax(row);
        log_probs.push(lp[a]);
        entropies.push(lp.iter().map(|l| -l.exp() * l).sum());
        log_policy.extend(lp);
    }
    Ok((ActionEvaluation { log_probs, values: out.values, entropies, log_policy }, tape))
}

fn loss_terms(ev: &ActionEvaluation, mb: &MinibatchData, cfg: &PpoConfig) -> (LossStats, Vec<f64>) {
    let m = mb.rows() as f64;
    let eps = cfg.clip_epsilon;
    let mut s = LossStats::default();
    // d(total)/d(new log prob) per row.
    let mut dlogp = vec![0.0; mb.rows()];
    let mut clipped = 0usize;
    for i in 0..mb.rows() {
        let ratio = (ev.log_probs[i] - mb.old_log_probs[i]).exp();
        let a = mb.advantages[i];
        let clamped = ratio.clamp(1.0 - eps, 1.0 + eps);
        s.policy -= (ratio * a).min(clamped * a) / m;
        let flows = if a >= 0.0 { ratio <= 1.0 + eps } else { ratio >= 1.0 - eps };
        if flows {
            dlogp[i] = -a * ratio / m;
        }
        if (ratio - 1.0).abs() > eps {
            clipped += 1;
        }
        s.mean_ratio += ratio / m;
        s.max_ratio_deviation = s.max_ratio_deviation.max((ratio - 1.0).abs());
        s.approx_kl += (mb.old_log_probs[i] - ev.log_probs[i]) / m;
        s.value += cfg.value_coef * (ev.values[i] - mb.returns[i]).powi(2) / m;
    }
    s.entropy = ev.mean_entropy();
    s.clip_fraction = clipped as f64 / m;
    s.total = s.policy + s.value - cfg.entropy_coef * s.entropy;
    (s, dlogp)
}

/// Clipped-surrogate PPO loss without gradients.
pub fn ppo_loss(params: &PolicyParams, mb: &MinibatchData, cfg: &PpoConfig) -> Result<LossStats> {
    let (ev, _) = evaluate_actions(params, mb)?;
    Ok(loss_terms(&ev, mb, cfg).0)
}

/// Loss plus its exact gradient:
/// `policy + value_coef * mean((V - R)^2) - entropy_coef * mean(H)`.
pub fn ppo_loss_and_grad(params: &PolicyParams, mb: &MinibatchData, cfg: &PpoConfig) -> Result<(LossStats, Gradients)> {
    let (ev, tape) = evaluate_actions(params, mb)?;
    let (stats, dlogp) = loss_terms(&ev, mb, cfg);
    if !stats.total.is_finite() {
        return Err(Error::NonFinite(format!("PPO loss {stats:?}")));
    }
    let na = params.arch.n_actions;
    let m = mb.rows() as f64;
    let mut dlogits = vec![0.0; mb.rows() * na];
    for i in 0..mb.rows() {
        let lp = &ev.log_policy[i * na..(i + 1) * na];
        let h = ev.entropies[i];
        let row = &mut dlogits[i * na..(i + 1) * na];
        for k in 0..na {
            let p = lp[k].exp();
            // d log p_a / d z_k = [k = a] - p_k ; d H / d z_k = -p_k (log p_k + H).
            let onehot = if k == mb.actions[i] { 1.0 } else { 0.0 };
            row[k] = dlogp[i] * (onehot - p) + cfg.entropy_coef / m * p * (lp[k] + h);
        }
    }
    let dvalues: Vec<f64> =
        ev.values.iter().zip(&mb.returns).map(|(v, r)| 2.0 * cfg.value_coef * (v - r) / m).collect();
    let grads = backward(params, &tape, &dlogits, &dvalues)?;
    Ok((stats, grads))
}
