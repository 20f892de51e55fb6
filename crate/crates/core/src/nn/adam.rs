use serde::{Deserialize, Serialize};

use super::params::{Gradients, PolicyParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Global gradient-norm clip threshold.
    pub clip_norm: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { beta1: 0.9, beta2: 0.999, eps: 1e-5, clip_norm: 0.5 }
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl OptimizerState {
    pub fn new(n_params: usize) -> Self {
        OptimizerState { m: vec![0.0; n_params], v: vec![0.0; n_params], step: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamReport {
    pub grad_norm: f64,
    /// Factor the gradients were multiplied by before the update.
    pub clip_scale: f64,
}

/// Scales `grads` in place so that their global norm is at most `max_norm`.
pub fn clip_grad_norm(grads: &mut Gradients, max_norm: f64) -> AdamReport {
    let norm = grads.global_norm();
    let scale = if norm > max_norm && norm > 0.0 { max_norm / norm } else { 1.0 };
    if scale != 1.0 {
        grads.scale(scale);
    }
    AdamReport { grad_norm: norm, clip_scale: scale }
}

/// Global-norm clipping followed by one bias-corrected Adam update. Non-finite
/// gradients are refused before anything is modified.
pub fn adam_step(
    params: &mut PolicyParams,
    mut grads: Gradients,
    state: &mut OptimizerState,
    lr: f64,
    cfg: &AdamConfig,
) -> Result<AdamReport> {
    if grads.data.len() != params.len() || state.m.len() != params.len() {
        return Err(Error::shape(params.len(), grads.data.len()));
    }
    if !grads.is_finite() {
        return Err(Error::NonFinite("gradient; update refused".into()));
    }
    let report = clip_grad_norm(&mut grads, cfg.clip_norm);
    state.step += 1;
    let t = state.step as f64;
    let bc1 = 1.0 - cfg.beta1.powf(t);
    let bc2 = 1.0 - cfg.beta2.powf(t);
    for (((p, g), m), v) in params.data.iter_mut().zip(&grads.data).zip(state.m.iter_mut()).zip(state.v.iter_mut()) {
        *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
        *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
    if !params.is_finite() {
        return Err(Error::NonFinite("parameters after Adam update".into()));
    }
    Ok(report)
}
