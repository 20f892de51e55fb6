//! Categorical distribution helpers over logit rows.

use rand::Rng;

/// Numerically stable `log softmax`.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    logits.iter().map(|l| l - lse).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    log_softmax(logits).into_iter().map(f64::exp).collect()
}

/// `-sum p log p`.
pub fn entropy(logits: &[f64]) -> f64 {
    log_softmax(logits).iter().map(|lp| -lp.exp() * lp).sum()
}

/// Draws an index from `softmax(logits)` by inverting the cumulative
/// distribution with one uniform draw. Returns the index and its log
/// probability.
pub fn sample_action<R: Rng + ?Sized>(logits: &[f64], rng: &mut R) -> (usize, f64) {
    let logp = log_softmax(logits);
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut choice = logp.len() - 1;
    for (i, lp) in logp.iter().enumerate() {
        acc += lp.exp();
        if u < acc {
            choice = i;
            break;
        }
    }
    (choice, logp[choice])
}
