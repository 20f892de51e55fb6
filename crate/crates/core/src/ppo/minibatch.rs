use rand::seq::SliceRandom;
use rand::Rng;

use super::buffer::RolloutBuffer;
use crate::error::{Error, Result};

/// Indices selecting part of a rollout buffer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Minibatch {
    /// Whole `T`-step sequences of these environments.
    Sequences(Vec<usize>),
    /// Individual transitions, as flat time-major indices.
    Transitions(Vec<usize>),
}

impl Minibatch {
    /// Flat time-major transition indices covered, given `T` and `N`.
    pub fn transitions(&self, steps: usize, envs: usize) -> Vec<usize> {
        match self {
            Minibatch::Sequences(e) => (0..steps).flat_map(|t| e.iter().map(move |&n| t * envs + n)).collect(),
            Minibatch::Transitions(ix) => ix.clone(),
        }
    }
}

/// Splits the buffer into `n` minibatches by a random permutation. Recurrent
/// mode keeps whole environment sequences together and requires `n` to
/// divide `N`; otherwise transitions are shuffled individually.
pub fn recurrent_minibatches<R: Rng + ?Sized>(
    steps: usize,
    envs: usize,
    n: usize,
    recurrent: bool,
    rng: &mut R,
) -> Result<Vec<Minibatch>> {
    if n == 0 {
        return Err(Error::Config("need at least one minibatch".into()));
    }
    if recurrent {
        if !envs.is_multiple_of(n) {
            return Err(Error::Config(format!("{n} minibatches do not divide {envs} environments")));
        }
        let mut order: Vec<usize> = (0..envs).collect();
        order.shuffle(rng);
        Ok(order.chunks(envs / n).map(|c| Minibatch::Sequences(c.to_vec())).collect())
    } else {
        let total = steps * envs;
        if n > total {
            return Err(Error::Config(format!("{n} minibatches exceed {total} transitions")));
        }
        let mut order: Vec<usize> = (0..total).collect();
        order.shuffle(rng);
        // Sizes differ by at most one.
        let (base, extra) = (total / n, total % n);
        let mut out = Vec::with_capacity(n);
        let mut start = 0;
        for i in 0..n {
            let len = base + usize::from(i < extra);
            out.push(Minibatch::Transitions(order[start..start + len].to_vec()));
            start += len;
        }
        Ok(out)
    }
}

/// Contiguous training data for one minibatch, laid out for
/// [`crate::nn::forward_sequence`].
#[derive(Debug, Clone, PartialEq)]
pub struct MinibatchData {
    pub steps: usize,
    pub batch: usize,
    pub obs: Vec<f64>,
    pub hidden0: Vec<f64>,
    pub masks: Vec<f64>,
    pub actions: Vec<usize>,
    pub old_log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl MinibatchData {
    pub fn gather(buf: &RolloutBuffer, mb: &Minibatch, advantages: &[f64], returns: &[f64]) -> Self {
        let d = buf.obs_dim;
        let idx = mb.transitions(buf.steps, buf.envs);
        let (steps, batch, hidden0, masks) = match mb {
            Minibatch::Sequences(envs) => {
                let sw = buf.state_width;
                let hidden0 = envs.iter().flat_map(|&n| buf.hidden0[n * sw..(n + 1) * sw].iter().copied()).collect();
                let masks = idx.iter().map(|&i| buf.masks[i]).collect();
                (buf.steps, envs.len(), hidden0, masks)
            }
            // Feed-forward rows: no recurrent state is read.
            Minibatch::Transitions(ix) => (1, ix.len(), Vec::new(), vec![1.0; ix.len()]),
        };
        MinibatchData {
            steps,
            batch,
            obs: idx.iter().flat_map(|&i| buf.obs[i * d..(i + 1) * d].iter().copied()).collect(),
            hidden0,
            masks,
            actions: idx.iter().map(|&i| buf.actions[i]).collect(),
            old_log_probs: idx.iter().map(|&i| buf.log_probs[i]).collect(),
            advantages: idx.iter().map(|&i| advantages[i]).collect(),
            returns: idx.iter().map(|&i| returns[i]).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.steps * self.batch
    }
}
