//! Forward and backward passes for
//! `input -> FC(tanh) -> FC(tanh) -> [GRU] -> {policy logits, value}`.
//!
//! Sequences are stored time-major: row `t * batch + b` is step `t` of
//! sequence `b`. The GRU follows the usual gate layout `[reset | update | new]`
//! with `n = tanh(W_in x + b_in + r * (W_hn h + b_hn))` and
//! `h' = (1 - z) * n + z * h`, where `h` is the previous state multiplied by
//! the episode mask.

use super::linalg::{add_bias, add_col_sums, matmul_nn, matmul_nn_rows_acc, matmul_nt, matmul_tn, sigmoid, transpose};

const SMALL_BATCH: usize = 8;
use super::params::{Gradients, PolicyParams, Tensor};
use crate::error::{Error, Result};

/// Cached activations of one forward pass, needed by [`backward`].
#[derive(Debug, Clone)]
pub struct Tape {
    steps: usize,
    batch: usize,
    input: Vec<f64>,
    h1: Vec<f64>,
    h2: Vec<f64>,
    masks: Vec<f64>,
    // Recurrent caches, `steps * batch` rows each.
    prev: Vec<f64>,
    reset: Vec<f64>,
    update: Vec<f64>,
    cand: Vec<f64>,
    gh_n: Vec<f64>,
    features: Vec<f64>,
}

/// Network outputs for every row of a sequence batch.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    /// `rows x n_actions`.
    pub logits: Vec<f64>,
    pub values: Vec<f64>,
    /// Hidden state after the last step, `batch x state_width`.
    pub hidden: Vec<f64>,
}

fn check_finite(name: &str, xs: &[f64]) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("{name} contains NaN or infinity")))
    }
}

/// Runs `steps` time steps for `batch` sequences.
///
/// `obs` is `steps * batch * input_dim`, `hidden0` is `batch * state_width`
/// and `masks` is `steps * batch` with values in {0, 1}; the hidden state
/// entering step `t` is multiplied by `masks[t]`.
pub fn forward_sequence(
    params: &PolicyParams,
    obs: &[f64],
    hidden0: &[f64],
    masks: &[f64],
    steps: usize,
    batch: usize,
) -> Result<(ForwardOutput, Tape)> {
    let a = params.arch;
    let rows = steps * batch;
    let (h, r, f, na) = (a.hidden, a.recurrent_width, a.feature_width(), a.n_actions);
    if obs.len() != rows * a.input_dim {
        return Err(Error::shape(format!("{rows} x {} observations", a.input_dim), obs.len()));
    }
    if masks.len() != rows {
        return Err(Error::shape(format!("{rows} masks"), masks.len()));
    }
    if hidden0.len() != batch * a.state_width() {
        return Err(Error::shape(format!("{batch} x {} hidden", a.state_width()), hidden0.len()));
    }
    check_finite("observation batch", obs)?;
    check_finite("hidden batch", hidden0)?;
    if masks.iter().any(|&m| m != 0.0 && m != 1.0) {
        return Err(Error::Contract("masks must be 0 or 1".into()));
    }

    let mut h1 = vec![0.0; rows * h];
    matmul_nt(obs, params.get(Tensor::Enc1W), &mut h1, rows, a.input_dim, h, 0.0);
    add_bias(&mut h1, params.get(Tensor::Enc1B));
    h1.iter_mut().for_each(|x| *x = x.tanh());

    let mut h2 = vec![0.0; rows * h];
    matmul_nt(&h1, params.get(Tensor::Enc2W), &mut h2, rows, h, h, 0.0);
    add_bias(&mut h2, params.get(Tensor::Enc2B));
    h2.iter_mut().for_each(|x| *x = x.tanh());

    let mut tape = Tape {
        steps,
        batch,
        input: obs.to_vec(),
        h1,
        h2,
        masks: masks.to_vec(),
        prev: Vec::new(),
        reset: Vec::new(),
        update: Vec::new(),
        cand: Vec::new(),
        gh_n: Vec::new(),
        features: Vec::new(),
    };

    let hidden_out = if a.recurrent {
        let mut gi = vec![0.0; rows * 3 * r];
        matmul_nt(&tape.h2, params.get(Tensor::GruWih), &mut gi, rows, h, 3 * r, 0.0);
        add_bias(&mut gi, params.get(Tensor::GruBih));

        tape.prev = vec![0.0; rows * r];
        tape.reset = vec![0.0; rows * r];
        tape.update = vec![0.0; rows * r];
        tape.cand = vec![0.0; rows * r];
        tape.gh_n = vec![0.0; rows * r];
        tape.features = vec![0.0; rows * r];

        let whh = params.get(Tensor::GruWhh);
        let bhh = params.get(Tensor::GruBhh);
        let mut state = hidden0.to_vec();
        let mut gh = vec![0.0; batch * 3 * r];
        // Few rows per step: row-wise axpy over a transposed copy of Whh.
        let small = batch <= SMALL_BATCH && steps > 1;
        let whh_t = if small { transpose(whh, 3 * r, r) } else { Vec::new() };
        for t in 0..steps {
            let base = t * batch;
            let prev = &mut tape.prev[base * r..(base + batch) * r];
            for b in 0..batch {
                let m = masks[base + b];
                for j in 0..r {
                    prev[b * r + j] = state[b * r + j] * m;
                }
            }
            if small {
                gh.fill(0.0);
                matmul_nn_rows_acc(prev, &whh_t, &mut gh, batch, r, 3 * r);
            } else {
                matmul_nt(prev, whh, &mut gh, batch, r, 3 * r, 0.0);
            }
            add_bias(&mut gh, bhh);
            for b in 0..batch {
                let row = base + b;
                let gi_row = &gi[row * 3 * r..(row + 1) * 3 * r];
                let gh_row = &gh[b * 3 * r..(b + 1) * 3 * r];
                for j in 0..r {
                    let rg = sigmoid(gi_row[j] + gh_row[j]);
                    let zg = sigmoid(gi_row[r + j] + gh_row[r + j]);
                    let ghn = gh_row[2 * r + j];
                    let ng = (gi_row[2 * r + j] + rg * ghn).tanh();
                    let hp = tape.prev[row * r + j];
                    let hn = (1.0 - zg) * ng + zg * hp;
                    let k = row * r + j;
                    tape.reset[k] = rg;
                    tape.update[k] = zg;
                    tape.cand[k] = ng;
                    tape.gh_n[k] = ghn;
                    tape.features[k] = hn;
                    state[b * r + j] = hn;
                }
            }
        }
        state
    } else {
        tape.features = tape.h2.clone();
        Vec::new()
    };

    let mut logits = vec![0.0; rows * na];
    matmul_nt(&tape.features, params.get(Tensor::PiW), &mut logits, rows, f, na, 0.0);
    add_bias(&mut logits, params.get(Tensor::PiB));
    let mut values = vec![0.0; rows];
    matmul_nt(&tape.features, params.get(Tensor::VW), &mut values, rows, f, 1, 0.0);
    let vb = params.get(Tensor::VB)[0];
    values.iter_mut().for_each(|v| *v += vb);

    Ok((ForwardOutput { logits, values, hidden: hidden_out }, tape))
}

/// One step for a batch of environments.
pub fn forward(params: &PolicyParams, obs: &[f64], hidden: &[f64], masks: &[f64]) -> Result<ForwardOutput> {
    let batch = masks.len();
    forward_sequence(params, obs, hidden, masks, 1, batch).map(|(out, _)| out)
}

/// Backpropagates `d loss / d logits` and `d loss / d values` through the
/// recorded pass.
pub fn backward(params: &PolicyParams, tape: &Tape, dlogits: &[f64], dvalues: &[f64]) -> Result<Gradients> {
    let a = params.arch;
    let (steps, batch) = (tape.steps, tape.batch);
    let rows = steps * batch;
    let (h, r, f, na) = (a.hidden, a.recurrent_width, a.feature_width(), a.n_actions);
    if dlogits.len() != rows * na || dvalues.len() != rows {
        return Err(Error::shape(format!("{rows} x {na} logit grads and {rows} value grads"), dlogits.len()));
    }
    check_finite("logit gradient", dlogits)?;
    check_finite("value gradient", dvalues)?;

    let layout = &params.layout;
    let mut g = Gradients::zeros(params.len());
    macro_rules! grad {
        ($t:expr) => {
            &mut g.data[layout.range($t)]
        };
    }

    // Heads.
    matmul_tn(dlogits, &tape.features, grad!(Tensor::PiW), na, rows, f, 0.0);
    add_col_sums(dlogits, grad!(Tensor::PiB));
    matmul_tn(dvalues, &tape.features, grad!(Tensor::VW), 1, rows, f, 0.0);
    grad!(Tensor::VB)[0] = dvalues.iter().sum();

    let mut dfeat = vec![0.0; rows * f];
    matmul_nn(dlogits, params.get(Tensor::PiW), &mut dfeat, rows, na, f, 0.0);
    let vw = params.get(Tensor::VW);
    for (row, &dv) in dfeat.chunks_exact_mut(f).zip(dvalues) {
        for (d, w) in row.iter_mut().zip(vw) {
            *d += dv * w;
        }
    }

    let dh2 = if a.recurrent {
        let whh = params.get(Tensor::GruWhh);
        // Pre-activation gradients; the input and hidden paths share the reset
        // and update parts, the candidate part differs by the reset gate.
        let mut dgi = vec![0.0; rows * 3 * r];
        let mut dgh = vec![0.0; rows * 3 * r];
        let mut dprev = vec![0.0; batch * r];
        let mut carry = vec![0.0; batch * r];
        for t in (0..steps).rev() {
            let base = t * batch;
            for b in 0..batch {
                let row = base + b;
                for j in 0..r {
                    let k = row * r + j;
                    let dh = dfeat[k] + carry[b * r + j];
                    let (rg, zg, ng, hp, ghn) =
                        (tape.reset[k], tape.update[k], tape.cand[k], tape.prev[k], tape.gh_n[k]);
                    let dn = dh * (1.0 - zg);
                    let dz = dh * (hp - ng);
                    dprev[b * r + j] = dh * zg;
                    let dan = dn * (1.0 - ng * ng);
                    let daz = dz * zg * (1.0 - zg);
                    let dar = dan * ghn * rg * (1.0 - rg);
                    let gi_row = &mut dgi[row * 3 * r..(row + 1) * 3 * r];
                    gi_row[j] = dar;
                    gi_row[r + j] = daz;
                    gi_row[2 * r + j] = dan;
                    let gh_row = &mut dgh[row * 3 * r..(row + 1) * 3 * r];
                    gh_row[j] = dar;
                    gh_row[r + j] = daz;
                    gh_row[2 * r + j] = dan * rg;
                }
            }
            let dgh_t = &dgh[base * 3 * r..(base + batch) * 3 * r];
            matmul_nn_rows_acc(dgh_t, whh, &mut dprev, batch, 3 * r, r);
            for b in 0..batch {
                let m = tape.masks[base + b];
                for j in 0..r {
                    carry[b * r + j] = dprev[b * r + j] * m;
                }
            }
        }
        matmul_tn(&dgh, &tape.prev, grad!(Tensor::GruWhh), 3 * r, rows, r, 0.0);
        add_col_sums(&dgh, grad!(Tensor::GruBhh));
        matmul_tn(&dgi, &tape.h2, grad!(Tensor::GruWih), 3 * r, rows, h, 0.0);
        add_col_sums(&dgi, grad!(Tensor::GruBih));
        let mut dh2 = vec![0.0; rows * h];
        matmul_nn(&dgi, params.get(Tensor::GruWih), &mut dh2, rows, 3 * r, h, 0.0);
        dh2
    } else {
        dfeat
    };

    let mut da2 = dh2;
    for (d, y) in da2.iter_mut().zip(&tape.h2) {
        *d *= 1.0 - y * y;
    }
    matmul_tn(&da2, &tape.h1, grad!(Tensor::Enc2W), h, rows, h, 0.0);
    add_col_sums(&da2, grad!(Tensor::Enc2B));
    let mut da1 = vec![0.0; rows * h];
    matmul_nn(&da2, params.get(Tensor::Enc2W), &mut da1, rows, h, h, 0.0);
    for (d, y) in da1.iter_mut().zip(&tape.h1) {
        *d *= 1.0 - y * y;
    }
    matmul_tn(&da1, &tape.input, grad!(Tensor::Enc1W), h, rows, a.input_dim, 0.0);
    add_col_sums(&da1, grad!(Tensor::Enc1B));

    Ok(g)
}
