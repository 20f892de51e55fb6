use std::ops::Range;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Network shape. With `recurrent = false` the heads read the encoder
/// output directly and `recurrent_width` is unused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub input_dim: usize,
    pub hidden: usize,
    pub recurrent_width: usize,
    pub recurrent: bool,
    pub n_actions: usize,
}

impl ArchConfig {
    /// Width of the features feeding the heads.
    pub fn feature_width(&self) -> usize {
        if self.recurrent {
            self.recurrent_width
        } else {
            self.hidden
        }
    }

    /// Width of the per-environment hidden state (0 when not recurrent).
    pub fn state_width(&self) -> usize {
        if self.recurrent {
            self.recurrent_width
        } else {
            0
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0
            || self.hidden == 0
            || self.n_actions == 0
            || (self.recurrent && self.recurrent_width == 0)
        {
            return Err(Error::Config(format!("degenerate architecture {self:?}")));
        }
        Ok(())
    }
}

/// Named parameter tensors, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tensor {
    Enc1W,
    Enc1B,
    Enc2W,
    Enc2B,
    GruWih,
    GruBih,
    GruWhh,
    GruBhh,
    PiW,
    PiB,
    VW,
    VB,
}

impl Tensor {
    pub const ALL: [Tensor; 12] = [
        Tensor::Enc1W,
        Tensor::Enc1B,
        Tensor::Enc2W,
        Tensor::Enc2B,
        Tensor::GruWih,
        Tensor::GruBih,
        Tensor::GruWhh,
        Tensor::GruBhh,
        Tensor::PiW,
        Tensor::PiB,
        Tensor::VW,
        Tensor::VB,
    ];

    fn is_recurrent(self) -> bool {
        matches!(self, Tensor::GruWih | Tensor::GruBih | Tensor::GruWhh | Tensor::GruBhh)
    }

    /// `(rows, cols)`; biases are `(n, 1)`.
    pub fn shape(self, a: &ArchConfig) -> (usize, usize) {
        let (h, r, f) = (a.hidden, a.recurrent_width, a.feature_width());
        match self {
            Tensor::Enc1W => (h, a.input_dim),
            Tensor::Enc1B | Tensor::Enc2B => (h, 1),
            Tensor::Enc2W => (h, h),
            Tensor::GruWih => (3 * r, h),
            Tensor::GruWhh => (3 * r, r),
            Tensor::GruBih | Tensor::GruBhh => (3 * r, 1),
            Tensor::PiW => (a.n_actions, f),
            Tensor::PiB => (a.n_actions, 1),
            Tensor::VW => (1, f),
            Tensor::VB => (1, 1),
        }
    }
}

/// Offsets of each tensor inside the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    ranges: Vec<(Tensor, Range<usize>)>,
    len: usize,
}

impl ParamLayout {
    pub fn new(arch: &ArchConfig) -> Self {
        let mut ranges = Vec::new();
        let mut off = 0;
        for t in Tensor::ALL {
            if t.is_recurrent() && !arch.recurrent {
                continue;
            }
            let (r, c) = t.shape(arch);
            ranges.push((t, off..off + r * c));
            off += r * c;
        }
        ParamLayout { ranges, len: off }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn range(&self, t: Tensor) -> Range<usize> {
        self.ranges
            .iter()
            .find(|(n, _)| *n == t)
            .map(|(_, r)| r.clone())
            .unwrap_or_else(|| panic!("tensor {t:?} not present in this architecture"))
    }

    pub fn tensors(&self) -> impl Iterator<Item = (Tensor, Range<usize>)> + '_ {
        self.ranges.iter().cloned()
    }
}

/// All learnable weights in one flat vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub arch: ArchConfig,
    pub layout: ParamLayout,
    pub data: Vec<f64>,
}

/// Gradient of a scalar loss, laid out like [`PolicyParams::data`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub data: Vec<f64>,
}

impl Gradients {
    pub fn zeros(len: usize) -> Self {
        Gradients { data: vec![0.0; len] }
    }

    pub fn global_norm(&self) -> f64 {
        self.data.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, c: f64) {
        self.data.iter_mut().for_each(|g| *g *= c);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|g| g.is_finite())
    }
}

impl PolicyParams {
    pub fn zeros(arch: ArchConfig) -> Self {
        let layout = ParamLayout::new(&arch);
        let data = vec![0.0; layout.len()];
        PolicyParams { arch, layout, data }
    }

    pub fn from_data(arch: ArchConfig, data: Vec<f64>) -> Result<Self> {
        let layout = ParamLayout::new(&arch);
        if data.len() != layout.len() {
            return Err(Error::shape(layout.len(), data.len()));
        }
        Ok(PolicyParams { arch, layout, data })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, t: Tensor) -> &[f64] {
        &self.data[self.layout.range(t)]
    }

    pub fn get_mut(&mut self, t: Tensor) -> &mut [f64] {
        let r = self.layout.range(t);
        &mut self.data[r]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|p| p.is_finite())
    }
}

/// Orthogonal initialization for weight matrices (policy head gain 0.01,
/// value head gain 1, all others sqrt(2)) and zero biases.
pub fn init_params<R: Rng + ?Sized>(rng: &mut R, arch: &ArchConfig) -> Result<PolicyParams> {
    arch.validate()?;
    let mut params = PolicyParams::zeros(*arch);
    for (t, range) in params.layout.clone().tensors() {
        let gain = match t {
            Tensor::PiW => 0.01,
            Tensor::VW => 1.0,
            Tensor::Enc1W | Tensor::Enc2W | Tensor::GruWih | Tensor::GruWhh => std::f64::consts::SQRT_2,
            _ => continue,
        };
        let (rows, cols) = t.shape(arch);
        params.data[range].copy_from_slice(&orthogonal(rows, cols, gain, rng));
    }
    Ok(params)
}

/// A `rows x cols` matrix with orthonormal rows (if `rows <= cols`) or
/// columns, scaled by `gain`.
pub fn orthogonal<R: Rng + ?Sized>(rows: usize, cols: usize, gain: f64, rng: &mut R) -> Vec<f64> {
    // Orthonormalize the shorter dimension as vectors of the longer one.
    let (n, len) = if rows <= cols { (rows, cols) } else { (cols, rows) };
    let mut vecs: Vec<Vec<f64>> = (0..n).map(|_| (0..len).map(|_| rng.sample(StandardNormal)).collect()).collect();
    for i in 0..n {
        // Two passes of modified Gram-Schmidt.
        for _ in 0..2 {
            for j in 0..i {
                let (done, rest) = vecs.split_at_mut(i);
                let proj: f64 = rest[0].iter().zip(&done[j]).map(|(a, b)| a * b).sum();
                rest[0].iter_mut().zip(&done[j]).for_each(|(a, b)| *a -= proj * b);
            }
        }
        let norm = vecs[i].iter().map(|x| x * x).sum::<f64>().sqrt();
        vecs[i].iter_mut().for_each(|x| *x /= norm);
    }
    let mut out = vec![0.0; rows * cols];
    for (i, v) in vecs.iter().enumerate() {
        for (j, &x) in v.iter().enumerate() {
            let idx = if rows <= cols { i * cols + j } else { j * cols + i };
            out[idx] = gain * x;
        }
    }
    out
}
