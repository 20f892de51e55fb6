use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minitower::Observation;

/// How many previous frames accompany the current one, and whether they are
/// reduced to a single brightness channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StackConfig {
    pub history_frames: usize,
    pub brightness_only_history: bool,
}

impl StackConfig {
    /// Current frame plus the brightness of the previous one.
    pub const DASH: StackConfig = StackConfig { history_frames: 1, brightness_only_history: true };
    /// Four full frames.
    pub const FULL_FOUR: StackConfig = StackConfig { history_frames: 3, brightness_only_history: false };
    pub const NONE: StackConfig = StackConfig { history_frames: 0, brightness_only_history: false };

    pub fn validate(&self) -> Result<()> {
        if self.brightness_only_history && self.history_frames != 1 {
            return Err(Error::Config("brightness-only history requires exactly one history frame".into()));
        }
        Ok(())
    }

    pub fn output_channels(&self, channels: usize) -> usize {
        let per_history = if self.brightness_only_history { 1 } else { channels };
        channels + self.history_frames * per_history
    }
}

impl Default for StackConfig {
    fn default() -> Self {
        StackConfig::DASH
    }
}

/// Unweighted mean over channels at every pixel.
pub fn brightness(pixels: &[f64], channels: usize, plane: usize) -> Vec<f64> {
    let mut out = vec![0.0; plane];
    for c in 0..channels {
        for (o, &p) in out.iter_mut().zip(&pixels[c * plane..(c + 1) * plane]) {
            *o += p;
        }
    }
    let inv = 1.0 / channels as f64;
    out.iter_mut().for_each(|o| *o *= inv);
    out
}

/// Concatenates `current` with `history` (most recent first) along the
/// channel axis. Missing history frames (episode start) are zeros.
pub fn stack_pixels(
    current: &[f64],
    history: &[Option<&[f64]>],
    shape: (usize, usize, usize),
    cfg: &StackConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let (c, h, w) = shape;
    let plane = h * w;
    if current.len() != c * plane {
        return Err(Error::shape(c * plane, current.len()));
    }
    let mut out = Vec::with_capacity(cfg.output_channels(c) * plane);
    out.extend_from_slice(current);
    for k in 0..cfg.history_frames {
        let frame = history.get(k).copied().flatten();
        if let Some(f) = frame {
            if f.len() != current.len() {
                return Err(Error::shape(current.len(), f.len()));
            }
        }
        match (frame, cfg.brightness_only_history) {
            (Some(f), true) => out.extend(brightness(f, c, plane)),
            (Some(f), false) => out.extend_from_slice(f),
            (None, true) => out.extend(std::iter::repeat_n(0.0, plane)),
            (None, false) => out.extend(std::iter::repeat_n(0.0, c * plane)),
        }
    }
    Ok(out)
}

/// Stacks the current observation with at most one previous observation.
pub fn stack_frames(current: &Observation, previous: Option<&Observation>, cfg: &StackConfig) -> Result<Vec<f64>> {
    if let Some(p) = previous {
        if p.shape() != current.shape() {
            return Err(Error::shape(format!("{:?}", current.shape()), format!("{:?}", p.shape())));
        }
    }
    if cfg.history_frames > 1 {
        return Err(Error::Config("stack_frames takes one previous frame; use FrameStacker for more".into()));
    }
    stack_pixels(&current.pixels, &[previous.map(|p| p.pixels.as_slice())], current.shape(), cfg)
}

/// Rolling frame history for one environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameStacker {
    cfg: StackConfig,
    shape: (usize, usize, usize),
    history: VecDeque<Vec<f64>>,
}

impl FrameStacker {
    pub fn new(cfg: StackConfig, shape: (usize, usize, usize)) -> Result<Self> {
        cfg.validate()?;
        Ok(FrameStacker { cfg, shape, history: VecDeque::new() })
    }

    pub fn reset(&mut self) {
        self.history.clear();
    }

    /// Stacks `frame` with the stored history, then pushes it into history.
    pub fn push(&mut self, frame: Vec<f64>) -> Result<Vec<f64>> {
        let refs: Vec<Option<&[f64]>> = self.history.iter().map(|f| Some(f.as_slice())).collect();
        let out = stack_pixels(&frame, &refs, self.shape, &self.cfg)?;
        if self.cfg.history_frames > 0 {
            self.history.push_front(frame);
            self.history.truncate(self.cfg.history_frames);
        }
        Ok(out)
    }

    pub fn output_len(&self) -> usize {
        self.cfg.output_channels(self.shape.0) * self.shape.1 * self.shape.2
    }
}
