use std::path::Path;

use rand::Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::minitower::{Environment, FactoredAction};

pub const STATS_MAGIC: &[u8; 8] = b"PDOBSTAT";
pub const STATS_VERSION: u32 = 1;
pub const MIN_GLOBAL_STD: f64 = 1e-6;
pub const DEFAULT_STATS_STEPS: usize = 10_000;
/// Random steps taken before jumping to a new random seed and floor.
pub const STATS_SEGMENT_LEN: usize = 50;

/// Per-pixel mean and one pooled standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct ObsStats {
    pub shape: (usize, usize, usize),
    pub pixel_mean: Vec<f64>,
    pub global_std: f64,
    pub sample_count: u64,
}

impl ObsStats {
    pub fn new(shape: (usize, usize, usize), pixel_mean: Vec<f64>, global_std: f64, sample_count: u64) -> Result<Self> {
        if pixel_mean.len() != shape.0 * shape.1 * shape.2 {
            return Err(Error::shape(shape.0 * shape.1 * shape.2, pixel_mean.len()));
        }
        if !(global_std > 0.0) || !global_std.is_finite() {
            return Err(Error::Contract(format!("global_std must be positive, got {global_std}")));
        }
        if sample_count == 0 {
            return Err(Error::Contract("sample_count must be at least 1".into()));
        }
        Ok(ObsStats { shape, pixel_mean, global_std, sample_count })
    }

    /// Accumulates statistics from a sequence of equally shaped frames.
    pub fn from_frames<'a>(shape: (usize, usize, usize), frames: impl IntoIterator<Item = &'a [f64]>) -> Result<Self> {
        let mut acc = StatsAccumulator::new(shape);
        for f in frames {
            acc.push(f)?;
        }
        acc.finish()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let (c, h, w) = self.shape;
        let mut out = Vec::with_capacity(36 + 8 * (self.pixel_mean.len() + 1));
        out.extend_from_slice(STATS_MAGIC);
        out.extend_from_slice(&STATS_VERSION.to_le_bytes());
        for d in [c, h, w] {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        out.extend_from_slice(&self.sample_count.to_le_bytes());
        for v in &self.pixel_mean {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.global_std.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |reason: &str| Error::Format { path: path.to_path_buf(), reason: reason.to_string() };
        if bytes.len() < 36 || &bytes[..8] != STATS_MAGIC {
            return Err(bad("missing observation-statistics header"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let version = u32_at(8);
        if version != STATS_VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let shape = (u32_at(12) as usize, u32_at(16) as usize, u32_at(20) as usize);
        let sample_count = u64::from_le_bytes(bytes[24..32].try_into().unwrap());
        let n = shape.0 * shape.1 * shape.2;
        if bytes.len() != 32 + 8 * (n + 1) {
            return Err(bad("truncated or oversized payload"));
        }
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let pixel_mean = (0..n).map(|i| f64_at(32 + 8 * i)).collect();
        let global_std = f64_at(32 + 8 * n);
        ObsStats::new(shape, pixel_mean, global_std, sample_count).map_err(|e| bad(&e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }

    /// SHA-256 of the serialized file contents.
    pub fn hash(&self) -> [u8; 32] {
        Sha256::digest(self.to_bytes()).into()
    }

    pub fn hash_hex(&self) -> String {
        hex::encode(self.hash())
    }
}

/// Streaming per-pixel mean plus pooled variance.
#[derive(Debug, Clone)]
pub struct StatsAccumulator {
    shape: (usize, usize, usize),
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl StatsAccumulator {
    pub fn new(shape: (usize, usize, usize)) -> Self {
        let n = shape.0 * shape.1 * shape.2;
        StatsAccumulator { shape, count: 0, mean: vec![0.0; n], m2: vec![0.0; n] }
    }

    pub fn push(&mut self, frame: &[f64]) -> Result<()> {
        if frame.len() != self.mean.len() {
            return Err(Error::shape(self.mean.len(), frame.len()));
        }
        self.count += 1;
        let k = self.count as f64;
        for ((m, s), &x) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(frame) {
            let d = x - *m;
            *m += d / k;
            *s += d * (x - *m);
        }
        Ok(())
    }

    pub fn finish(self) -> Result<ObsStats> {
        if self.count == 0 {
            return Err(Error::Contract("no frames accumulated".into()));
        }
        let n = self.mean.len() as f64;
        let k = self.count as f64;
        let grand = self.mean.iter().sum::<f64>() / n;
        let within: f64 = self.m2.iter().sum();
        let between: f64 = self.mean.iter().map(|m| (m - grand) * (m - grand)).sum::<f64>() * k;
        let var = (within + between) / (n * k);
        let std = var.max(0.0).sqrt().max(MIN_GLOBAL_STD);
        ObsStats::new(self.shape, self.mean, std, self.count)
    }
}

/// Runs `n_steps` uniformly random actions from the full factored space,
/// jumping to a uniformly drawn (seed, floor) from `seed_pool` at the start,
/// after every episode end and every [`STATS_SEGMENT_LEN`] steps. Every
/// post-step frame is accumulated.
pub fn build_obs_stats<E, F, R>(mut env_factory: F, n_steps: usize, seed_pool: &[u64], rng: &mut R) -> Result<ObsStats>
where
    E: Environment,
    F: FnMut() -> E,
    R: Rng + ?Sized,
{
    if seed_pool.is_empty() {
        return Err(Error::Config("observation statistics need a non-empty seed pool".into()));
    }
    if n_steps == 0 {
        return Err(Error::Config("observation statistics need at least one step".into()));
    }
    let mut env = env_factory();
    let actions = FactoredAction::all();
    let mut acc = StatsAccumulator::new(env.observation_shape());
    let mut left = 0;
    for _ in 0..n_steps {
        if left == 0 {
            let seed = seed_pool[rng.gen_range(0..seed_pool.len())];
            let floor = rng.gen_range(0..env.num_floors());
            env.reset(seed, floor)?;
            left = STATS_SEGMENT_LEN;
        }
        let action = actions[rng.gen_range(0..actions.len())];
        let out = env.step(action)?;
        acc.push(&out.observation.pixels)?;
        left = if out.done { 0 } else { left - 1 };
    }
    acc.finish()
}

/// `(pixels - pixel_mean) / global_std`, elementwise.
pub fn normalize(pixels: &[f64], stats: &ObsStats) -> Result<Vec<f64>> {
    if pixels.len() != stats.pixel_mean.len() {
        return Err(Error::shape(stats.pixel_mean.len(), pixels.len()));
    }
    let inv = 1.0 / stats.global_std;
    Ok(pixels.iter().zip(&stats.pixel_mean).map(|(p, m)| (p - m) * inv).collect())
}

pub fn denormalize(values: &[f64], stats: &ObsStats) -> Result<Vec<f64>> {
    if values.len() != stats.pixel_mean.len() {
        return Err(Error::shape(stats.pixel_mean.len(), values.len()));
    }
    Ok(values.iter().zip(&stats.pixel_mean).map(|(v, m)| v * stats.global_std + m).collect())
}
