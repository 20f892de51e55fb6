//! Binary checkpoint files.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic "PDASHCKP" | u32 version
//! u64 input_dim | u64 hidden | u64 recurrent_width | u64 recurrent | u64 n_actions
//! u64 env_steps | u64 cycles | u64 adam_step
//! u8 has_stats | [u8; 32] obs-stats sha256 (zeros when absent)
//! u64 n | n x f64 params | n x f64 adam m | n x f64 adam v
//! u64 len | len bytes of JSON trainer state (empty when absent)
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::{ArchConfig, OptimizerState, PolicyParams};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"PDASHCKP";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: PolicyParams,
    pub opt: OptimizerState,
    pub env_steps: u64,
    pub cycles: u64,
    pub stats_hash: Option<[u8; 32]>,
    /// Opaque JSON needed to resume training.
    pub trainer_state: Vec<u8>,
}

impl Checkpoint {
    pub fn arch(&self) -> ArchConfig {
        self.params.arch
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let a = self.params.arch;
        let n = self.params.len();
        let mut out = Vec::with_capacity(128 + 24 * n + self.trainer_state.len());
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        for x in [a.input_dim, a.hidden, a.recurrent_width, usize::from(a.recurrent), a.n_actions] {
            out.extend_from_slice(&(x as u64).to_le_bytes());
        }
        for x in [self.env_steps, self.cycles, self.opt.step] {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out.push(u8::from(self.stats_hash.is_some()));
        out.extend_from_slice(&self.stats_hash.unwrap_or([0; 32]));
        out.extend_from_slice(&(n as u64).to_le_bytes());
        for v in [&self.params.data, &self.opt.m, &self.opt.v] {
            for x in v.iter() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out.extend_from_slice(&(self.trainer_state.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.trainer_state);
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0, path };
        if r.take(8)? != CHECKPOINT_MAGIC {
            return Err(r.bad("not a checkpoint file"));
        }
        let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
        if version != CHECKPOINT_VERSION {
            return Err(r.bad(&format!("unsupported checkpoint version {version}")));
        }
        let arch = ArchConfig {
            input_dim: r.usize()?,
            hidden: r.usize()?,
            recurrent_width: r.usize()?,
            recurrent: r.u64()? != 0,
            n_actions: r.usize()?,
        };
        let env_steps = r.u64()?;
        let cycles = r.u64()?;
        let adam_step = r.u64()?;
        let has_stats = r.take(1)?[0] != 0;
        let hash: [u8; 32] = r.take(32)?.try_into().unwrap();
        let n = r.usize()?;
        let expected = crate::nn::ParamLayout::new(&arch).len();
        if n != expected {
            return Err(r.bad(&format!("{n} parameters stored, architecture needs {expected}")));
        }
        let data = r.f64s(n)?;
        let m = r.f64s(n)?;
        let v = r.f64s(n)?;
        let len = r.usize()?;
        let trainer_state = r.take(len)?.to_vec();
        if r.pos != bytes.len() {
            return Err(r.bad("trailing bytes"));
        }
        Ok(Checkpoint {
            params: PolicyParams::from_data(arch, data)?,
            opt: OptimizerState { m, v, step: adam_step },
            env_steps,
            cycles,
            stats_hash: has_stats.then_some(hash),
            trainer_state,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl Reader<'_> {
    fn bad(&self, reason: &str) -> Error {
        Error::Format { path: self.path.to_path_buf(), reason: reason.to_string() }
    }

    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(self.bad("truncated checkpoint"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn usize(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| self.bad("size field out of range"))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| self.bad("size overflow"))?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}
