use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::checkpoint::Checkpoint;
use super::config::RunConfig;
use crate::error::{Error, Result};
use crate::minitower::MiniTower;
use crate::nn::{init_params, OptimizerState, PolicyParams};
use crate::ppo::{
    annealed_lr, apply_schedule, collect_rollout, compute_gae, ppo_update, EnvPool, PoolSnapshot, UpdateStats,
};
use crate::wrappers::{build_action_set, build_obs_stats, ObsStats};

pub const METRICS_FILE: &str = "metrics.jsonl";
pub const TIMING_FILE: &str = "timing.jsonl";
pub const STATS_FILE: &str = "obs_stats.bin";
pub const CONFIG_FILE: &str = "config.toml";
pub const CHECKPOINT_DIR: &str = "checkpoints";
pub const FINAL_CHECKPOINT: &str = "final.ckpt";

// Stream ids for the master-seed-derived generators. Environment slots use
// streams 1..=N.
const STREAM_INIT: u64 = u64::MAX;
const STREAM_LEARNER: u64 = u64::MAX - 1;
const STREAM_STATS: u64 = u64::MAX - 2;

pub(crate) fn derived_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// One line of `metrics.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub cycle: u64,
    pub env_steps: u64,
    /// Episodes finished during this cycle's rollout.
    pub episodes: usize,
    pub mean_episode_reward: Option<f64>,
    pub mean_floor: Option<f64>,
    #[serde(flatten)]
    pub update: UpdateStats,
}

/// Everything besides weights and optimizer moments needed to resume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerState {
    /// Run configuration with `output_dir` cleared.
    pub config: RunConfig,
    pub pool: PoolSnapshot,
    pub learner_rng: ChaCha8Rng,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    pub env_steps: u64,
    pub cycles: u64,
    pub final_checkpoint: PathBuf,
    pub metrics: Vec<MetricsRecord>,
    /// Union of environment seeds used by the rollout workers.
    pub seeds_used: Vec<u64>,
}

/// Training loop state.
pub struct Trainer {
    cfg: RunConfig,
    params: PolicyParams,
    opt: OptimizerState,
    pool: EnvPool<MiniTower>,
    learner_rng: ChaCha8Rng,
    stats: Option<ObsStats>,
    env_steps: u64,
    cycles: u64,
    metrics: Vec<MetricsRecord>,
}

/// Checkpoints live in `<run>/checkpoints/`.
pub fn run_dir_of_checkpoint(checkpoint: &Path) -> PathBuf {
    checkpoint.parent().and_then(Path::parent).map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."))
}

/// Observation statistics for a run: the configured file, else the run
/// directory's own. The hash must match `expected` when given.
pub fn load_run_stats(
    cfg: &RunConfig,
    run_dir: &Path,
    explicit: Option<&Path>,
    expected: Option<[u8; 32]>,
) -> Result<Option<ObsStats>> {
    if !cfg.wrappers.normalize {
        return Ok(None);
    }
    let path =
        explicit.map(Path::to_path_buf).or_else(|| cfg.stats.path.clone()).unwrap_or_else(|| run_dir.join(STATS_FILE));
    let stats = ObsStats::load(&path)?;
    if let Some(want) = expected {
        if stats.hash() != want {
            return Err(Error::StatsHashMismatch { expected: hex::encode(want), actual: stats.hash_hex() });
        }
    }
    Ok(Some(stats))
}

/// Builds observation statistics from random play on the training seeds.
pub fn build_stats_for(cfg: &RunConfig, steps: usize) -> Result<ObsStats> {
    let mut rng = derived_rng(cfg.master_seed, STREAM_STATS);
    let env_cfg = cfg.env.clone();
    build_obs_stats(|| MiniTower::new(env_cfg.clone()), steps, &cfg.seeds.train, &mut rng)
}

/// Builds statistics per `cfg.stats.steps`, writes them to `out` and
/// returns them with their hex hash.
pub fn build_stats_cmd(cfg: &RunConfig, out: &Path) -> Result<(ObsStats, String)> {
    cfg.env.validate()?;
    cfg.seeds.validate()?;
    let stats = build_stats_for(cfg, cfg.stats.steps)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    stats.save(out)?;
    let hash = stats.hash_hex();
    Ok((stats, hash))
}

fn mean_of(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, s) = xs.fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    (n > 0).then(|| s / n as f64)
}

impl Trainer {
    /// Fresh run. Resolves the schedule threshold, prepares the output
    /// directory and the observation statistics.
    pub fn new(mut cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
        if cfg.ppo.schedule.threshold_steps.is_none() && !cfg.ppo.schedule.disabled {
            cfg.ppo.schedule.threshold_steps = Some(cfg.total_steps / 2);
        }
        let out = cfg.output_dir.clone();
        std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
        std::fs::write(out.join(CONFIG_FILE), cfg.to_toml()?).map_err(|e| Error::io(out.join(CONFIG_FILE), e))?;
        for f in [METRICS_FILE, TIMING_FILE] {
            File::create(out.join(f)).map_err(|e| Error::io(out.join(f), e))?;
        }
        let stats = if cfg.wrappers.normalize {
            match &cfg.stats.path {
                Some(p) => Some(ObsStats::load(p)?),
                None => {
                    let s = build_stats_for(&cfg, cfg.stats.steps)?;
                    s.save(&out.join(STATS_FILE))?;
                    Some(s)
                }
            }
        } else {
            None
        };
        let params = init_params(&mut derived_rng(cfg.master_seed, STREAM_INIT), &cfg.arch())?;
        let opt = OptimizerState::new(params.len());
        let pool = Self::make_pool(&cfg, stats.clone())?;
        Ok(Trainer {
            learner_rng: derived_rng(cfg.master_seed, STREAM_LEARNER),
            cfg,
            params,
            opt,
            pool,
            stats,
            env_steps: 0,
            cycles: 0,
            metrics: Vec::new(),
        })
    }

    fn make_pool(cfg: &RunConfig, stats: Option<ObsStats>) -> Result<EnvPool<MiniTower>> {
        let env_cfg = cfg.env.clone();
        EnvPool::new(
            |_| MiniTower::new(env_cfg.clone()),
            cfg.ppo.num_envs,
            build_action_set(cfg.wrappers.action_set),
            cfg.wrappers.clone(),
            stats,
            cfg.seeds.train.clone(),
            cfg.arch().state_width(),
            cfg.master_seed,
        )
    }

    /// Continues a run from a checkpoint, writing into `output_dir`
    /// (appending to its metrics). `total_steps` replaces the stored target
    /// when given.
    pub fn resume(checkpoint: &Path, output_dir: &Path, total_steps: Option<u64>) -> Result<Self> {
        let ck = Checkpoint::load(checkpoint)?;
        let state: TrainerState = serde_json::from_slice(&ck.trainer_state)?;
        let mut cfg = state.config;
        cfg.output_dir = output_dir.to_path_buf();
        if let Some(t) = total_steps {
            cfg.total_steps = t;
        }
        cfg.validate()?;
        let stats = load_run_stats(&cfg, &run_dir_of_checkpoint(checkpoint), None, ck.stats_hash)?;
        std::fs::create_dir_all(output_dir).map_err(|e| Error::io(output_dir, e))?;
        if let Some(s) = &stats {
            let p = output_dir.join(STATS_FILE);
            if cfg.stats.path.is_none() && !p.exists() {
                s.save(&p)?;
            }
        }
        let mut pool = Self::make_pool(&cfg, stats.clone())?;
        pool.restore(state.pool)?;
        if ck.params.arch != cfg.arch() {
            return Err(Error::Contract("checkpoint architecture does not match its configuration".into()));
        }
        Ok(Trainer {
            cfg,
            params: ck.params,
            opt: ck.opt,
            pool,
            learner_rng: state.learner_rng,
            stats,
            env_steps: ck.env_steps,
            cycles: ck.cycles,
            metrics: Vec::new(),
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn params(&self) -> &PolicyParams {
        &self.params
    }

    pub fn env_steps(&self) -> u64 {
        self.env_steps
    }

    pub fn stats(&self) -> Option<&ObsStats> {
        self.stats.as_ref()
    }

    pub fn seeds_used(&self) -> Vec<u64> {
        self.pool.seeds_used().iter().copied().collect()
    }

    /// One collect / advantage / update cycle.
    pub fn step_cycle(&mut self) -> Result<MetricsRecord> {
        let started = Instant::now();
        let ppo = &self.cfg.ppo;
        let (epochs, mut lr) = apply_schedule(self.env_steps, ppo);
        if ppo.anneal_lr {
            lr = annealed_lr(lr, self.env_steps, self.cfg.total_steps);
        }
        let buffer = collect_rollout(&self.params, &mut self.pool, ppo.rollout_len)?;
        let (adv, ret) = compute_gae(&buffer, ppo.gamma, ppo.gae_lambda);
        let update =
            ppo_update(&mut self.params, &mut self.opt, &buffer, &adv, &ret, ppo, epochs, lr, &mut self.learner_rng)?;
        self.env_steps += ppo.steps_per_cycle();
        self.cycles += 1;
        let rec = MetricsRecord {
            cycle: self.cycles,
            env_steps: self.env_steps,
            episodes: buffer.episodes.len(),
            mean_episode_reward: mean_of(buffer.episodes.iter().map(|e| e.shaped_return)),
            mean_floor: mean_of(buffer.episodes.iter().map(|e| e.floor_reached as f64)),
            update,
        };
        let out = &self.cfg.output_dir;
        append_line(&out.join(METRICS_FILE), &serde_json::to_string(&rec)?)?;
        let timing = serde_json::json!({ "cycle": self.cycles, "wall_seconds": started.elapsed().as_secs_f64() });
        append_line(&out.join(TIMING_FILE), &timing.to_string())?;
        self.metrics.push(rec.clone());
        Ok(rec)
    }

    pub fn checkpoint(&self) -> Result<Checkpoint> {
        let mut config = self.cfg.clone();
        config.output_dir = PathBuf::new();
        let state = TrainerState { config, pool: self.pool.snapshot(), learner_rng: self.learner_rng.clone() };
        Ok(Checkpoint {
            params: self.params.clone(),
            opt: self.opt.clone(),
            env_steps: self.env_steps,
            cycles: self.cycles,
            stats_hash: self.stats.as_ref().map(ObsStats::hash),
            trainer_state: serde_json::to_vec(&state)?,
        })
    }

    pub fn save_checkpoint(&self, name: &str) -> Result<PathBuf> {
        let path = self.cfg.output_dir.join(CHECKPOINT_DIR).join(name);
        self.checkpoint()?.save(&path)?;
        Ok(path)
    }

    /// Runs cycles until at least `steps` environment steps have been taken
    /// (or the configured total, whichever is smaller).
    pub fn run_until(&mut self, steps: u64) -> Result<()> {
        let target = steps.min(self.cfg.total_steps);
        while self.env_steps < target {
            self.step_cycle()?;
            let k = self.cfg.checkpoint_interval;
            if k > 0 && self.cycles.is_multiple_of(k) && self.env_steps < self.cfg.total_steps {
                self.save_checkpoint(&format!("step_{:012}.ckpt", self.env_steps))?;
            }
        }
        Ok(())
    }

    /// Trains to the configured total and writes the final checkpoint.
    pub fn finish(mut self) -> Result<TrainResult> {
        self.run_until(self.cfg.total_steps)?;
        let final_checkpoint = self.save_checkpoint(FINAL_CHECKPOINT)?;
        Ok(TrainResult {
            env_steps: self.env_steps,
            cycles: self.cycles,
            final_checkpoint,
            seeds_used: self.seeds_used(),
            metrics: self.metrics,
        })
    }
}

fn append_line(path: &Path, line: &str) -> Result<()> {
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(|e| Error::io(path, e))?;
    writeln!(f, "{line}").map_err(|e| Error::io(path, e))
}

/// Trains a fresh run to completion.
pub fn train(cfg: RunConfig) -> Result<TrainResult> {
    Trainer::new(cfg)?.finish()
}
