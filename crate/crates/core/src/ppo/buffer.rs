use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minitower::{EnvState, Environment, MiniTower};
use crate::nn::{forward, sample_action, PolicyParams};
use crate::wrappers::{ActionTable, ObsStats, ObservationPipeline, WrapperConfig};

/// `T x N` transitions stored time-major: entry `t * envs + n` is step `t`
/// of environment `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutBuffer {
    pub steps: usize,
    pub envs: usize,
    pub obs_dim: usize,
    pub state_width: usize,
    /// Network inputs (stacked, normalized, with vector observation).
    pub obs: Vec<f64>,
    pub actions: Vec<usize>,
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    /// 0 where the step begins a new episode.
    pub masks: Vec<f64>,
    /// Hidden state of each environment before step 0, `N x state_width`.
    pub hidden0: Vec<f64>,
    pub bootstrap_values: Vec<f64>,
    pub bootstrap_masks: Vec<f64>,
    /// Episodes that finished during this rollout.
    pub episodes: Vec<EpisodeRecord>,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.steps * self.envs
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub env: usize,
    pub seed: u64,
    pub shaped_return: f64,
    /// Highest floor reached (0 = never left the first floor).
    pub floor_reached: usize,
    pub length: usize,
}

/// One environment with its wrapper state, random stream and recurrent state.
#[derive(Debug, Clone)]
pub struct EnvSlot<E> {
    pub env: E,
    pipeline: ObservationPipeline,
    rng: ChaCha8Rng,
    hidden: Vec<f64>,
    obs: Vec<f64>,
    mask: f64,
    seed: u64,
    episode_return: f64,
    episode_len: usize,
}

/// The `N` environments feeding a learner. Each slot owns its random stream,
/// so results do not depend on the order in which slots are stepped.
#[derive(Debug, Clone)]
pub struct EnvPool<E> {
    slots: Vec<EnvSlot<E>>,
    table: ActionTable,
    wrappers: WrapperConfig,
    stats: Option<ObsStats>,
    seed_pool: Vec<u64>,
    state_width: usize,
    seeds_used: BTreeSet<u64>,
}

fn slot_rng(master_seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index as u64 + 1);
    rng
}

impl<E: Environment> EnvPool<E> {
    /// Builds `num_envs` environments from `factory` and starts an episode in
    /// each. `stats` must be given iff normalization is enabled.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mut factory: impl FnMut(usize) -> E,
        num_envs: usize,
        table: ActionTable,
        wrappers: WrapperConfig,
        stats: Option<ObsStats>,
        seed_pool: Vec<u64>,
        state_width: usize,
        master_seed: u64,
    ) -> Result<Self> {
        if seed_pool.is_empty() {
            return Err(Error::Config("training seed pool is empty".into()));
        }
        if wrappers.normalize != stats.is_some() {
            return Err(Error::Config("observation statistics must be supplied exactly when normalizing".into()));
        }
        let mut pool = EnvPool {
            slots: Vec::with_capacity(num_envs),
            table,
            wrappers,
            stats,
            seed_pool,
            state_width,
            seeds_used: BTreeSet::new(),
        };
        for i in 0..num_envs {
            let env = factory(i);
            let pipeline = ObservationPipeline::new(&pool.wrappers, env.observation_shape(), max_keys_of(&env))?;
            pool.slots.push(EnvSlot {
                env,
                pipeline,
                rng: slot_rng(master_seed, i),
                hidden: vec![0.0; state_width],
                obs: Vec::new(),
                mask: 0.0,
                seed: 0,
                episode_return: 0.0,
                episode_len: 0,
            });
            pool.start_episode(i)?;
        }
        Ok(pool)
    }

    fn start_episode(&mut self, i: usize) -> Result<()> {
        let slot = &mut self.slots[i];
        let seed = self.seed_pool[slot.rng.gen_range(0..self.seed_pool.len())];
        self.seeds_used.insert(seed);
        let obs = slot.env.reset(seed, 0).map_err(|e| env_err(i, e))?;
        slot.pipeline.reset();
        slot.obs = slot.pipeline.process(&obs, self.stats.as_ref()).map_err(|e| env_err(i, e))?;
        slot.mask = 0.0;
        slot.seed = seed;
        slot.episode_return = 0.0;
        slot.episode_len = 0;
        Ok(())
    }

    pub fn num_envs(&self) -> usize {
        self.slots.len()
    }

    pub fn obs_dim(&self) -> usize {
        self.slots.first().map_or(0, |s| s.obs.len())
    }

    pub fn table(&self) -> &ActionTable {
        &self.table
    }

    /// Every seed any environment has been reset to.
    pub fn seeds_used(&self) -> &BTreeSet<u64> {
        &self.seeds_used
    }

    fn gather(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let obs = self.slots.iter().flat_map(|s| s.obs.iter().copied()).collect();
        let hidden = self.slots.iter().flat_map(|s| s.hidden.iter().copied()).collect();
        let masks = self.slots.iter().map(|s| s.mask).collect();
        (obs, hidden, masks)
    }
}

fn env_err(index: usize, e: Error) -> Error {
    Error::Env { index, source: Box::new(e) }
}

fn max_keys_of<E: Environment>(env: &E) -> usize {
    env.max_keys()
}

/// Steps every environment `steps` times under `params`, sampling actions
/// through the pool's action table. Finished episodes restart on a seed drawn
/// from the training pool.
pub fn collect_rollout<E: Environment>(
    params: &PolicyParams,
    pool: &mut EnvPool<E>,
    steps: usize,
) -> Result<RolloutBuffer> {
    let n_envs = pool.num_envs();
    let d = pool.obs_dim();
    let sw = pool.state_width;
    if params.arch.input_dim != d {
        return Err(Error::shape(format!("network input {}", params.arch.input_dim), d));
    }
    if params.arch.n_actions != pool.table.len() || params.arch.state_width() != sw {
        return Err(Error::Contract("network does not match the action table or hidden width".into()));
    }
    let rows = steps * n_envs;
    let mut buf = RolloutBuffer {
        steps,
        envs: n_envs,
        obs_dim: d,
        state_width: sw,
        obs: Vec::with_capacity(rows * d),
        actions: Vec::with_capacity(rows),
        log_probs: Vec::with_capacity(rows),
        values: Vec::with_capacity(rows),
        rewards: Vec::with_capacity(rows),
        dones: Vec::with_capacity(rows),
        masks: Vec::with_capacity(rows),
        hidden0: pool.slots.iter().flat_map(|s| s.hidden.iter().copied()).collect(),
        bootstrap_values: Vec::new(),
        bootstrap_masks: Vec::new(),
        episodes: Vec::new(),
    };

    for _ in 0..steps {
        let (obs, hidden, masks) = pool.gather();
        let out = forward(params, &obs, &hidden, &masks)?;
        buf.obs.extend_from_slice(&obs);
        buf.masks.extend_from_slice(&masks);
        buf.values.extend_from_slice(&out.values);
        let na = params.arch.n_actions;
        for n in 0..n_envs {
            let slot = &mut pool.slots[n];
            let (a, logp) = sample_action(&out.logits[n * na..(n + 1) * na], &mut slot.rng);
            let action = pool.table.get(a)?;
            let outcome = slot.env.step(action).map_err(|e| env_err(n, e))?;
            let reward = pool.wrappers.reward(&outcome.event, outcome.raw_reward);
            slot.episode_return += reward;
            slot.episode_len += 1;
            slot.hidden.copy_from_slice(&out.hidden[n * sw..(n + 1) * sw]);
            buf.actions.push(a);
            buf.log_probs.push(logp);
            buf.rewards.push(reward);
            buf.dones.push(outcome.done);
            if outcome.done {
                buf.episodes.push(EpisodeRecord {
                    env: n,
                    seed: slot.seed,
                    shaped_return: slot.episode_return,
                    floor_reached: slot.env.floor(),
                    length: slot.episode_len,
                });
                pool.start_episode(n)?;
            } else {
                slot.obs =
                    slot.pipeline.process(&outcome.observation, pool.stats.as_ref()).map_err(|e| env_err(n, e))?;
                slot.mask = 1.0;
            }
        }
    }

    let (obs, hidden, masks) = pool.gather();
    let out = forward(params, &obs, &hidden, &masks)?;
    buf.bootstrap_values = out.values;
    buf.bootstrap_masks = masks;
    Ok(buf)
}

/// Serializable state of one MiniTower slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotSnapshot {
    pub env: Option<EnvState>,
    pub pipeline: ObservationPipeline,
    pub rng: ChaCha8Rng,
    pub hidden: Vec<f64>,
    pub obs: Vec<f64>,
    pub mask: f64,
    pub seed: u64,
    pub episode_return: f64,
    pub episode_len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolSnapshot {
    pub slots: Vec<SlotSnapshot>,
    pub seeds_used: BTreeSet<u64>,
}

impl EnvPool<MiniTower> {
    pub fn snapshot(&self) -> PoolSnapshot {
        PoolSnapshot {
            slots: self
                .slots
                .iter()
                .map(|s| SlotSnapshot {
                    env: s.env.state().cloned(),
                    pipeline: s.pipeline.clone(),
                    rng: s.rng.clone(),
                    hidden: s.hidden.clone(),
                    obs: s.obs.clone(),
                    mask: s.mask,
                    seed: s.seed,
                    episode_return: s.episode_return,
                    episode_len: s.episode_len,
                })
                .collect(),
            seeds_used: self.seeds_used.clone(),
        }
    }

    /// Overwrites every slot with a snapshot taken from a pool of the same
    /// configuration.
    pub fn restore(&mut self, snap: PoolSnapshot) -> Result<()> {
        if snap.slots.len() != self.slots.len() {
            return Err(Error::shape(format!("{} environments", self.slots.len()), snap.slots.len()));
        }
        for (slot, s) in self.slots.iter_mut().zip(snap.slots) {
            if s.hidden.len() != self.state_width {
                return Err(Error::shape(self.state_width, s.hidden.len()));
            }
            let config = slot.env.config().clone();
            slot.env = match s.env {
                Some(state) => MiniTower::from_state(state),
                None => MiniTower::new(config),
            };
            slot.pipeline = s.pipeline;
            slot.rng = s.rng;
            slot.hidden = s.hidden;
            slot.obs = s.obs;
            slot.mask = s.mask;
            slot.seed = s.seed;
            slot.episode_return = s.episode_return;
            slot.episode_len = s.episode_len;
        }
        self.seeds_used = snap.seeds_used;
        Ok(())
    }
}
