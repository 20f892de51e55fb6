use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::train::{load_run_stats, TrainerState};
use crate::error::{Error, Result};
use crate::minitower::{EnvConfig, Environment, MiniTower};
use crate::nn::{forward, sample_action, PolicyParams};
use crate::wrappers::{build_action_set, ObsStats, ObservationPipeline, WrapperConfig};

/// Chooses action-table indices from processed observations.
pub trait Policy {
    /// Width of the recurrent state carried between steps.
    fn state_width(&self) -> usize;
    /// `mask` is 0 on the first step of an episode.
    fn act(&self, obs: &[f64], hidden: &mut Vec<f64>, mask: f64, rng: &mut ChaCha8Rng) -> Result<usize>;
}

impl Policy for PolicyParams {
    fn state_width(&self) -> usize {
        self.arch.state_width()
    }

    fn act(&self, obs: &[f64], hidden: &mut Vec<f64>, mask: f64, rng: &mut ChaCha8Rng) -> Result<usize> {
        let out = forward(self, obs, hidden, &[mask])?;
        *hidden = out.hidden;
        Ok(sample_action(&out.logits, rng).0)
    }
}

/// Uniform over `n` actions.
#[derive(Debug, Clone, Copy)]
pub struct UniformPolicy(pub usize);

impl Policy for UniformPolicy {
    fn state_width(&self) -> usize {
        0
    }

    fn act(&self, _: &[f64], _: &mut Vec<f64>, _: f64, rng: &mut ChaCha8Rng) -> Result<usize> {
        Ok(rng.gen_range(0..self.0))
    }
}

/// Always the same action index.
#[derive(Debug, Clone, Copy)]
pub struct ConstantPolicy(pub usize);

impl Policy for ConstantPolicy {
    fn state_width(&self) -> usize {
        0
    }

    fn act(&self, _: &[f64], _: &mut Vec<f64>, _: f64, _: &mut ChaCha8Rng) -> Result<usize> {
        Ok(self.0)
    }
}

/// Environment and wrapper settings an evaluation runs under.
#[derive(Debug, Clone)]
pub struct EvalSetup {
    pub env: EnvConfig,
    pub wrappers: WrapperConfig,
    pub stats: Option<ObsStats>,
}

impl EvalSetup {
    pub fn from_run(cfg: &RunConfig, stats: Option<ObsStats>) -> Self {
        EvalSetup { env: cfg.env.clone(), wrappers: cfg.wrappers.clone(), stats }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub floor_reached: usize,
    pub total_reward: f64,
    pub steps: usize,
}

/// Plays one episode from floor 0 of `seed` to completion.
pub fn run_episode<P: Policy + ?Sized>(
    policy: &P,
    setup: &EvalSetup,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<EpisodeOutcome> {
    let table = build_action_set(setup.wrappers.action_set);
    let mut env = MiniTower::new(setup.env.clone());
    let mut pipeline = ObservationPipeline::new(&setup.wrappers, setup.env.observation_shape(), setup.env.max_keys)?;
    let first = env.reset(seed, 0)?;
    let mut obs = pipeline.process(&first, setup.stats.as_ref())?;
    let mut hidden = vec![0.0; policy.state_width()];
    let mut mask = 0.0;
    let mut total_reward = 0.0;
    let mut steps = 0;
    loop {
        let a = policy.act(&obs, &mut hidden, mask, rng)?;
        let out = env.step(table.get(a)?)?;
        total_reward += setup.wrappers.reward(&out.event, out.raw_reward);
        steps += 1;
        if out.done {
            return Ok(EpisodeOutcome { floor_reached: env.floor(), total_reward, steps });
        }
        obs = pipeline.process(&out.observation, setup.stats.as_ref())?;
        mask = 1.0;
    }
}

/// Random stream for run `run` on `seed` of an evaluation keyed by `eval_seed`.
pub fn episode_rng(eval_seed: u64, seed: u64, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(eval_seed);
    rng.set_stream(seed.wrapping_mul(1 << 16).wrapping_add(run as u64));
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub runs: Vec<EpisodeOutcome>,
    pub mean_floor: f64,
    pub mean_reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub seeds: Vec<SeedResult>,
    /// Mean of the per-seed mean floors.
    pub overall_mean_floor: f64,
    /// Population standard deviation of the per-seed mean floors.
    pub overall_std_floor: f64,
    pub overall_mean_reward: f64,
}

fn mean(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = xs.clone().count();
    if n == 0 {
        0.0
    } else {
        xs.sum::<f64>() / n as f64
    }
}

impl ValidationReport {
    pub fn from_runs(per_seed: Vec<(u64, Vec<EpisodeOutcome>)>) -> Self {
        let seeds: Vec<SeedResult> = per_seed
            .into_iter()
            .map(|(seed, runs)| SeedResult {
                seed,
                mean_floor: mean(runs.iter().map(|r| r.floor_reached as f64)),
                mean_reward: mean(runs.iter().map(|r| r.total_reward)),
                runs,
            })
            .collect();
        let overall_mean_floor = mean(seeds.iter().map(|s| s.mean_floor));
        let overall_std_floor = mean(seeds.iter().map(|s| (s.mean_floor - overall_mean_floor).powi(2))).sqrt();
        let overall_mean_reward = mean(seeds.iter().map(|s| s.mean_reward));
        ValidationReport { seeds, overall_mean_floor, overall_std_floor, overall_mean_reward }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{:>6}  {:<24}  {:>10}  {:>11}\n", "seed", "floors per run", "mean floor", "mean reward");
        for r in &self.seeds {
            let floors: Vec<String> = r.runs.iter().map(|o| o.floor_reached.to_string()).collect();
            s += &format!("{:>6}  {:<24}  {:>10.2}  {:>11.3}\n", r.seed, floors.join(" "), r.mean_floor, r.mean_reward);
        }
        s += &format!(
            "overall mean floor {:.3} (std {:.3} across seeds), mean reward {:.3}\n",
            self.overall_mean_floor, self.overall_std_floor, self.overall_mean_reward
        );
        s
    }
}

/// Runs `runs_per_seed` stochastic episodes on each seed.
pub fn evaluate<P: Policy + ?Sized>(
    policy: &P,
    setup: &EvalSetup,
    seeds: &[u64],
    runs_per_seed: usize,
    eval_seed: u64,
) -> Result<ValidationReport> {
    let mut per_seed = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let runs = (0..runs_per_seed)
            .map(|run| run_episode(policy, setup, seed, &mut episode_rng(eval_seed, seed, run)))
            .collect::<Result<Vec<_>>>()?;
        per_seed.push((seed, runs));
    }
    Ok(ValidationReport::from_runs(per_seed))
}

/// Shaped returns of `episodes` stochastic episodes, cycling through `seeds`.
pub fn episode_returns<P: Policy + ?Sized>(
    policy: &P,
    setup: &EvalSetup,
    seeds: &[u64],
    episodes: usize,
    eval_seed: u64,
) -> Result<Vec<f64>> {
    if seeds.is_empty() {
        return Err(Error::Config("no evaluation seeds".into()));
    }
    (0..episodes)
        .map(|i| {
            let mut rng = episode_rng(eval_seed, i as u64, 0);
            run_episode(policy, setup, seeds[i % seeds.len()], &mut rng).map(|o| o.total_reward)
        })
        .collect()
}

/// Sample mean and its standard error.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Evaluates a training checkpoint on `seeds` (default: the run's
/// validation split). Observation statistics are read from `stats_path`, or
/// from the run directory holding the checkpoint, and must match the hash
/// recorded at training time.
pub fn validate(
    checkpoint: &Path,
    seeds: Option<&[u64]>,
    runs_per_seed: usize,
    eval_seed: u64,
    stats_path: Option<&Path>,
) -> Result<ValidationReport> {
    let ck = super::checkpoint::Checkpoint::load(checkpoint)?;
    let state: TrainerState = serde_json::from_slice(&ck.trainer_state)?;
    let cfg = state.config;
    let run_dir = super::train::run_dir_of_checkpoint(checkpoint);
    let stats = load_run_stats(&cfg, &run_dir, stats_path, ck.stats_hash)?;
    if cfg.arch() != ck.params.arch {
        return Err(Error::Contract("checkpoint architecture does not match its run configuration".into()));
    }
    let seeds = seeds.map(<[u64]>::to_vec).unwrap_or_else(|| cfg.seeds.validation.clone());
    if seeds.is_empty() {
        return Err(Error::Config("no validation seeds".into()));
    }
    evaluate(&ck.params, &EvalSetup::from_run(&cfg, stats), &seeds, runs_per_seed, eval_seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wrappers::ActionSetId;

    fn outcome(f: usize) -> EpisodeOutcome {
        EpisodeOutcome { floor_reached: f, total_reward: f as f64, steps: 1 }
    }

    #[test]
    fn overall_mean_is_mean_of_means() {
        let r = ValidationReport::from_runs(vec![
            (1, vec![outcome(3); 5]),
            (2, vec![outcome(4), outcome(6), outcome(5), outcome(5), outcome(5)]),
        ]);
        assert_eq!(r.seeds[0].mean_floor, 3.0);
        assert_eq!(r.seeds[1].mean_floor, 5.0);
        assert_eq!(r.overall_mean_floor, 4.0);
        assert_eq!(r.overall_std_floor, 1.0);
    }

    #[test]
    fn noop_policy_stays_on_floor_zero() {
        let setup = EvalSetup {
            env: EnvConfig { num_floors: 3, ..EnvConfig::default() },
            wrappers: WrapperConfig { normalize: false, action_set: ActionSetId::A6, ..WrapperConfig::default() },
            stats: None,
        };
        let r = evaluate(&ConstantPolicy(0), &setup, &[95, 96], 5, 0).unwrap();
        assert_eq!(r.overall_mean_floor, 0.0);
        assert!(r.seeds.iter().all(|s| s.runs.len() == 5 && s.runs.iter().all(|o| o.steps == 300)));
        let again = evaluate(&UniformPolicy(6), &setup, &[95], 5, 3).unwrap();
        assert_eq!(again, evaluate(&UniformPolicy(6), &setup, &[95], 5, 3).unwrap());
    }
}
