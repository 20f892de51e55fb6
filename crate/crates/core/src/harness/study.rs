use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::eval::validate;
use super::train::train;
use crate::error::{Error, Result};
use crate::ppo::PpoConfig;
use crate::wrappers::{ActionSetId, StackConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    /// The baseline and one variant per single element.
    BaselineComparison,
    /// Cumulative combinations of the elements, in order.
    IncrementalStack,
    /// The base configuration under each action set.
    ActionSets,
}

impl StudyKind {
    pub fn default_repetitions(self) -> usize {
        match self {
            StudyKind::BaselineComparison | StudyKind::IncrementalStack => 3,
            StudyKind::ActionSets => 1,
        }
    }
}

impl FromStr for StudyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "baseline_comparison" => Ok(StudyKind::BaselineComparison),
            "incremental_stack" => Ok(StudyKind::IncrementalStack),
            "action_sets" => Ok(StudyKind::ActionSets),
            _ => Err(Error::Config(format!(
                "unknown study `{s}` (expected baseline_comparison, incremental_stack or action_sets)"
            ))),
        }
    }
}

/// A single improvement that can be switched on over the baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Element {
    ReducedActionSpace,
    LargeScaleHyperparameters,
    ReducedFrameStack,
    Recurrent,
    VectorObservations,
    Normalization,
    RewardShaping,
}

impl Element {
    pub const ALL: [Element; 7] = [
        Element::ReducedActionSpace,
        Element::LargeScaleHyperparameters,
        Element::ReducedFrameStack,
        Element::Recurrent,
        Element::VectorObservations,
        Element::Normalization,
        Element::RewardShaping,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Element::ReducedActionSpace => "reduced_action_space",
            Element::LargeScaleHyperparameters => "large_scale_hyperparameters",
            Element::ReducedFrameStack => "reduced_frame_stack",
            Element::Recurrent => "recurrent",
            Element::VectorObservations => "vector_observations",
            Element::Normalization => "normalization",
            Element::RewardShaping => "reward_shaping",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Element::ReducedActionSpace => "Reduced Action Space",
            Element::LargeScaleHyperparameters => "Large Scale Hyperparameters",
            Element::ReducedFrameStack => "Reduced Frame Stack",
            Element::Recurrent => "Recurrent",
            Element::VectorObservations => "Vector Observations",
            Element::Normalization => "Normalization",
            Element::RewardShaping => "Reward Shaping",
        }
    }

    /// Switches this element on in `cfg`.
    pub fn apply(self, cfg: &mut RunConfig) {
        match self {
            Element::ReducedActionSpace => cfg.wrappers.action_set = ActionSetId::A8,
            Element::LargeScaleHyperparameters => cfg.ppo = PpoConfig { adam: cfg.ppo.adam, ..PpoConfig::dash() },
            Element::ReducedFrameStack => cfg.wrappers.stack = StackConfig::DASH,
            Element::Recurrent => cfg.network.recurrent = true,
            Element::VectorObservations => {
                cfg.wrappers.vector_obs = true;
                cfg.env.retro = false;
            }
            Element::Normalization => cfg.wrappers.normalize = true,
            Element::RewardShaping => cfg.wrappers.shape_rewards = true,
        }
    }
}

impl FromStr for Element {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_lowercase().replace(['-', ' '], "_");
        let key = if key == "reduce_action_space" { "reduced_action_space".to_string() } else { key };
        Element::ALL
            .into_iter()
            .find(|e| e.name() == key)
            .ok_or_else(|| Error::Config(format!("unknown element `{s}`")))
    }
}

/// Recurrent minibatching needs the minibatch count to divide the number of
/// environments; picks the divisor closest to the configured count.
pub fn fit_minibatches(cfg: &mut RunConfig) {
    let n = cfg.ppo.num_envs;
    if !cfg.network.recurrent || n.is_multiple_of(cfg.ppo.minibatches) {
        return;
    }
    let want = cfg.ppo.minibatches as i64;
    cfg.ppo.minibatches =
        (1..=n).filter(|d| n.is_multiple_of(*d)).min_by_key(|&d| ((d as i64 - want).abs(), d)).unwrap_or(1);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySpec {
    pub kind: StudyKind,
    /// Element names (or action-set names for `action_sets`); empty selects
    /// the standard list.
    pub elements: Vec<String>,
    pub steps_per_run: u64,
    pub repetitions: usize,
    /// Environment, network, seeds, master seed and output directory are
    /// taken from here.
    pub base: RunConfig,
    pub validation_runs_per_seed: usize,
    /// Run configurations on separate threads.
    pub parallel: bool,
}

impl StudySpec {
    pub fn new(kind: StudyKind, base: RunConfig) -> Self {
        StudySpec {
            kind,
            elements: Vec::new(),
            steps_per_run: 500_000,
            repetitions: kind.default_repetitions(),
            base,
            validation_runs_per_seed: 5,
            parallel: false,
        }
    }
}

/// Applies the desk-scale parts of `base` (environment, network widths,
/// seeds, stats, checkpointing) to a preset.
fn with_base(mut cfg: RunConfig, base: &RunConfig) -> RunConfig {
    let retro = cfg.env.retro;
    cfg.env = base.env.clone();
    cfg.env.retro = retro;
    cfg.network.hidden = base.network.hidden;
    cfg.network.recurrent_width = base.network.recurrent_width;
    cfg.seeds = base.seeds.clone();
    cfg.stats = base.stats.clone();
    cfg.checkpoint_interval = base.checkpoint_interval;
    cfg
}

/// Labelled run configurations of a study (before per-repetition seeding).
pub fn study_configs(spec: &StudySpec) -> Result<Vec<(String, RunConfig)>> {
    let baseline = with_base(RunConfig::baseline(), &spec.base);
    let mut out = Vec::new();
    match spec.kind {
        StudyKind::BaselineComparison | StudyKind::IncrementalStack => {
            let elements: Vec<Element> = if spec.elements.is_empty() {
                match spec.kind {
                    StudyKind::BaselineComparison => vec![
                        Element::ReducedActionSpace,
                        Element::LargeScaleHyperparameters,
                        Element::ReducedFrameStack,
                        Element::Recurrent,
                    ],
                    _ => vec![
                        Element::ReducedFrameStack,
                        Element::ReducedActionSpace,
                        Element::LargeScaleHyperparameters,
                        Element::Recurrent,
                        Element::VectorObservations,
                    ],
                }
            } else {
                spec.elements.iter().map(|s| s.parse()).collect::<Result<_>>()?
            };
            if spec.kind == StudyKind::BaselineComparison {
                out.push(("Baseline".to_string(), baseline.clone()));
                for e in elements {
                    let mut c = baseline.clone();
                    e.apply(&mut c);
                    fit_minibatches(&mut c);
                    out.push((e.label().to_string(), c));
                }
            } else {
                let mut c = baseline.clone();
                let mut labels: Vec<&str> = Vec::new();
                for e in elements {
                    e.apply(&mut c);
                    labels.push(e.label());
                    let mut fitted = c.clone();
                    fit_minibatches(&mut fitted);
                    out.push((labels.join(" + "), fitted));
                }
            }
        }
        StudyKind::ActionSets => {
            let sets: Vec<ActionSetId> = if spec.elements.is_empty() {
                ActionSetId::ALL.to_vec()
            } else {
                spec.elements.iter().map(|s| s.parse()).collect::<Result<_>>()?
            };
            for set in sets {
                let mut c = spec.base.clone();
                c.wrappers.action_set = set;
                out.push((format!("Action Set {}", set.size()), c));
            }
        }
    }
    for (label, c) in &out {
        c.validate().map_err(|e| Error::Config(format!("{label}: {e}")))?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub configuration: String,
    pub repetition: usize,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub env_steps: u64,
    pub validation_mean_floor: f64,
    pub validation_std_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub configuration: String,
    pub runs: usize,
    pub mean_floor: f64,
    /// Population standard deviation across repetitions.
    pub std_floor: f64,
    pub median_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub kind: StudyKind,
    pub steps_per_run: u64,
    pub repetitions: usize,
    pub rows: Vec<ConfigSummary>,
    pub runs: Vec<RunRecord>,
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

impl StudyReport {
    /// Aggregates per-run records, keeping configuration order.
    pub fn from_runs(kind: StudyKind, steps_per_run: u64, repetitions: usize, runs: Vec<RunRecord>) -> Self {
        let mut names: Vec<String> = Vec::new();
        for r in &runs {
            if !names.contains(&r.configuration) {
                names.push(r.configuration.clone());
            }
        }
        let rows = names
            .into_iter()
            .map(|name| {
                let xs: Vec<f64> =
                    runs.iter().filter(|r| r.configuration == name).map(|r| r.validation_mean_floor).collect();
                let n = xs.len() as f64;
                let mean = xs.iter().sum::<f64>() / n;
                let std = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
                ConfigSummary {
                    configuration: name,
                    runs: xs.len(),
                    mean_floor: mean,
                    std_floor: std,
                    median_floor: median(&xs),
                }
            })
            .collect();
        StudyReport { kind, steps_per_run, repetitions, rows, runs }
    }

    /// Aligned plain-text table.
    pub fn to_table(&self) -> String {
        let w = self.rows.iter().map(|r| r.configuration.len()).max().unwrap_or(0).max("configuration".len());
        let mut s = format!(
            "{:<w$}  {:>4}  {:>10}  {:>8}  {:>12}\n",
            "configuration", "runs", "mean floor", "std", "median floor"
        );
        for r in &self.rows {
            s += &format!(
                "{:<w$}  {:>4}  {:>10.3}  {:>8.3}  {:>12.3}\n",
                r.configuration, r.runs, r.mean_floor, r.std_floor, r.median_floor
            );
        }
        s
    }

    pub fn row(&self, configuration: &str) -> Option<&ConfigSummary> {
        self.rows.iter().find(|r| r.configuration == configuration)
    }
}

fn slug(label: &str) -> String {
    label
        .to_lowercase()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect::<String>()
        .split('_')
        .filter(|p| !p.is_empty())
        .collect::<Vec<_>>()
        .join("_")
}

fn run_one(cfg: RunConfig, label: String, rep: usize, spec: &StudySpec) -> Result<RunRecord> {
    let result = train(cfg.clone())?;
    let report = validate(
        &result.final_checkpoint,
        Some(&cfg.seeds.validation),
        spec.validation_runs_per_seed,
        cfg.master_seed,
        cfg.stats.path.as_deref(),
    )?;
    std::fs::write(cfg.output_dir.join("validation.json"), serde_json::to_string_pretty(&report)?)
        .map_err(|e| Error::io(cfg.output_dir.join("validation.json"), e))?;
    Ok(RunRecord {
        configuration: label,
        repetition: rep,
        master_seed: cfg.master_seed,
        output_dir: cfg.output_dir,
        env_steps: result.env_steps,
        validation_mean_floor: report.overall_mean_floor,
        validation_std_floor: report.overall_std_floor,
    })
}

/// Runs every configuration `repetitions` times (master seeds
/// `base.master_seed + rep`) and writes `study.txt` and `study.json` into
/// `base.output_dir`.
pub fn ablate(spec: &StudySpec) -> Result<StudyReport> {
    if spec.repetitions == 0 || spec.steps_per_run == 0 || spec.validation_runs_per_seed == 0 {
        return Err(Error::Config("repetitions, steps_per_run and validation runs must be positive".into()));
    }
    let configs = study_configs(spec)?;
    let root = spec.base.output_dir.clone();
    let mut jobs = Vec::new();
    for (label, cfg) in &configs {
        for rep in 0..spec.repetitions {
            let mut c = cfg.clone();
            c.total_steps = spec.steps_per_run;
            c.master_seed = spec.base.master_seed + rep as u64;
            c.output_dir = root.join(slug(label)).join(format!("rep{rep}"));
            jobs.push((c, label.clone(), rep));
        }
    }
    let runs: Vec<RunRecord> = if spec.parallel {
        std::thread::scope(|s| {
            let handles: Vec<_> = jobs.into_iter().map(|(c, l, r)| s.spawn(move || run_one(c, l, r, spec))).collect();
            handles.into_iter().map(|h| h.join().expect("study run panicked")).collect::<Result<Vec<_>>>()
        })?
    } else {
        jobs.into_iter().map(|(c, l, r)| run_one(c, l, r, spec)).collect::<Result<Vec<_>>>()?
    };
    let report = StudyReport::from_runs(spec.kind, spec.steps_per_run, spec.repetitions, runs);
    write_report(&report, &root)?;
    Ok(report)
}

pub fn write_report(report: &StudyReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    std::fs::write(dir.join("study.txt"), report.to_table()).map_err(|e| Error::io(dir.join("study.txt"), e))?;
    std::fs::write(dir.join("study.json"), serde_json::to_string_pretty(report)?)
        .map_err(|e| Error::io(dir.join("study.json"), e))
}
