//! Training orchestration: run configs, the training loop with metrics and
//! checkpoints, seed-split validation, ablation studies and the text
//! playtest mode.

mod checkpoint;
mod config;
mod eval;
mod play;
mod study;
mod train;

pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::{apply_override, NetConfig, Preset, RunConfig, SeedSplits, StatsConfig};
pub use eval::{
    episode_returns, episode_rng, evaluate, mean_and_se, run_episode, validate, ConstantPolicy, EpisodeOutcome,
    EvalSetup, Policy, SeedResult, UniformPolicy, ValidationReport,
};
pub use play::{play, PlaySummary, PLAY_HELP};
pub use study::{
    ablate, fit_minibatches, median, study_configs, write_report, ConfigSummary, Element, RunRecord, StudyKind,
    StudyReport, StudySpec,
};
pub use train::{
    build_stats_cmd, build_stats_for, load_run_stats, run_dir_of_checkpoint, train, MetricsRecord, TrainResult,
    Trainer, TrainerState, CHECKPOINT_DIR, CONFIG_FILE, FINAL_CHECKPOINT, METRICS_FILE, STATS_FILE, TIMING_FILE,
};
