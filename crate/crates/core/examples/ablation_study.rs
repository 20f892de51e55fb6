//! Runs a miniature study (baseline comparison, incremental stack or action
//! sets) and prints its table. Runs are tiny; use the `ablate` subcommand of
//! the `ppo-dash` binary for real budgets.
//!
//! `cargo run --release --example ablation_study -- [study] [output_dir]`

use ppo_dash::harness::{ablate, study_configs, RunConfig, StudyKind, StudySpec};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let kind: StudyKind = args.next().as_deref().unwrap_or("action_sets").parse()?;
    let mut base = RunConfig::dash();
    base.output_dir = args.next().unwrap_or_else(|| "runs/study".into()).into();
    base.env.num_floors = 2;
    base.seeds.train = (0..20).collect();
    base.seeds.validation = (95..98).collect();
    base.network.hidden = 16;
    base.network.recurrent_width = 16;
    base.stats.steps = 500;

    let mut spec = StudySpec::new(kind, base);
    spec.repetitions = 1;
    spec.validation_runs_per_seed = 2;
    for (label, cfg) in study_configs(&spec)? {
        println!(
            "{label}: {} actions, {} envs x {} steps",
            cfg.arch().n_actions,
            cfg.ppo.num_envs,
            cfg.ppo.rollout_len
        );
    }
    // One update cycle per run at the largest configured batch.
    spec.steps_per_run = 1;
    let report = ablate(&spec)?;
    print!("{}", report.to_table());
    Ok(())
}
