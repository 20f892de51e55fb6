use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ppo_dash::harness::{ablate, build_stats_cmd, play, train, validate, RunConfig, StudyKind, StudySpec, Trainer};
use ppo_dash::minitower::dump_layout;
use ppo_dash::wrappers::{dump_action_tables, ActionSetId};

#[derive(Parser)]
#[command(name = "ppo-dash", version, about = "Recurrent PPO on a seeded grid tower")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// TOML run configuration (`preset = "baseline"` selects the baseline).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set ppo.num_envs=8`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> anyhow::Result<RunConfig> {
        let cfg = RunConfig::load(self.config.as_deref(), &self.overrides)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn given(&self) -> bool {
        self.config.is_some() || !self.overrides.is_empty()
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Split {
    Train,
    Validation,
    Test,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train a policy (or continue from a checkpoint).
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        total_steps: Option<u64>,
        /// Continue from this checkpoint; `--output` defaults to its run directory.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Evaluate a checkpoint with stochastic episodes on held-out seeds.
    Validate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Comma-separated seeds; overrides `--split`.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        #[arg(long, value_enum, default_value = "validation")]
        split: Split,
        #[arg(long, default_value_t = 5)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        eval_seed: u64,
        /// Observation statistics file (default: the run directory's).
        #[arg(long)]
        stats: Option<PathBuf>,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
        /// Also write the report to this file as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run an ablation study and print its table.
    Ablate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        study: String,
        /// Comma-separated element or action-set names (default: the standard list).
        #[arg(long, value_delimiter = ',')]
        elements: Vec<String>,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        repetitions: Option<usize>,
        #[arg(long)]
        validation_runs: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Run configurations concurrently.
        #[arg(long)]
        parallel: bool,
    },
    /// Build observation statistics from random play and print their hash.
    BuildStats {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Play a tower from the terminal, one line of keys per turn.
    Play {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        retro: bool,
        #[arg(long, default_value = "A8", value_parser = parse_action_set)]
        action_set: ActionSetId,
    },
    /// Print every action table.
    DumpActions {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Print the generated layout of one floor.
    DumpLayout {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        floor: usize,
    },
}

fn parse_action_set(s: &str) -> Result<ActionSetId, String> {
    s.parse().map_err(|e: ppo_dash::Error| e.to_string())
}

fn run(cmd: Cmd) -> anyhow::Result<()> {
    let mut stdout = std::io::stdout().lock();
    match cmd {
        Cmd::Train { cfg, output, total_steps, resume } => {
            let result = match resume {
                Some(ck) => {
                    if cfg.given() {
                        bail!(ppo_dash::Error::Config("--resume takes its configuration from the checkpoint".into()));
                    }
                    let dir = output.unwrap_or_else(|| ppo_dash::harness::run_dir_of_checkpoint(&ck));
                    Trainer::resume(&ck, &dir, total_steps)?.finish()?
                }
                None => {
                    let mut c = cfg.load()?;
                    if let Some(o) = output {
                        c.output_dir = o;
                    }
                    if let Some(t) = total_steps {
                        c.total_steps = t;
                    }
                    train(c)?
                }
            };
            writeln!(
                stdout,
                "trained {} steps in {} cycles; final checkpoint {}",
                result.env_steps,
                result.cycles,
                result.final_checkpoint.display()
            )?;
        }
        Cmd::Validate { cfg, checkpoint, seeds, split, runs, eval_seed, stats, json, report } => {
            let seeds = if !seeds.is_empty() {
                Some(seeds)
            } else {
                let splits = if cfg.given() {
                    cfg.load()?.seeds
                } else {
                    let ck = ppo_dash::harness::Checkpoint::load(&checkpoint)?;
                    let state: ppo_dash::harness::TrainerState =
                        serde_json::from_slice(&ck.trainer_state).context("checkpoint carries no run configuration")?;
                    state.config.seeds
                };
                Some(match split {
                    Split::Train => splits.train,
                    Split::Validation => splits.validation,
                    Split::Test => splits.test,
                })
            };
            let r = validate(&checkpoint, seeds.as_deref(), runs, eval_seed, stats.as_deref())?;
            let text = serde_json::to_string_pretty(&r)?;
            if let Some(p) = report {
                std::fs::write(&p, &text).with_context(|| format!("writing {}", p.display()))?;
            }
            if json {
                writeln!(stdout, "{text}")?;
            } else {
                write!(stdout, "{}", r.to_text())?;
            }
        }
        Cmd::Ablate { cfg, study, elements, steps, repetitions, validation_runs, output, parallel } => {
            let kind: StudyKind = study.parse()?;
            let mut base = cfg.load()?;
            if let Some(o) = output {
                base.output_dir = o;
            }
            let mut spec = StudySpec::new(kind, base);
            spec.elements = elements;
            spec.parallel = parallel;
            if let Some(s) = steps {
                spec.steps_per_run = s;
            }
            if let Some(r) = repetitions {
                spec.repetitions = r;
            }
            if let Some(v) = validation_runs {
                spec.validation_runs_per_seed = v;
            }
            ppo_dash::harness::study_configs(&spec)?;
            let report = ablate(&spec)?;
            write!(stdout, "{}", report.to_table())?;
        }
        Cmd::BuildStats { cfg, output, steps } => {
            let mut c = cfg.load()?;
            if let Some(s) = steps {
                c.stats.steps = s;
            }
            let (stats, hash) = build_stats_cmd(&c, &output)?;
            writeln!(stdout, "{} samples written to {}\nsha256 {hash}", stats.sample_count, output.display())?;
        }
        Cmd::Play { cfg, seed, retro, action_set } => {
            let c = cfg.load()?;
            let stdin = std::io::stdin().lock();
            play(seed, retro, action_set, &c.env, &c.wrappers.reward, stdin, &mut stdout)?;
        }
        Cmd::DumpActions { cfg } => {
            cfg.load()?;
            write!(stdout, "{}", dump_action_tables())?;
        }
        Cmd::DumpLayout { cfg, seed, floor } => {
            let c = cfg.load()?;
            writeln!(stdout, "{}", dump_layout(seed, floor, &c.env)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = matches!(e.downcast_ref::<ppo_dash::Error>(), Some(ppo_dash::Error::Config(_)));
            ExitCode::from(if usage { 1 } else { 2 })
        }
    }
}
