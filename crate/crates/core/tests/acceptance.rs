//! Acceptance suite. Prints one line per criterion and exits non-zero when
//! any criterion fails. Pass criterion numbers as arguments to run a subset:
//! `cargo test --release --test acceptance -- 1 2 3`.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use ppo_dash::harness::{
    ablate, build_stats_for, episode_returns, evaluate, load_run_stats, mean_and_se, train, validate, Checkpoint,
    EvalSetup, RunConfig, SeedSplits, StudyKind, StudySpec, UniformPolicy, ValidationReport, FINAL_CHECKPOINT,
    METRICS_FILE,
};
use ppo_dash::minitower::{solve, EnvConfig, EnvState, EventKind, FactoredAction, MiniTower, RawEvent};
use ppo_dash::nn::OptimizerState;
use ppo_dash::nn::{init_params, ArchConfig};
use ppo_dash::ppo::{
    collect_rollout, compute_gae, gae_advantages, ppo_loss, ppo_loss_and_grad, ppo_update, recurrent_minibatches,
    EnvPool, MinibatchData, PpoConfig,
};
use ppo_dash::wrappers::{
    apply_action, build_action_set, build_obs_stats, normalize, shape_reward, ActionSetId, RewardConfig, WrapperConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Pinned tolerances and budgets.
const C1_PARAMS: usize = 200;
const C1_STEP: f64 = 1e-5;
const C1_REL_TOL: f64 = 1e-3;
/// Gradients below this magnitude are compared on an absolute scale.
const C1_SCALE_FLOOR: f64 = 1e-8;
const C1_MAX_SECONDS: u64 = 60;
const C2_BUFFERS: usize = 100;
const C2_TOL: f64 = 1e-10;
const C2_MAX_SECONDS: u64 = 5;
const C3_RATIO_TOL: f64 = 1e-10;
const C4_SEEDS: u64 = 100;
const C4_FLOORS: usize = 10;
const C6_STATS_STEPS: usize = 10_000;
const C6_FRESH_FRAMES: usize = 1_000;
const C6_MEAN_TOL: f64 = 0.05;
const C6_MIN_FRACTION: f64 = 0.99;
const C8_STEPS: u64 = 200_000;
const C8_TRAINED_EPISODES: usize = 100;
const C8_RANDOM_EPISODES: usize = 1_000;
const C8_MIN_Z: f64 = 3.0;
const C8_MAX_SECONDS: u64 = 30 * 60;
const C9_STEPS: u64 = 500_000;
const C9_SEEDS: usize = 3;
const C9_WIDTH: usize = 256;
const C10_RUNS: usize = 5;

enum Verdict {
    Pass,
    Fail,
    /// Not a failure of the suite, but the result calls for a larger budget.
    Soft,
}

struct Outcome {
    verdict: Verdict,
    detail: String,
}

fn check(ok: bool, detail: String) -> Outcome {
    Outcome { verdict: if ok { Verdict::Pass } else { Verdict::Fail }, detail }
}

type R = anyhow::Result<Outcome>;

/// Run directories and seeds observed during training criteria.
#[derive(Default)]
struct Shared {
    seeds_used: Vec<(String, Vec<u64>, SeedSplits)>,
    checkpoint: Option<PathBuf>,
}

fn scratch(root: &Path, name: &str) -> PathBuf {
    let p = root.join(name);
    let _ = std::fs::remove_dir_all(&p);
    p
}

fn c1_gradients() -> R {
    let started = Instant::now();
    let env = EnvConfig { num_floors: 2, ..EnvConfig::default() };
    let wrappers = WrapperConfig { normalize: false, ..WrapperConfig::default() };
    let table = build_action_set(wrappers.action_set);
    let arch = ArchConfig {
        input_dim: wrappers.input_dim(env.observation_shape(), env.max_keys),
        hidden: 32,
        recurrent_width: 32,
        recurrent: true,
        n_actions: table.len(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut params = init_params(&mut rng, &arch)?;
    let mut pool = EnvPool::new(|_| MiniTower::new(env.clone()), 4, table, wrappers, None, (0..10).collect(), 32, 101)?;
    let buf = collect_rollout(&params, &mut pool, 32)?;
    let (adv, ret) = compute_gae(&buf, 0.99, 0.95);
    let mb = &recurrent_minibatches(buf.steps, buf.envs, 2, true, &mut rng)?[0];
    let mut data = MinibatchData::gather(&buf, mb, &adv, &ret);
    // Perturbed behaviour log-probs put some ratios outside the clip range.
    data.old_log_probs.iter_mut().for_each(|lp| *lp += rng.gen_range(-0.3..0.3));
    let cfg = PpoConfig::dash();
    let (stats, grad) = ppo_loss_and_grad(&params, &data, &cfg)?;
    let mut worst: f64 = 0.0;
    for _ in 0..C1_PARAMS {
        let i = rng.gen_range(0..params.len());
        let orig = params.data[i];
        params.data[i] = orig + C1_STEP;
        let up = ppo_loss(&params, &data, &cfg)?.total;
        params.data[i] = orig - C1_STEP;
        let down = ppo_loss(&params, &data, &cfg)?.total;
        params.data[i] = orig;
        let fd = (up - down) / (2.0 * C1_STEP);
        let rel = (fd - grad.data[i]).abs() / fd.abs().max(grad.data[i].abs()).max(C1_SCALE_FLOOR);
        worst = worst.max(rel);
    }
    let secs = started.elapsed();
    Ok(check(
        worst <= C1_REL_TOL && secs < Duration::from_secs(C1_MAX_SECONDS) && stats.clip_fraction > 0.0,
        format!(
            "{C1_PARAMS} of {} parameters, worst relative error {worst:.2e} (tol {C1_REL_TOL:e}), clip fraction {:.2}, {secs:.1?}",
            params.len(),
            stats.clip_fraction
        ),
    ))
}

/// `A_t = sum_k (gamma lambda)^(k-t) delta_k`, cut at the first episode end.
#[allow(clippy::too_many_arguments)]
fn gae_double_sum(
    r: &[f64],
    v: &[f64],
    m: &[f64],
    boot: &[f64],
    bm: &[f64],
    t_len: usize,
    n: usize,
    g: f64,
    l: f64,
) -> Vec<f64> {
    let next =
        |t: usize, e: usize| if t + 1 == t_len { (boot[e], bm[e]) } else { (v[(t + 1) * n + e], m[(t + 1) * n + e]) };
    let mut out = vec![0.0; t_len * n];
    for e in 0..n {
        for t in 0..t_len {
            let (mut sum, mut w) = (0.0, 1.0);
            for k in t..t_len {
                let (nv, nm) = next(k, e);
                sum += w * (r[k * n + e] + g * nv * nm - v[k * n + e]);
                if nm == 0.0 {
                    break;
                }
                w *= g * l;
            }
            out[t * n + e] = sum;
        }
    }
    out
}

fn c2_gae() -> R {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    for _ in 0..C2_BUFFERS {
        let t = rng.gen_range(1..=16);
        let n = rng.gen_range(1..=4);
        let mut u = |len: usize| -> Vec<f64> { (0..len).map(|_| rng.gen_range(-2.0..2.0)).collect() };
        let (r, v, boot) = (u(t * n), u(t * n), u(n));
        let mask = |rng: &mut ChaCha8Rng, len: usize| -> Vec<f64> {
            (0..len).map(|_| if rng.gen_bool(0.25) { 0.0 } else { 1.0 }).collect()
        };
        let (m, bm) = (mask(&mut rng, t * n), mask(&mut rng, n));
        let (g, l) = (rng.gen_range(0.9..1.0), rng.gen_range(0.0..=1.0));
        let (adv, _) = gae_advantages(&r, &v, &m, &boot, &bm, t, n, g, l);
        let want = gae_double_sum(&r, &v, &m, &boot, &bm, t, n, g, l);
        worst = adv.iter().zip(&want).fold(worst, |w, (a, b)| w.max((a - b).abs()));
    }
    let secs = started.elapsed();
    Ok(check(
        worst <= C2_TOL && secs < Duration::from_secs(C2_MAX_SECONDS),
        format!("{C2_BUFFERS} buffers, max |recursive - double sum| {worst:.1e} (tol {C2_TOL:e}), {secs:.2?}"),
    ))
}

fn c3_ratio_one() -> R {
    let mut cfg = RunConfig::dash();
    cfg.master_seed = 303;
    cfg.ppo.rollout_len = 64;
    cfg.ppo.num_envs = 8;
    cfg.stats.steps = 2_000;
    let stats = build_stats_for(&cfg, cfg.stats.steps)?;
    let arch = cfg.arch();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut lines = Vec::new();
    let mut ok = true;
    for recurrent in [true, false] {
        let a = ArchConfig { recurrent, ..arch };
        let mut params = init_params(&mut rng, &a)?;
        let env = cfg.env.clone();
        let mut pool = EnvPool::new(
            |_| MiniTower::new(env.clone()),
            cfg.ppo.num_envs,
            build_action_set(cfg.wrappers.action_set),
            cfg.wrappers.clone(),
            Some(stats.clone()),
            cfg.seeds.train.clone(),
            a.state_width(),
            cfg.master_seed,
        )?;
        let buf = collect_rollout(&params, &mut pool, cfg.ppo.rollout_len)?;
        let (adv, ret) = compute_gae(&buf, cfg.ppo.gamma, cfg.ppo.gae_lambda);
        let mut opt = OptimizerState::new(params.len());
        let s = ppo_update(
            &mut params,
            &mut opt,
            &buf,
            &adv,
            &ret,
            &cfg.ppo,
            cfg.ppo.epochs,
            cfg.ppo.learning_rate,
            &mut rng,
        )?;
        ok &= s.first_max_ratio_deviation <= C3_RATIO_TOL && s.first_clip_fraction == 0.0;
        lines.push(format!(
            "{}: max |ratio - 1| {:.1e}, clip fraction {}",
            if recurrent { "recurrent" } else { "feed-forward" },
            s.first_max_ratio_deviation,
            s.first_clip_fraction
        ));
    }
    Ok(check(ok, format!("width {}, {} (tol {C3_RATIO_TOL:e})", arch.hidden, lines.join("; "))))
}

fn c4_action_tables() -> R {
    let sizes: Vec<usize> = ActionSetId::ALL.iter().map(|&s| build_action_set(s).len()).collect();
    let mut ok = sizes == [6, 8, 20, 27, 54];
    let all = FactoredAction::all();
    for &id in &ActionSetId::ALL {
        let t = build_action_set(id);
        let distinct: BTreeSet<String> = t.entries.iter().map(|a| format!("{a:?}")).collect();
        ok &= distinct.len() == t.len();
        ok &= t.entries.iter().all(|a| all.contains(a));
        ok &= (0..t.len()).all(|i| apply_action(&t, i).is_ok()) && apply_action(&t, t.len()).is_err();
    }
    let a6 = build_action_set(ActionSetId::A6);
    let a8 = build_action_set(ActionSetId::A8);
    let subset = a6.entries.iter().all(|a| a8.entries.contains(a));
    ok &= subset;

    let env = EnvConfig::default();
    let mut failures = Vec::new();
    for seed in 0..C4_SEEDS {
        let (mut state, _) = EnvState::reset(seed, 0, &env)?;
        for floor in 0..C4_FLOORS {
            let Some(plan) = solve(&state.layout, &a6.entries) else {
                failures.push((seed, floor));
                break;
            };
            for i in plan {
                state.step(a6.get(i)?)?;
            }
            if state.floor != floor + 1 {
                failures.push((seed, floor));
                break;
            }
        }
    }
    ok &= failures.is_empty();
    Ok(check(
        ok,
        format!(
            "sizes {sizes:?}, A6 subset of A8: {subset}, A6 solver cleared floors 0-{} on {}/{C4_SEEDS} seeds{}",
            C4_FLOORS - 1,
            C4_SEEDS as usize - failures.len(),
            if failures.is_empty() {
                String::new()
            } else {
                format!(", failed at {:?}", &failures[..failures.len().min(5)])
            }
        ),
    ))
}

fn c5_reward_shaping() -> R {
    let cfg = RewardConfig::default();
    let ev = |kind, f| RawEvent { kind, remaining_time_fraction: f };
    // Scripted log: (event, expected shaped reward).
    let log = [
        (ev(EventKind::Step, 0.99), 0.0),
        (ev(EventKind::HealthPickup, 0.9), 0.1),
        (ev(EventKind::PuzzleComplete, 0.8), 1.0),
        (ev(EventKind::FloorComplete, 1.0), 4.0),
        (ev(EventKind::FloorComplete, 0.5), 2.5),
        (ev(EventKind::FloorComplete, 0.0), 1.0),
        (ev(EventKind::GameOver, 0.0), -1.0),
    ];
    let mut ok = log.iter().all(|(e, want)| shape_reward(e, &cfg) == *want);

    // A played episode: solver through three floors, then idle until timeout.
    let env = EnvConfig::default();
    let table = build_action_set(ActionSetId::A8);
    let (mut state, _) = EnvState::reset(7, 2, &env)?;
    let mut seen = BTreeSet::new();
    let mut floors = Vec::new();
    while state.floor < 5 {
        let plan = solve(&state.layout, &table.entries).ok_or_else(|| anyhow::anyhow!("unsolvable floor"))?;
        for i in plan {
            let o = state.step(table.get(i)?)?;
            let r = shape_reward(&o.event, &cfg);
            seen.insert(format!("{:?}", o.event.kind));
            match o.event.kind {
                EventKind::FloorComplete => {
                    floors.push(r);
                    ok &= (1.0..=4.0).contains(&r) && r == 1.0 + 3.0 * o.event.remaining_time_fraction;
                }
                EventKind::PuzzleComplete => ok &= r == 1.0,
                EventKind::HealthPickup => ok &= r == 0.1,
                EventKind::Step => ok &= r == 0.0,
                EventKind::GameOver => ok = false,
            }
        }
    }
    loop {
        let o = state.step(table.get(0)?)?;
        if o.done {
            ok &= o.event.kind == EventKind::GameOver && shape_reward(&o.event, &cfg) == -1.0;
            seen.insert(format!("{:?}", o.event.kind));
            break;
        }
    }
    ok &= seen.contains("PuzzleComplete") && seen.contains("GameOver") && floors.len() == 3;
    Ok(check(
        ok,
        format!(
            "scripted log matches table; played episode floor rewards {:?}, events {:?}",
            floors.iter().map(|r| (r * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
            seen
        ),
    ))
}

fn c6_normalization() -> R {
    let cfg = RunConfig::dash();
    let stats = build_stats_for(&cfg, C6_STATS_STEPS)?;
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let env = cfg.env.clone();
    let fresh = build_obs_stats(|| MiniTower::new(env.clone()), C6_FRESH_FRAMES, &cfg.seeds.train, &mut rng)?;
    // The normalized sample mean of each pixel.
    let means = normalize(&fresh.pixel_mean, &stats)?;
    let within = means.iter().filter(|m| m.abs() <= C6_MEAN_TOL).count();
    let frac = within as f64 / means.len() as f64;
    let worst = means.iter().fold(0.0f64, |w, m| w.max(m.abs()));
    Ok(check(
        stats.sample_count == C6_STATS_STEPS as u64 && frac >= C6_MIN_FRACTION,
        format!(
            "{within}/{} pixels within {C6_MEAN_TOL} ({:.1}%, need {:.0}%), worst {worst:.3}",
            means.len(),
            100.0 * frac,
            100.0 * C6_MIN_FRACTION
        ),
    ))
}

fn cli_train(args: &[&str]) -> anyhow::Result<()> {
    let o = Command::new(env!("CARGO_BIN_EXE_ppo-dash")).arg("train").args(args).output()?;
    anyhow::ensure!(o.status.success(), "ppo-dash train failed: {}", String::from_utf8_lossy(&o.stderr));
    Ok(())
}

fn c7_determinism(root: &Path, shared: &mut Shared) -> R {
    let dirs: Vec<PathBuf> = ["c7_a", "c7_b", "c7_resumed"].iter().map(|n| scratch(root, n)).collect();
    let common = ["--total-steps", "32768", "--set", "checkpoint_interval=1", "--set", "master_seed=7"];
    for d in &dirs[..2] {
        let mut args = common.to_vec();
        args.extend(["--output", d.to_str().unwrap()]);
        cli_train(&args)?;
    }
    let read = |p: PathBuf| std::fs::read(&p).map_err(|e| anyhow::anyhow!("{}: {e}", p.display()));
    let ck = |d: &Path| d.join("checkpoints").join(FINAL_CHECKPOINT);
    let same_metrics = read(dirs[0].join(METRICS_FILE))? == read(dirs[1].join(METRICS_FILE))?;
    let same_ckpt = read(ck(&dirs[0]))? == read(ck(&dirs[1]))?;
    let mid = dirs[0].join("checkpoints/step_000000016384.ckpt");
    cli_train(&["--resume", mid.to_str().unwrap(), "--output", dirs[2].to_str().unwrap()])?;
    let resumed_same = read(ck(&dirs[2]))? == read(ck(&dirs[0]))?;
    let tail: Vec<String> =
        String::from_utf8(read(dirs[0].join(METRICS_FILE))?)?.lines().skip(1).map(String::from).collect();
    let resumed_tail: Vec<String> =
        String::from_utf8(read(dirs[2].join(METRICS_FILE))?)?.lines().map(String::from).collect();
    let c = Checkpoint::load(&ck(&dirs[0]))?;
    let state: ppo_dash::harness::TrainerState = serde_json::from_slice(&c.trainer_state)?;
    shared.seeds_used.push((
        "criterion 7".into(),
        state.pool.seeds_used.iter().copied().collect(),
        state.config.seeds.clone(),
    ));
    shared.checkpoint = Some(ck(&dirs[0]));
    Ok(check(
        same_metrics && same_ckpt && resumed_same && tail == resumed_tail,
        format!(
            "default config, 2 cycles: metrics identical {same_metrics}, checkpoints identical {same_ckpt}, resumed checkpoint identical {resumed_same}, resumed metrics identical {}",
            tail == resumed_tail
        ),
    ))
}

fn c8_learning(root: &Path, shared: &mut Shared) -> R {
    let started = Instant::now();
    let mut cfg = RunConfig::dash();
    cfg.output_dir = scratch(root, "c8");
    cfg.env.num_floors = 2;
    cfg.seeds.train = (0..20).collect();
    cfg.total_steps = C8_STEPS;
    cfg.checkpoint_interval = 0;
    let result = train(cfg.clone())?;
    let train_time = started.elapsed();
    shared.seeds_used.push(("criterion 8".into(), result.seeds_used.clone(), cfg.seeds.clone()));

    let stats = load_run_stats(&cfg, &cfg.output_dir, None, None)?;
    let setup = EvalSetup::from_run(&cfg, stats);
    let ck = Checkpoint::load(&result.final_checkpoint)?;
    let trained = episode_returns(&ck.params, &setup, &cfg.seeds.train, C8_TRAINED_EPISODES, 808)?;
    let random =
        episode_returns(&UniformPolicy(cfg.arch().n_actions), &setup, &cfg.seeds.train, C8_RANDOM_EPISODES, 809)?;
    let (mt, st) = mean_and_se(&trained);
    let (mr, sr) = mean_and_se(&random);
    let z = (mt - mr) / (st * st + sr * sr).sqrt();
    let total = started.elapsed();
    Ok(check(
        z >= C8_MIN_Z && total <= Duration::from_secs(C8_MAX_SECONDS),
        format!(
            "{} steps in {train_time:.0?}: trained return {mt:.3} (se {st:.3}, {C8_TRAINED_EPISODES} episodes) vs random {mr:.3} (se {sr:.3}, {C8_RANDOM_EPISODES} episodes), z = {z:.2} (need {C8_MIN_Z}), total {total:.0?}",
            result.env_steps
        ),
    ))
}

fn c9_action_sets(root: &Path, shared: &mut Shared) -> R {
    let mut base = RunConfig::dash();
    base.output_dir = scratch(root, "c9");
    base.network.hidden = C9_WIDTH;
    base.network.recurrent_width = C9_WIDTH;
    base.checkpoint_interval = 0;
    let mut spec = StudySpec::new(StudyKind::ActionSets, base);
    spec.elements = vec!["A8".into(), "A54".into()];
    spec.repetitions = C9_SEEDS;
    spec.steps_per_run = C9_STEPS;
    let report = ablate(&spec)?;
    println!("{}", report.to_table().trim_end());
    for run in &report.runs {
        let c = Checkpoint::load(&run.output_dir.join("checkpoints").join(FINAL_CHECKPOINT))?;
        let state: ppo_dash::harness::TrainerState = serde_json::from_slice(&c.trainer_state)?;
        shared.seeds_used.push((
            format!("criterion 9 {} rep {}", run.configuration, run.repetition),
            state.pool.seeds_used.iter().copied().collect(),
            state.config.seeds.clone(),
        ));
    }
    let median =
        |label: &str| report.row(label).map(|r| r.median_floor).ok_or_else(|| anyhow::anyhow!("missing {label}"));
    let (a8, a54) = (median("Action Set 8")?, median("Action Set 54")?);
    let verdict = if a8 > a54 {
        Verdict::Pass
    } else if a8 == a54 {
        Verdict::Soft
    } else {
        Verdict::Fail
    };
    Ok(Outcome {
        verdict,
        detail: format!(
            "width {C9_WIDTH}, {C9_STEPS} steps x {C9_SEEDS} seeds: median validation floor A8 {a8:.3} vs A54 {a54:.3}"
        ),
    })
}

fn c10_validation(shared: &Shared) -> R {
    let cfg = RunConfig::dash();
    let splits_ok = cfg.seeds.validate().is_ok()
        && cfg.seeds.train == (0..95).collect::<Vec<u64>>()
        && cfg.seeds.validation == (95..105).collect::<Vec<u64>>()
        && cfg.seeds.test == (105..110).collect::<Vec<u64>>();
    let mut overlapping = cfg.seeds.clone();
    overlapping.test.push(3);
    let overlap_rejected = overlapping.validate().is_err();

    let check_report = |r: &ValidationReport, n_seeds: usize| -> bool {
        let means: Vec<f64> = r
            .seeds
            .iter()
            .map(|s| s.runs.iter().map(|o| o.floor_reached as f64).sum::<f64>() / s.runs.len() as f64)
            .collect();
        let overall = means.iter().sum::<f64>() / means.len() as f64;
        r.seeds.len() == n_seeds
            && r.seeds.iter().all(|s| s.runs.len() == C10_RUNS)
            && r.seeds.iter().zip(&means).all(|(s, m)| (s.mean_floor - m).abs() <= 1e-12)
            && (r.overall_mean_floor - overall).abs() <= 1e-12
    };
    let setup = EvalSetup::from_run(
        &RunConfig { wrappers: WrapperConfig { normalize: false, ..cfg.wrappers.clone() }, ..cfg.clone() },
        None,
    );
    let random = evaluate(&UniformPolicy(8), &setup, &cfg.seeds.validation, C10_RUNS, 0)?;
    let mut reports_ok = check_report(&random, cfg.seeds.validation.len());
    let mut trained_floor = f64::NAN;
    if let Some(ck) = &shared.checkpoint {
        let r = validate(ck, None, C10_RUNS, 0, None)?;
        reports_ok &= check_report(&r, 10) && r.seeds.iter().map(|s| s.seed).eq(95..105);
        trained_floor = r.overall_mean_floor;
    }

    let mut hygiene = Vec::new();
    let mut hygiene_ok = !shared.seeds_used.is_empty();
    for (name, used, splits) in &shared.seeds_used {
        let held: BTreeSet<u64> = splits.validation.iter().chain(&splits.test).copied().collect();
        let ok = !used.is_empty() && used.iter().all(|s| splits.train.contains(s) && !held.contains(s));
        hygiene_ok &= ok;
        hygiene.push(format!("{name}: {} seeds{}", used.len(), if ok { "" } else { " LEAKED" }));
    }
    Ok(check(
        splits_ok && overlap_rejected && reports_ok && hygiene_ok,
        format!(
            "default splits {splits_ok}, overlap rejected {overlap_rejected}, report arithmetic {reports_ok} (random policy mean floor {:.2}, criterion-7 checkpoint {trained_floor:.2}); training seeds within train split: {}",
            random.overall_mean_floor,
            hygiene.join(", ")
        ),
    ))
}

fn main() -> ExitCode {
    let wanted: BTreeSet<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let run = |n: usize| wanted.is_empty() || wanted.contains(&n);
    let root = std::env::temp_dir().join(format!("ppo-dash-acceptance-{}", std::process::id()));
    let mut shared = Shared::default();
    let mut failed = 0;
    let criteria: Vec<(usize, &str)> = vec![
        (1, "gradient correctness"),
        (2, "GAE oracle"),
        (3, "ratio-one identity"),
        (4, "action tables"),
        (5, "reward shaping"),
        (6, "normalization"),
        (7, "determinism"),
        (8, "learning smoke test"),
        (9, "action-set effect"),
        (10, "validation protocol"),
    ];
    for (n, name) in criteria {
        if !run(n) {
            continue;
        }
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(|| match n {
            1 => c1_gradients(),
            2 => c2_gae(),
            3 => c3_ratio_one(),
            4 => c4_action_tables(),
            5 => c5_reward_shaping(),
            6 => c6_normalization(),
            7 => c7_determinism(&root, &mut shared),
            8 => c8_learning(&root, &mut shared),
            9 => c9_action_sets(&root, &mut shared),
            _ => c10_validation(&shared),
        }));
        let (tag, detail) = match result {
            Ok(Ok(Outcome { verdict: Verdict::Pass, detail })) => ("PASS", detail),
            Ok(Ok(Outcome { verdict: Verdict::Soft, detail })) => ("SOFT-FAIL", detail),
            Ok(Ok(Outcome { verdict: Verdict::Fail, detail })) => {
                failed += 1;
                ("FAIL", detail)
            }
            Ok(Err(e)) => {
                failed += 1;
                ("FAIL", format!("error: {e:#}"))
            }
            Err(_) => {
                failed += 1;
                ("FAIL", "panicked".to_string())
            }
        };
        println!("criterion {n:>2} {tag:<9} {name}: {detail} [{:.1?}]", started.elapsed());
    }
    let _ = std::fs::remove_dir_all(&root);
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
