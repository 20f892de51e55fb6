//! Runs the action-set study for A8 and A54 over three master seeds and
//! prints the median validation floor of each.
//!
//! `cargo run --release --example action_set_effect -- [steps] [width] [output_dir]`

use ppo_dash::harness::{ablate, RunConfig, StudyKind, StudySpec};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let steps: u64 = args.next().map_or(Ok(500_000), |s| s.parse())?;
    let width: usize = args.next().map_or(Ok(256), |s| s.parse())?;
    let mut base = RunConfig::dash();
    base.output_dir = args.next().unwrap_or_else(|| "runs/action_sets".into()).into();
    base.network.hidden = width;
    base.network.recurrent_width = width;
    base.checkpoint_interval = 0;

    let mut spec = StudySpec::new(StudyKind::ActionSets, base);
    spec.elements = vec!["A8".into(), "A54".into()];
    spec.repetitions = 3;
    spec.steps_per_run = steps;
    let report = ablate(&spec)?;
    print!("{}", report.to_table());
    for label in ["Action Set 8", "Action Set 54"] {
        if let Some(row) = report.row(label) {
            println!("{label}: median validation floor {:.3}", row.median_floor);
        }
    }
    Ok(())
}
