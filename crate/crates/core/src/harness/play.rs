use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minitower::{render_text, EnvConfig, EnvState, FactoredAction, Lateral, Move, Rotate};
use crate::wrappers::{build_action_set, shape_reward, ActionSetId, ActionTable, RewardConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaySummary {
    pub seed: u64,
    pub steps: usize,
    pub floor_reached: usize,
    pub shaped_return: f64,
    /// True when the player typed `quit` before the episode ended.
    pub quit: bool,
}

pub const PLAY_HELP: &str = "keys: w forward, s back, a/d rotate left/right, z/c strafe left/right, \
j or space jump+forward, q/e forward+rotate left/right, . no-action, <n> table index, quit";

fn key_action(c: char) -> Option<FactoredAction> {
    let mut a = FactoredAction::NOOP;
    match c {
        'w' => a.mv = Move::Forward,
        's' => a.mv = Move::Backward,
        'a' => a.rotate = Rotate::Left,
        'd' => a.rotate = Rotate::Right,
        'z' => a.lateral = Lateral::Left,
        'c' => a.lateral = Lateral::Right,
        'j' | ' ' => a = FactoredAction::jump_forward(),
        'q' => {
            a.mv = Move::Forward;
            a.rotate = Rotate::Left;
        }
        'e' => {
            a.mv = Move::Forward;
            a.rotate = Rotate::Right;
        }
        '.' => {}
        _ => return None,
    }
    Some(a)
}

/// Parses one input line into table indices. `Err` carries a hint.
fn parse_line(line: &str, table: &ActionTable) -> std::result::Result<Vec<usize>, String> {
    let mut out = Vec::new();
    let trimmed = line.trim_end_matches(['\n', '\r']);
    if trimmed.chars().all(|c| c == ' ') && !trimmed.is_empty() {
        return parse_line("j", table);
    }
    for tok in trimmed.split_whitespace() {
        if tok == "space" {
            out.extend(parse_line("j", table)?);
        } else if let Ok(i) = tok.parse::<usize>() {
            if i >= table.len() {
                return Err(format!("index {i} outside 0..{} for {}", table.len(), table.set_id));
            }
            out.push(i);
        } else {
            for c in tok.chars() {
                let a = key_action(c).ok_or_else(|| format!("unknown key `{c}`"))?;
                let i = table.position(&a).ok_or_else(|| format!("`{c}` ({a}) is not in {}", table.set_id))?;
                out.push(i);
            }
        }
    }
    Ok(out)
}

fn status(state: &EnvState, ret: f64) -> String {
    format!(
        "floor {}  keys {}  time {}/{}  reward {:.2}",
        state.floor, state.keys_held, state.remaining_time, state.layout.time_budget, ret
    )
}

/// Line-driven text session. Each line holds keys or table indices; `quit`
/// ends the session. Invalid input is ignored with a hint.
pub fn play<R: BufRead, W: Write>(
    seed: u64,
    retro: bool,
    action_set: ActionSetId,
    env: &EnvConfig,
    reward: &RewardConfig,
    input: R,
    mut out: W,
) -> Result<PlaySummary> {
    let cfg = EnvConfig { retro, ..env.clone() };
    let table = build_action_set(action_set);
    let (mut state, _) = EnvState::reset(seed, 0, &cfg)?;
    let mut summary = PlaySummary { seed, steps: 0, floor_reached: 0, shaped_return: 0.0, quit: false };
    let w = |out: &mut W, s: &str| writeln!(out, "{s}").map_err(|e| Error::io("<stdout>", e));
    w(&mut out, &format!("seed {seed}, action set {action_set}. {PLAY_HELP}"))?;
    w(&mut out, &render_text(&state))?;
    w(&mut out, &status(&state, 0.0))?;
    for line in input.lines() {
        let line = line.map_err(|e| Error::io("<stdin>", e))?;
        if line.trim() == "quit" {
            summary.quit = true;
            break;
        }
        let actions = match parse_line(&line, &table) {
            Ok(a) => a,
            Err(hint) => {
                w(&mut out, &format!("ignored: {hint}. {PLAY_HELP}"))?;
                continue;
            }
        };
        for i in actions {
            let o = state.step(table.get(i)?)?;
            summary.steps += 1;
            summary.shaped_return += shape_reward(&o.event, reward);
            if o.done {
                break;
            }
        }
        summary.floor_reached = state.floor;
        w(&mut out, &render_text(&state))?;
        w(&mut out, &status(&state, summary.shaped_return))?;
        if state.episode_done {
            break;
        }
    }
    summary.floor_reached = state.floor;
    w(
        &mut out,
        &format!(
            "summary: seed {} steps {} floor {} reward {:.2}{}",
            summary.seed,
            summary.steps,
            summary.floor_reached,
            summary.shaped_return,
            if summary.quit { " (quit)" } else { "" }
        ),
    )?;
    Ok(summary)
}
