use super::{generate_floor, Cell, EnvConfig, EnvState, Heading, Observation, NUM_CHANNELS};
use crate::error::Result;

const WALL: usize = 0;
const ITEM: usize = 1;
const DOOR_EXIT: usize = 2;
const THEME: usize = 3;

/// Renders the egocentric `(C, H, W)` window around the agent, rotated so its
/// heading points up. The agent sits at the window centre.
///
/// Channel 0 holds walls (1.0, out-of-bounds included) and gaps (0.5),
/// channel 1 keys (1.0) and health orbs (0.5), channel 2 locked doors (0.5)
/// and the exit (1.0), channel 3 the theme as a constant.
///
/// With `retro` the first two rows are overwritten in every channel: row 0
/// one-hot encodes the key count in channel 0, row 1 is a fill bar of the
/// remaining-time fraction in channel 0. The vector fields are filled either
/// way.
pub fn render_observation(state: &EnvState, retro: bool) -> Observation {
    let n = state.config.window;
    let half = (n / 2) as i64;
    let layout = &state.layout;
    let (fr, fc) = state.agent_heading.delta();
    let (rr, rc) = state.agent_heading.right().delta();
    let (ar, ac) = (state.agent_cell.0 as i64, state.agent_cell.1 as i64);
    let theme = theme_value(layout.theme_id);

    let mut pixels = vec![0.0; NUM_CHANNELS * n * n];
    let at = |c: usize, i: usize, j: usize| (c * n + i) * n + j;
    for i in 0..n {
        let forward = half - i as i64;
        for j in 0..n {
            let right = j as i64 - half;
            let r = ar + forward * fr + right * rr;
            let c = ac + forward * fc + right * rc;
            match layout.effective_cell(r, c, state.collected) {
                None | Some(Cell::Wall) => pixels[at(WALL, i, j)] = 1.0,
                Some(Cell::Gap) => pixels[at(WALL, i, j)] = 0.5,
                Some(Cell::Key) => pixels[at(ITEM, i, j)] = 1.0,
                Some(Cell::HealthOrb) => pixels[at(ITEM, i, j)] = 0.5,
                Some(Cell::LockedDoor) => pixels[at(DOOR_EXIT, i, j)] = 0.5,
                Some(Cell::Exit) => pixels[at(DOOR_EXIT, i, j)] = 1.0,
                Some(Cell::Empty) | Some(Cell::Start) => {}
            }
            pixels[at(THEME, i, j)] = theme;
        }
    }

    let fraction = state.remaining_time_fraction();
    if retro {
        for c in 0..NUM_CHANNELS {
            for i in 0..2 {
                for j in 0..n {
                    pixels[at(c, i, j)] = 0.0;
                }
            }
        }
        pixels[at(WALL, 0, state.keys_held.min(state.config.max_keys))] = 1.0;
        for j in 0..time_bar_cells(fraction, n) {
            pixels[at(WALL, 1, j)] = 1.0;
        }
    }

    Observation {
        channels: NUM_CHANNELS,
        height: n,
        width: n,
        pixels,
        remaining_time_fraction: fraction,
        keys_held: state.keys_held,
    }
}

fn theme_value(theme_id: u8) -> f64 {
    0.5 * f64::from(theme_id)
}

/// Number of filled cells in the retro time bar.
pub(crate) fn time_bar_cells(fraction: f64, width: usize) -> usize {
    ((fraction.clamp(0.0, 1.0) * width as f64).round() as usize).min(width)
}

/// Plain-text dump of a freshly generated floor, one character per cell.
pub fn dump_layout(seed: u64, floor: usize, config: &EnvConfig) -> Result<String> {
    let layout = generate_floor(seed, floor, config)?;
    Ok(format!(
        "seed {seed} floor {floor} theme {} time {} size {}x{}\n{}",
        layout.theme_id,
        layout.time_budget,
        layout.height,
        layout.width,
        layout.to_text()
    ))
}

/// Full-map view of the current floor with the agent drawn as an arrow.
pub fn render_text(state: &EnvState) -> String {
    let layout = &state.layout;
    let mut out = String::new();
    for r in 0..layout.height {
        for c in 0..layout.width {
            let ch = if (r, c) == state.agent_cell {
                match state.agent_heading {
                    Heading::N => '^',
                    Heading::E => '>',
                    Heading::S => 'v',
                    Heading::W => '<',
                }
            } else {
                layout.effective_cell(r as i64, c as i64, state.collected).map_or('#', Cell::glyph)
            };
            out.push(ch);
        }
        out.push('\n');
    }
    out
}
