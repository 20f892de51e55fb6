use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Cell, EnvConfig, FloorLayout, Heading};
use crate::error::{Error, Result};

/// Locked doors on a floor.
pub(crate) fn door_count(floor: usize) -> usize {
    match floor {
        0..=1 => 0,
        2..=7 => 1,
        _ => 2,
    }
}

/// Full-width gap rows on a floor.
pub(crate) fn gap_row_count(floor: usize) -> usize {
    if floor < 4 {
        0
    } else {
        (1 + (floor - 4) / 4).min(3)
    }
}

pub(crate) fn orb_count(floor: usize) -> usize {
    usize::from(floor >= 3)
}

fn wall_density(floor: usize) -> f64 {
    0.15 + 0.01 * floor.min(10) as f64
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn floor_rng(seed: u64, floor: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(splitmix64(seed) ^ (floor as u64).wrapping_mul(0xA24B_AED4_963E_E407)))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Barrier {
    Door,
    Gaps,
}

/// Generates floor `floor_index` of tower `seed`. The result is a pure
/// function of its arguments.
///
/// Rows are split into regions by barrier rows: a wall row pierced by one
/// locked door, or a full row of gaps. The start sits in the bottom region,
/// the exit in the top one, and each door's key is placed in a region below
/// that door. Candidates are rejected until a breadth-first search confirms
/// the exit is reachable within the time budget.
pub fn generate_floor(seed: u64, floor_index: usize, config: &EnvConfig) -> Result<FloorLayout> {
    if floor_index >= config.num_floors {
        return Err(Error::Contract(format!("floor index {floor_index} outside 0..{}", config.num_floors)));
    }
    let side = config.side_for_floor(floor_index);
    let barriers = door_count(floor_index) + gap_row_count(floor_index);
    if side < 2 * barriers + 1 {
        return Err(Error::Config(format!(
            "grid side {side} too small for {barriers} barrier rows on floor {floor_index}"
        )));
    }
    let time_budget = config.time_budget_for_floor(floor_index);
    let mut rng = floor_rng(seed, floor_index);

    for _ in 0..config.generation_attempts {
        let layout = candidate(&mut rng, seed, floor_index, side, time_budget);
        if let Some(len) = shortest_path_len(&layout) {
            // Three actions per cell bounds a rotate-then-move policy.
            if 3 * len <= time_budget as usize {
                return Ok(layout);
            }
        }
    }
    Err(Error::GenerationFailed { seed, floor: floor_index, attempts: config.generation_attempts })
}

fn candidate(rng: &mut ChaCha8Rng, seed: u64, floor: usize, side: usize, time_budget: u32) -> FloorLayout {
    let (height, width) = (side, side);
    let mut grid = vec![Cell::Empty; height * width];

    let mut barriers: Vec<Barrier> = std::iter::repeat_n(Barrier::Door, door_count(floor))
        .chain(std::iter::repeat_n(Barrier::Gaps, gap_row_count(floor)))
        .collect();
    barriers.shuffle(rng);

    // Region sizes (bottom to top), each at least one row.
    let n_regions = barriers.len() + 1;
    let mut sizes = vec![1usize; n_regions];
    for _ in 0..(height - barriers.len() - n_regions) {
        let i = rng.gen_range(0..n_regions);
        sizes[i] += 1;
    }

    // Row spans: region i covers rows [lo, hi], barrier i sits just above it.
    let mut region_rows = Vec::with_capacity(n_regions);
    let mut barrier_rows = Vec::with_capacity(barriers.len());
    let mut bottom = height;
    for (i, &size) in sizes.iter().enumerate() {
        let hi = bottom - 1;
        let lo = bottom - size;
        region_rows.push((lo, hi));
        bottom = lo;
        if i < barriers.len() {
            barrier_rows.push(bottom - 1);
            bottom -= 1;
        }
    }

    let mut protected = vec![false; height * width];
    let mut doors = Vec::new();
    for (b, &row) in barriers.iter().zip(&barrier_rows) {
        match b {
            Barrier::Door => {
                let door_col = rng.gen_range(0..width);
                for c in 0..width {
                    grid[row * width + c] = Cell::Wall;
                }
                grid[row * width + door_col] = Cell::LockedDoor;
                doors.push((row, door_col));
                if row + 1 < height {
                    protected[(row + 1) * width + door_col] = true;
                }
                if row > 0 {
                    protected[(row - 1) * width + door_col] = true;
                }
            }
            Barrier::Gaps => {
                for c in 0..width {
                    grid[row * width + c] = Cell::Gap;
                }
            }
        }
    }

    let (_, start_hi) = region_rows[0];
    let start = (start_hi, rng.gen_range(0..width));
    let (exit_lo, _) = region_rows[n_regions - 1];
    let exit = (exit_lo, rng.gen_range(0..width));
    grid[start.0 * width + start.1] = Cell::Start;
    grid[exit.0 * width + exit.1] = Cell::Exit;
    protected[start.0 * width + start.1] = true;
    protected[exit.0 * width + exit.1] = true;

    let density = wall_density(floor);
    for &(lo, hi) in &region_rows {
        for r in lo..=hi {
            for c in 0..width {
                let i = r * width + c;
                if grid[i] == Cell::Empty && !protected[i] && rng.gen_bool(density) {
                    grid[i] = Cell::Wall;
                }
            }
        }
    }

    // Keys first (ordered by door from the bottom), then doors, then orbs.
    let mut items = Vec::new();
    let door_regions: Vec<usize> =
        barriers.iter().enumerate().filter(|(_, b)| **b == Barrier::Door).map(|(i, _)| i).collect();
    for &barrier_idx in &door_regions {
        let region = rng.gen_range(0..=barrier_idx);
        if let Some(p) = random_empty(rng, &grid, width, region_rows[region]) {
            grid[p.0 * width + p.1] = Cell::Key;
            items.push(p);
        }
    }
    items.extend(doors.iter().copied());
    for _ in 0..orb_count(floor) {
        let region = rng.gen_range(0..n_regions);
        if let Some(p) = random_empty(rng, &grid, width, region_rows[region]) {
            grid[p.0 * width + p.1] = Cell::HealthOrb;
            items.push(p);
        }
    }

    let start_heading = Heading::ALL[rng.gen_range(0..4)];
    FloorLayout {
        floor_index: floor,
        width,
        height,
        grid,
        time_budget,
        theme_id: (seed % 3) as u8,
        start,
        start_heading,
        exit,
        items,
    }
}

fn random_empty(rng: &mut ChaCha8Rng, grid: &[Cell], width: usize, rows: (usize, usize)) -> Option<(usize, usize)> {
    let cells: Vec<(usize, usize)> = (rows.0..=rows.1)
        .flat_map(|r| (0..width).map(move |c| (r, c)))
        .filter(|&(r, c)| grid[r * width + c] == Cell::Empty)
        .collect();
    cells.choose(rng).copied()
}

/// Heading-free breadth-first search over `(cell, collected items)` using
/// four-way moves and forward jumps over single gap cells. Any such path can
/// be followed with rotate and forward actions alone.
pub(crate) fn shortest_path_len(layout: &FloorLayout) -> Option<usize> {
    let (h, w) = (layout.height, layout.width);
    let key_mask: u32 = layout
        .items
        .iter()
        .enumerate()
        .filter(|(_, &(r, c))| layout.cell(r, c) == Cell::Key)
        .fold(0, |m, (i, _)| m | (1 << i));
    let door_mask: u32 = layout
        .items
        .iter()
        .enumerate()
        .filter(|(_, &(r, c))| layout.cell(r, c) == Cell::LockedDoor)
        .fold(0, |m, (i, _)| m | (1 << i));
    let tracked = key_mask | door_mask;
    let n_masks = 1usize << layout.items.len();

    let mut dist = vec![usize::MAX; h * w * n_masks];
    let idx = |r: usize, c: usize, m: u32| (r * w + c) * n_masks + m as usize;
    let mut queue = VecDeque::new();
    dist[idx(layout.start.0, layout.start.1, 0)] = 0;
    queue.push_back((layout.start, 0u32));

    while let Some(((r, c), mask)) = queue.pop_front() {
        let d = dist[idx(r, c, mask)];
        if (r, c) == layout.exit {
            return Some(d);
        }
        let keys = (mask & key_mask).count_ones() as usize - (mask & door_mask).count_ones() as usize;
        for heading in Heading::ALL {
            let (dr, dc) = heading.delta();
            let (mut tr, mut tc) = (r as i64 + dr, c as i64 + dc);
            if layout.effective_cell(tr, tc, mask) == Some(Cell::Gap) {
                tr += dr;
                tc += dc;
            }
            let new_mask = match super::entry_effect(layout, mask, keys, tr, tc) {
                super::Entry::Blocked => continue,
                super::Entry::Key(i) | super::Entry::Door(i) => mask | (1 << i),
                _ => mask,
            } & tracked;
            let (tr, tc) = (tr as usize, tc as usize);
            let j = idx(tr, tc, new_mask);
            if dist[j] == usize::MAX {
                dist[j] = d + 1;
                queue.push_back(((tr, tc), new_mask));
            }
        }
    }
    None
}
