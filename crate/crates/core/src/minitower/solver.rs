use std::collections::VecDeque;

use super::{resolve_move, Cell, Entry, FactoredAction, FloorLayout, Heading};

/// Shortest action sequence from the start cell to the exit using only
/// `actions`, found by breadth-first search over `(cell, heading, keys and
/// doors collected)`. Returns indices into `actions`.
///
/// Health orbs are ignored; picking one up only ever adds time.
pub fn solve(layout: &FloorLayout, actions: &[FactoredAction]) -> Option<Vec<usize>> {
    let (h, w) = (layout.height, layout.width);
    let tracked: u32 = layout
        .items
        .iter()
        .enumerate()
        .filter(|(_, &(r, c))| matches!(layout.cell(r, c), Cell::Key | Cell::LockedDoor))
        .fold(0, |m, (i, _)| m | (1 << i));
    let key_mask: u32 = layout
        .items
        .iter()
        .enumerate()
        .filter(|(_, &(r, c))| layout.cell(r, c) == Cell::Key)
        .fold(0, |m, (i, _)| m | (1 << i));
    let door_mask = tracked & !key_mask;
    let n_masks = 1usize << layout.items.len();

    let index = |pos: (usize, usize), heading: Heading, mask: u32| {
        ((pos.0 * w + pos.1) * 4 + heading.index()) * n_masks + mask as usize
    };
    // Predecessor state and the action taken from it.
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; h * w * 4 * n_masks];
    let mut seen = vec![false; h * w * 4 * n_masks];

    let start = (layout.start, layout.start_heading, 0u32);
    let start_idx = index(start.0, start.1, start.2);
    seen[start_idx] = true;
    let mut queue = VecDeque::from([start]);

    while let Some((pos, heading, mask)) = queue.pop_front() {
        let here = index(pos, heading, mask);
        let keys = (mask & key_mask).count_ones() as usize - (mask & door_mask).count_ones() as usize;
        for (a, &action) in actions.iter().enumerate() {
            let (new_pos, new_heading, entry) = resolve_move(layout, mask, keys, pos, heading, action);
            if entry == Entry::Exit {
                let mut path = vec![a];
                let mut cur = here;
                while let Some((prev, act)) = parent[cur] {
                    path.push(act);
                    cur = prev;
                }
                path.reverse();
                return Some(path);
            }
            let new_mask = match entry {
                Entry::Key(i) | Entry::Door(i) => mask | (1 << i),
                _ => mask,
            } & tracked;
            let next = index(new_pos, new_heading, new_mask);
            if !seen[next] {
                seen[next] = true;
                parent[next] = Some((here, a));
                queue.push_back((new_pos, new_heading, new_mask));
            }
        }
    }
    None
}
