//! MiniTower: a deterministic, seed-generated multi-floor grid tower.
//!
//! Each floor is a square grid generated from `(seed, floor_index)`. The agent
//! starts on the start cell with a per-floor time budget and has to reach the
//! exit. Later floors add locked doors (opened by keys found earlier on the
//! floor), gap rows that can only be crossed with a forward jump, and a health
//! orb that extends the remaining time.
//!
//! The agent perceives an egocentric window rotated so that its heading points
//! up, plus a vector observation of remaining-time fraction and key count.

mod generate;
mod render;
mod solver;

pub use generate::generate_floor;
pub use render::{dump_layout, render_observation, render_text};
pub use solver::solve;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NUM_CHANNELS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Move {
    None,
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Lateral {
    None,
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rotate {
    None,
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Jump {
    None,
    Jump,
}

/// One element of the 3x3x3x2 factored action space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FactoredAction {
    pub mv: Move,
    pub lateral: Lateral,
    pub rotate: Rotate,
    pub jump: Jump,
}

impl FactoredAction {
    pub const NOOP: FactoredAction =
        FactoredAction { mv: Move::None, lateral: Lateral::None, rotate: Rotate::None, jump: Jump::None };

    pub const MOVES: [Move; 3] = [Move::None, Move::Forward, Move::Backward];
    pub const LATERALS: [Lateral; 3] = [Lateral::None, Lateral::Left, Lateral::Right];
    pub const ROTATES: [Rotate; 3] = [Rotate::None, Rotate::Left, Rotate::Right];
    pub const JUMPS: [Jump; 2] = [Jump::None, Jump::Jump];

    pub const fn new(mv: Move, lateral: Lateral, rotate: Rotate, jump: Jump) -> Self {
        FactoredAction { mv, lateral, rotate, jump }
    }

    pub const fn with_move(mv: Move) -> Self {
        FactoredAction { mv, ..Self::NOOP }
    }

    pub const fn with_rotate(rotate: Rotate) -> Self {
        FactoredAction { rotate, ..Self::NOOP }
    }

    pub const fn jump_forward() -> Self {
        FactoredAction { mv: Move::Forward, jump: Jump::Jump, ..Self::NOOP }
    }

    /// All 54 factored actions, move-major, jump last.
    pub fn all() -> Vec<FactoredAction> {
        let mut out = Vec::with_capacity(54);
        for mv in Self::MOVES {
            for lateral in Self::LATERALS {
                for rotate in Self::ROTATES {
                    for jump in Self::JUMPS {
                        out.push(FactoredAction { mv, lateral, rotate, jump });
                    }
                }
            }
        }
        out
    }

    /// True when the jump component actually has an effect.
    pub fn is_effective_jump(&self) -> bool {
        self.jump == Jump::Jump && self.mv == Move::Forward
    }
}

impl std::fmt::Display for FactoredAction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mv = match self.mv {
            Move::None => "none",
            Move::Forward => "forward",
            Move::Backward => "backward",
        };
        let lat = match self.lateral {
            Lateral::None => "none",
            Lateral::Left => "left",
            Lateral::Right => "right",
        };
        let rot = match self.rotate {
            Rotate::None => "none",
            Rotate::Left => "left",
            Rotate::Right => "right",
        };
        let jump = match self.jump {
            Jump::None => "none",
            Jump::Jump => "jump",
        };
        write!(f, "(move={mv}, lateral={lat}, rotate={rot}, jump={jump})")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cell {
    Empty,
    Wall,
    Gap,
    Key,
    LockedDoor,
    HealthOrb,
    Exit,
    Start,
}

impl Cell {
    pub fn glyph(self) -> char {
        match self {
            Cell::Empty => '.',
            Cell::Wall => '#',
            Cell::Gap => '~',
            Cell::Key => 'k',
            Cell::LockedDoor => 'D',
            Cell::HealthOrb => '+',
            Cell::Exit => 'E',
            Cell::Start => 'S',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Heading {
    N,
    E,
    S,
    W,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::N, Heading::E, Heading::S, Heading::W];

    /// (row, col) delta of one step forward. Row 0 is the top of the grid.
    pub fn delta(self) -> (i64, i64) {
        match self {
            Heading::N => (-1, 0),
            Heading::E => (0, 1),
            Heading::S => (1, 0),
            Heading::W => (0, -1),
        }
    }

    pub fn right(self) -> Heading {
        match self {
            Heading::N => Heading::E,
            Heading::E => Heading::S,
            Heading::S => Heading::W,
            Heading::W => Heading::N,
        }
    }

    pub fn left(self) -> Heading {
        self.right().right().right()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    fn rotated(self, rotate: Rotate) -> Heading {
        match rotate {
            Rotate::None => self,
            Rotate::Left => self.left(),
            Rotate::Right => self.right(),
        }
    }
}

/// Environment configuration. Defaults reproduce the shipped difficulty
/// schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    /// Reaching this floor index ends the episode.
    pub num_floors: usize,
    pub base_side: usize,
    pub max_side: usize,
    /// Side of the square egocentric observation window (odd).
    pub window: usize,
    pub base_time_budget: u32,
    pub time_budget_per_floor: u32,
    pub health_time_bonus: u32,
    pub max_keys: usize,
    /// Embed keys and time into the top rows of the pixel observation.
    pub retro: bool,
    pub generation_attempts: usize,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            num_floors: 25,
            base_side: 5,
            max_side: 15,
            window: 9,
            base_time_budget: 300,
            time_budget_per_floor: 50,
            health_time_bonus: 50,
            max_keys: 5,
            retro: false,
            generation_attempts: 200,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_floors == 0 || self.num_floors > 25 {
            return Err(Error::Config(format!("num_floors must be in 1..=25, got {}", self.num_floors)));
        }
        if self.window.is_multiple_of(2) || self.window < self.max_keys + 1 {
            return Err(Error::Config(format!("window must be odd and at least max_keys + 1, got {}", self.window)));
        }
        if self.base_side < 5 || self.max_side < self.base_side {
            return Err(Error::Config("grid side must be at least 5 and max_side >= base_side".into()));
        }
        if self.base_time_budget == 0 {
            return Err(Error::Config("time budget must be positive".into()));
        }
        Ok(())
    }

    pub fn side_for_floor(&self, floor: usize) -> usize {
        (self.base_side + floor).min(self.max_side)
    }

    pub fn time_budget_for_floor(&self, floor: usize) -> u32 {
        self.base_time_budget + self.time_budget_per_floor * floor as u32
    }

    /// Pixel observation shape `(C, H, W)`.
    pub fn observation_shape(&self) -> (usize, usize, usize) {
        (NUM_CHANNELS, self.window, self.window)
    }
}

/// A generated floor. `items` lists the positions of keys, doors and orbs; an
/// item's index is its bit in [`EnvState::collected`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FloorLayout {
    pub floor_index: usize,
    pub width: usize,
    pub height: usize,
    pub grid: Vec<Cell>,
    pub time_budget: u32,
    pub theme_id: u8,
    pub start: (usize, usize),
    pub start_heading: Heading,
    pub exit: (usize, usize),
    pub items: Vec<(usize, usize)>,
}

impl FloorLayout {
    pub fn cell(&self, row: usize, col: usize) -> Cell {
        self.grid[row * self.width + col]
    }

    pub fn cell_at(&self, row: i64, col: i64) -> Option<Cell> {
        if row < 0 || col < 0 || row >= self.height as i64 || col >= self.width as i64 {
            None
        } else {
            Some(self.cell(row as usize, col as usize))
        }
    }

    pub fn count(&self, kind: Cell) -> usize {
        self.grid.iter().filter(|&&c| c == kind).count()
    }

    pub fn item_index(&self, row: usize, col: usize) -> Option<usize> {
        self.items.iter().position(|&p| p == (row, col))
    }

    /// Cell as seen by an agent that has already collected the items in `mask`.
    pub fn effective_cell(&self, row: i64, col: i64, mask: u32) -> Option<Cell> {
        let cell = self.cell_at(row, col)?;
        match cell {
            Cell::Key | Cell::LockedDoor | Cell::HealthOrb => {
                let idx = self.item_index(row as usize, col as usize).expect("item cell is indexed");
                if mask & (1 << idx) != 0 {
                    Some(Cell::Empty)
                } else {
                    Some(cell)
                }
            }
            other => Some(other),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity((self.width + 1) * self.height);
        for r in 0..self.height {
            for c in 0..self.width {
                s.push(self.cell(r, c).glyph());
            }
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    FloorComplete,
    PuzzleComplete,
    HealthPickup,
    Step,
    GameOver,
}

/// Exactly one event is emitted per environment step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawEvent {
    pub kind: EventKind,
    /// For floor completions this is the fraction left on the completed
    /// floor, before the budget is replenished.
    pub remaining_time_fraction: f64,
}

/// Egocentric pixel tensor `(C, H, W)` in row-major order plus the vector
/// fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<f64>,
    pub remaining_time_fraction: f64,
    pub keys_held: usize,
}

impl Observation {
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn pixel(&self, c: usize, row: usize, col: usize) -> f64 {
        self.pixels[(c * self.height + row) * self.width + col]
    }
}

/// What entering a cell does.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Entry {
    Blocked,
    Free,
    Key(usize),
    Door(usize),
    Orb(usize),
    Exit,
}

pub(crate) fn entry_effect(layout: &FloorLayout, mask: u32, keys_held: usize, row: i64, col: i64) -> Entry {
    match layout.effective_cell(row, col, mask) {
        None | Some(Cell::Wall) | Some(Cell::Gap) => Entry::Blocked,
        Some(Cell::Empty) | Some(Cell::Start) => Entry::Free,
        Some(Cell::Exit) => Entry::Exit,
        Some(Cell::Key) => Entry::Key(layout.item_index(row as usize, col as usize).unwrap()),
        Some(Cell::HealthOrb) => Entry::Orb(layout.item_index(row as usize, col as usize).unwrap()),
        Some(Cell::LockedDoor) => {
            if keys_held > 0 {
                Entry::Door(layout.item_index(row as usize, col as usize).unwrap())
            } else {
                Entry::Blocked
            }
        }
    }
}

/// Applies the movement rules: translation relative to heading (a forward
/// jump clears one gap cell; other jump combinations act as if jump were
/// absent), then rotation. Returns the new cell, heading and what was
/// entered (`Free` when the agent did not move).
pub(crate) fn resolve_move(
    layout: &FloorLayout,
    mask: u32,
    keys_held: usize,
    pos: (usize, usize),
    heading: Heading,
    action: FactoredAction,
) -> ((usize, usize), Heading, Entry) {
    let (fr, fc) = heading.delta();
    let (rr, rc) = heading.right().delta();
    let (r0, c0) = (pos.0 as i64, pos.1 as i64);

    let target = if action.is_effective_jump() {
        let ahead = (r0 + fr, c0 + fc);
        if layout.effective_cell(ahead.0, ahead.1, mask) == Some(Cell::Gap) {
            Some((r0 + 2 * fr, c0 + 2 * fc))
        } else {
            Some(ahead)
        }
    } else {
        let m = match action.mv {
            Move::None => 0,
            Move::Forward => 1,
            Move::Backward => -1,
        };
        let l = match action.lateral {
            Lateral::None => 0,
            Lateral::Left => -1,
            Lateral::Right => 1,
        };
        if m == 0 && l == 0 {
            None
        } else {
            Some((r0 + m * fr + l * rr, c0 + m * fc + l * rc))
        }
    };

    let (new_pos, entry) = match target {
        None => (pos, Entry::Free),
        Some((tr, tc)) => match entry_effect(layout, mask, keys_held, tr, tc) {
            Entry::Blocked => (pos, Entry::Blocked),
            e => ((tr as usize, tc as usize), e),
        },
    };
    (new_pos, heading.rotated(action.rotate), entry)
}

/// Full simulator state of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub config: EnvConfig,
    pub seed: u64,
    pub floor: usize,
    pub layout: FloorLayout,
    pub agent_cell: (usize, usize),
    pub agent_heading: Heading,
    pub keys_held: usize,
    pub remaining_time: u32,
    pub episode_done: bool,
    /// Bit `i` set once `layout.items[i]` has been picked up or opened.
    pub collected: u32,
    pub floors_completed: usize,
    pub puzzles_completed: usize,
}

/// Result of one [`EnvState::step`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub event: RawEvent,
    pub raw_reward: f64,
    pub done: bool,
    pub observation: Observation,
}

impl EnvState {
    /// Places the agent on the start cell of `(seed, starting_floor)`.
    pub fn reset(seed: u64, starting_floor: usize, config: &EnvConfig) -> Result<(EnvState, Observation)> {
        config.validate()?;
        if starting_floor >= config.num_floors {
            return Err(Error::Contract(format!("starting floor {starting_floor} outside 0..{}", config.num_floors)));
        }
        let layout = generate_floor(seed, starting_floor, config)?;
        let state = EnvState {
            config: config.clone(),
            seed,
            floor: starting_floor,
            agent_cell: layout.start,
            agent_heading: layout.start_heading,
            keys_held: 0,
            remaining_time: layout.time_budget,
            episode_done: false,
            collected: 0,
            floors_completed: 0,
            puzzles_completed: 0,
            layout,
        };
        let obs = render_observation(&state, config.retro);
        Ok((state, obs))
    }

    pub fn remaining_time_fraction(&self) -> f64 {
        f64::from(self.remaining_time) / f64::from(self.layout.time_budget)
    }

    /// Advances one step. Raw rewards are 1.0 on floor completion, 0.1 on a
    /// puzzle (key pickup or door opening) and 0.0 otherwise.
    pub fn step(&mut self, action: FactoredAction) -> Result<StepOutcome> {
        if self.episode_done {
            return Err(Error::Contract("step called on a finished episode".into()));
        }
        let (pos, heading, entry) =
            resolve_move(&self.layout, self.collected, self.keys_held, self.agent_cell, self.agent_heading, action);
        self.agent_cell = pos;
        self.agent_heading = heading;

        let mut kind = EventKind::Step;
        match entry {
            Entry::Key(i) => {
                self.collected |= 1 << i;
                self.keys_held = (self.keys_held + 1).min(self.config.max_keys);
                kind = EventKind::PuzzleComplete;
            }
            Entry::Door(i) => {
                self.collected |= 1 << i;
                self.keys_held -= 1;
                kind = EventKind::PuzzleComplete;
            }
            Entry::Orb(i) => {
                self.collected |= 1 << i;
                self.remaining_time =
                    (self.remaining_time + self.config.health_time_bonus).min(self.layout.time_budget + 1);
                kind = EventKind::HealthPickup;
            }
            Entry::Exit => kind = EventKind::FloorComplete,
            Entry::Free | Entry::Blocked => {}
        }

        self.remaining_time = self.remaining_time.saturating_sub(1);
        let fraction = self.remaining_time_fraction();

        let (kind, raw_reward) = if kind == EventKind::FloorComplete {
            self.floors_completed += 1;
            self.floor += 1;
            if self.floor >= self.config.num_floors {
                self.episode_done = true;
            } else {
                self.layout = generate_floor(self.seed, self.floor, &self.config)?;
                self.agent_cell = self.layout.start;
                self.agent_heading = self.layout.start_heading;
                self.remaining_time = self.layout.time_budget;
                self.collected = 0;
            }
            (EventKind::FloorComplete, 1.0)
        } else if self.remaining_time == 0 {
            self.episode_done = true;
            (EventKind::GameOver, 0.0)
        } else if kind == EventKind::PuzzleComplete {
            self.puzzles_completed += 1;
            (kind, 0.1)
        } else {
            (kind, 0.0)
        };

        Ok(StepOutcome {
            event: RawEvent { kind, remaining_time_fraction: fraction },
            raw_reward,
            done: self.episode_done,
            observation: render_observation(self, self.config.retro),
        })
    }
}

/// A single-agent environment driven by factored actions. MiniTower is the
/// only implementation; the trait exists so that other simulators can be
/// bridged in.
pub trait Environment {
    fn reset(&mut self, seed: u64, starting_floor: usize) -> Result<Observation>;
    fn step(&mut self, action: FactoredAction) -> Result<StepOutcome>;
    fn observation_shape(&self) -> (usize, usize, usize);
    fn num_floors(&self) -> usize;
    /// Capacity of the key counter in the vector observation.
    fn max_keys(&self) -> usize;
    /// Current floor index (floors completed since a floor-0 reset).
    fn floor(&self) -> usize;
    /// Seed the current episode runs on, if any.
    fn seed(&self) -> Option<u64>;
}

#[derive(Debug, Clone)]
pub struct MiniTower {
    config: EnvConfig,
    state: Option<EnvState>,
}

impl MiniTower {
    pub fn new(config: EnvConfig) -> Self {
        MiniTower { config, state: None }
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn state(&self) -> Option<&EnvState> {
        self.state.as_ref()
    }

    pub fn from_state(state: EnvState) -> Self {
        MiniTower { config: state.config.clone(), state: Some(state) }
    }
}

impl Environment for MiniTower {
    fn reset(&mut self, seed: u64, starting_floor: usize) -> Result<Observation> {
        let (state, obs) = EnvState::reset(seed, starting_floor, &self.config)?;
        self.state = Some(state);
        Ok(obs)
    }

    fn step(&mut self, action: FactoredAction) -> Result<StepOutcome> {
        match self.state.as_mut() {
            Some(s) => s.step(action),
            None => Err(Error::Contract("step called before reset".into())),
        }
    }

    fn observation_shape(&self) -> (usize, usize, usize) {
        self.config.observation_shape()
    }

    fn num_floors(&self) -> usize {
        self.config.num_floors
    }

    fn max_keys(&self) -> usize {
        self.config.max_keys
    }

    fn floor(&self) -> usize {
        self.state.as_ref().map_or(0, |s| s.floor)
    }

    fn seed(&self) -> Option<u64> {
        self.state.as_ref().map(|s| s.seed)
    }
}
