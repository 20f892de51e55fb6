use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minitower::{FactoredAction, Jump, Move, Rotate};

/// The reduced action sets compared in the action-set study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActionSetId {
    A6,
    A8,
    A20,
    A27,
    A54,
}

impl ActionSetId {
    pub const ALL: [ActionSetId; 5] =
        [ActionSetId::A6, ActionSetId::A8, ActionSetId::A20, ActionSetId::A27, ActionSetId::A54];

    pub fn size(self) -> usize {
        match self {
            ActionSetId::A6 => 6,
            ActionSetId::A8 => 8,
            ActionSetId::A20 => 20,
            ActionSetId::A27 => 27,
            ActionSetId::A54 => 54,
        }
    }
}

impl fmt::Display for ActionSetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "A{}", self.size())
    }
}

impl FromStr for ActionSetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s.trim().trim_start_matches(['A', 'a']);
        match digits {
            "6" => Ok(ActionSetId::A6),
            "8" => Ok(ActionSetId::A8),
            "20" => Ok(ActionSetId::A20),
            "27" => Ok(ActionSetId::A27),
            "54" => Ok(ActionSetId::A54),
            _ => Err(Error::Config(format!("unknown action set {s:?}; expected one of A6, A8, A20, A27, A54"))),
        }
    }
}

/// Maps a network output index to a factored environment action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionTable {
    pub set_id: ActionSetId,
    pub entries: Vec<FactoredAction>,
}

impl ActionTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> Result<FactoredAction> {
        apply_action(self, index)
    }

    pub fn position(&self, action: &FactoredAction) -> Option<usize> {
        self.entries.iter().position(|a| a == action)
    }
}

const FORWARD: FactoredAction = FactoredAction::with_move(Move::Forward);
const BACKWARD: FactoredAction = FactoredAction::with_move(Move::Backward);
const ROTATE_LEFT: FactoredAction = FactoredAction::with_rotate(Rotate::Left);
const ROTATE_RIGHT: FactoredAction = FactoredAction::with_rotate(Rotate::Right);
const JUMP_FORWARD: FactoredAction = FactoredAction::jump_forward();

/// Builds an action table. Orderings:
///
/// - A6: no-action, forward, rotate-left, rotate-right, jump+forward, backward.
/// - A8: A6 followed by forward+rotate-left, forward+rotate-right.
/// - A20: move {none, forward} x lateral x rotate (move-major, 18 entries),
///   then backward, then jump+forward.
/// - A27: move x lateral x rotate (move-major) with the all-none entry at
///   index 0 replaced by jump+forward.
/// - A54: the full product, move-major, jump last.
pub fn build_action_set(set_id: ActionSetId) -> ActionTable {
    let entries = match set_id {
        ActionSetId::A6 => vec![FactoredAction::NOOP, FORWARD, ROTATE_LEFT, ROTATE_RIGHT, JUMP_FORWARD, BACKWARD],
        ActionSetId::A8 => {
            let mut e = build_action_set(ActionSetId::A6).entries;
            e.push(FactoredAction { rotate: Rotate::Left, ..FORWARD });
            e.push(FactoredAction { rotate: Rotate::Right, ..FORWARD });
            e
        }
        ActionSetId::A20 => {
            let mut e = ground_moves(&[Move::None, Move::Forward]);
            e.push(BACKWARD);
            e.push(JUMP_FORWARD);
            e
        }
        ActionSetId::A27 => {
            let mut e = ground_moves(&FactoredAction::MOVES);
            e[0] = JUMP_FORWARD;
            e
        }
        ActionSetId::A54 => FactoredAction::all(),
    };
    ActionTable { set_id, entries }
}

fn ground_moves(moves: &[Move]) -> Vec<FactoredAction> {
    let mut out = Vec::new();
    for &mv in moves {
        for lateral in FactoredAction::LATERALS {
            for rotate in FactoredAction::ROTATES {
                out.push(FactoredAction::new(mv, lateral, rotate, Jump::None));
            }
        }
    }
    out
}

pub fn apply_action(table: &ActionTable, index: usize) -> Result<FactoredAction> {
    table.entries.get(index).copied().ok_or_else(|| {
        Error::Contract(format!("action index {index} out of range for {} ({} entries)", table.set_id, table.len()))
    })
}

/// `index -> factored tuple` listing for every table.
pub fn dump_action_tables() -> String {
    let mut out = String::new();
    for id in ActionSetId::ALL {
        let table = build_action_set(id);
        out.push_str(&format!("{id} ({} actions)\n", table.len()));
        for (i, a) in table.entries.iter().enumerate() {
            out.push_str(&format!("  {i:>2} -> {a}\n"));
        }
    }
    out
}
