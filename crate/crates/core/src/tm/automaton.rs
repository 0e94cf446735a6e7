//! The two-action learning automaton that governs a single literal.

use serde::{Deserialize, Serialize};

/// A two-action Tsetlin Automaton with `2N` states.
///
/// States `1..=N` select the "exclude" action, states `N+1..=2N` select
/// "include". Feedback moves the state one step at a time; the state never
/// leaves `[1, 2N]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TsetlinAutomaton {
    state: u16,
}

impl TsetlinAutomaton {
    /// Fresh automaton on the exclude side, one step from the boundary.
    pub fn new(states_per_action: u16) -> Self {
        TsetlinAutomaton {
            state: states_per_action,
        }
    }

    pub fn from_state(state: u16) -> Self {
        TsetlinAutomaton { state }
    }

    pub fn state(self) -> u16 {
        self.state
    }

    /// Whether the automaton currently includes its literal in the clause.
    #[inline(always)]
    pub fn includes(self, states_per_action: u16) -> bool {
        self.state > states_per_action
    }

    /// One step toward the include side, capped at `2N`.
    #[inline(always)]
    pub fn step_toward_include(&mut self, states_per_action: u16) {
        if self.state < 2 * states_per_action {
            self.state += 1;
        }
    }

    /// One step toward the exclude side, floored at `1`.
    #[inline(always)]
    pub fn step_toward_exclude(&mut self) {
        if self.state > 1 {
            self.state -= 1;
        }
    }

    pub fn in_bounds(self, states_per_action: u16) -> bool {
        self.state >= 1 && self.state <= 2 * states_per_action
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn starts_excluding() {
        let a = TsetlinAutomaton::new(128);
        assert!(!a.includes(128));
        assert_eq!(a.state(), 128);
    }

    #[test]
    fn one_step_crosses_boundary() {
        let mut a = TsetlinAutomaton::new(4);
        a.step_toward_include(4);
        assert!(a.includes(4));
        a.step_toward_exclude();
        assert!(!a.includes(4));
    }

    #[test]
    fn saturates_at_both_ends() {
        let mut a = TsetlinAutomaton::from_state(1);
        a.step_toward_exclude();
        assert_eq!(a.state(), 1);

        let mut a = TsetlinAutomaton::from_state(8);
        a.step_toward_include(4);
        assert_eq!(a.state(), 8);
    }
}
