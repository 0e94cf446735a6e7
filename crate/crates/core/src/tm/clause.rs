//! Conjunctive clauses over binarized literals.

use serde::{Deserialize, Serialize};

use super::automaton::TsetlinAutomaton;
use crate::error::{Error, Result};

/// Whether a clause adds to or subtracts from its class score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn sign(self) -> i32 {
        match self {
            Polarity::Positive => 1,
            Polarity::Negative => -1,
        }
    }
}

/// Clause evaluation convention for literal-free clauses.
///
/// A clause that includes no literals is vacuously true. During learning it
/// outputs 1 so fresh clauses receive feedback and start specializing; during
/// inference it outputs 0 so it never votes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClauseMode {
    Inference,
    Learning,
}

/// One propositional conjunction owned by a class.
///
/// `automata[i]` governs the positive literal `x_i` and `automata[d + i]`
/// governs the negated literal `¬x_i`, so the include/negate index sets are
/// disjoint by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    pub automata: Vec<TsetlinAutomaton>,
    pub polarity: Polarity,
    pub class_id: usize,
}

impl Clause {
    pub fn new(num_literals: usize, polarity: Polarity, class_id: usize, states_per_action: u16) -> Self {
        Clause {
            automata: vec![TsetlinAutomaton::new(states_per_action); 2 * num_literals],
            polarity,
            class_id,
        }
    }

    /// Number of input bits this clause expects.
    pub fn num_literals(&self) -> usize {
        self.automata.len() / 2
    }

    /// Indices of included positive literals and included negated literals.
    pub fn included_literals(&self, states_per_action: u16) -> (Vec<usize>, Vec<usize>) {
        let d = self.num_literals();
        let positive = (0..d)
            .filter(|&i| self.automata[i].includes(states_per_action))
            .collect();
        let negated = (0..d)
            .filter(|&i| self.automata[d + i].includes(states_per_action))
            .collect();
        (positive, negated)
    }

    /// Clause output on `bits`, with dimension checking.
    ///
    /// Returns 1 iff every included positive literal sees a 1 and every
    /// included negated literal sees a 0. Literal-free clauses follow the
    /// [`ClauseMode`] convention.
    pub fn evaluate(&self, bits: &[u8], mode: ClauseMode, states_per_action: u16) -> Result<bool> {
        if 2 * bits.len() != self.automata.len() {
            return Err(Error::Dimension(format!(
                "clause expects {} bits, sample has {}",
                self.num_literals(),
                bits.len()
            )));
        }
        Ok(self.fires(bits, mode, states_per_action))
    }

    /// Clause output without the dimension check; hot path for model-level
    /// loops that validate the sample once.
    #[inline]
    pub(crate) fn fires(&self, bits: &[u8], mode: ClauseMode, states_per_action: u16) -> bool {
        debug_assert_eq!(2 * bits.len(), self.automata.len());
        let d = bits.len();
        let mut any_included = false;
        for (i, &bit) in bits.iter().enumerate() {
            if self.automata[i].includes(states_per_action) {
                if bit == 0 {
                    return false;
                }
                any_included = true;
            }
            if self.automata[d + i].includes(states_per_action) {
                if bit == 1 {
                    return false;
                }
                any_included = true;
            }
        }
        any_included || mode == ClauseMode::Learning
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clause_with(d: usize, include_pos: &[usize], include_neg: &[usize], n: u16) -> Clause {
        let mut c = Clause::new(d, Polarity::Positive, 0, n);
        for &i in include_pos {
            c.automata[i] = TsetlinAutomaton::from_state(n + 1);
        }
        for &i in include_neg {
            c.automata[d + i] = TsetlinAutomaton::from_state(n + 1);
        }
        c
    }

    #[test]
    fn satisfied_conjunction_fires() {
        // includes {x_0}, negates {x_1}
        let c = clause_with(2, &[0], &[1], 128);
        assert!(c.evaluate(&[1, 0], ClauseMode::Inference, 128).unwrap());
    }

    #[test]
    fn violated_negation_blocks() {
        let c = clause_with(2, &[0], &[1], 128);
        assert!(!c.evaluate(&[1, 1], ClauseMode::Inference, 128).unwrap());
    }

    #[test]
    fn empty_clause_convention() {
        let c = Clause::new(3, Polarity::Positive, 0, 128);
        for bits in [[0, 0, 0], [1, 1, 1], [1, 0, 1]] {
            assert!(!c.evaluate(&bits, ClauseMode::Inference, 128).unwrap());
            assert!(c.evaluate(&bits, ClauseMode::Learning, 128).unwrap());
        }
    }

    #[test]
    fn dimension_mismatch_is_error() {
        let c = Clause::new(3, Polarity::Positive, 0, 128);
        assert!(c.evaluate(&[1, 0], ClauseMode::Inference, 128).is_err());
    }

    #[test]
    fn included_sets_are_disjoint_positions() {
        let c = clause_with(4, &[0, 2], &[1], 128);
        let (pos, neg) = c.included_literals(128);
        assert_eq!(pos, vec![0, 2]);
        assert_eq!(neg, vec![1]);
    }
}
