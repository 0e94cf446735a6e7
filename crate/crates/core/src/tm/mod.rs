//! Multi-class Tsetlin Machine: clauses of two-action learning automata vote
//! for and against their class; training nudges the automata so the clamped
//! class scores move toward `+T` for the true class and `-T` for others.

mod automaton;
mod clause;
mod model;
mod train;

pub use automaton::TsetlinAutomaton;
pub use clause::{Clause, ClauseMode, Polarity};
pub use model::{argmax_lowest, BinarizedSample, TmParams, TsetlinModel, VoteVector};
pub use train::{EpochStats, TrainingTrace};
