//! The multi-class Tsetlin Machine model: clause banks, scoring, prediction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::clause::{Clause, ClauseMode, Polarity};
use crate::error::{Error, Result};

/// A binarized input: the bit vector plus its class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinarizedSample {
    /// Bit values, each exactly 0 or 1.
    pub bits: Vec<u8>,
    /// Class index in `[0, C)`.
    pub label: usize,
}

impl BinarizedSample {
    pub fn new(bits: Vec<u8>, label: usize) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::Usage("binarized sample has zero bits".into()));
        }
        if let Some(bad) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::Data(format!("binarized sample contains non-binary value {bad}")));
        }
        Ok(BinarizedSample { bits, label })
    }
}

/// Training hyperparameters of the machine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TmParams {
    /// Clauses per class (`m`); half positive, half negative polarity.
    pub clauses_per_class: usize,
    /// Voting threshold `T` clamping class scores during feedback.
    pub threshold: u32,
    /// Specificity `s` controlling include/exclude feedback balance.
    pub specificity: f64,
    /// States per automaton action (`N`); states live in `[1, 2N]`.
    pub states_per_action: u16,
}

impl TmParams {
    pub fn validate(&self) -> Result<()> {
        if self.clauses_per_class == 0 || self.clauses_per_class % 2 != 0 {
            return Err(Error::Usage(format!(
                "clauses per class must be a positive even number, got {}",
                self.clauses_per_class
            )));
        }
        if self.threshold < 1 {
            return Err(Error::Usage("threshold T must be >= 1".into()));
        }
        if !(self.specificity > 1.0) {
            return Err(Error::Usage(format!(
                "specificity s must be > 1, got {}",
                self.specificity
            )));
        }
        if self.states_per_action == 0 {
            return Err(Error::Usage("states per action must be >= 1".into()));
        }
        Ok(())
    }
}

impl Default for TmParams {
    fn default() -> Self {
        TmParams {
            clauses_per_class: 100,
            threshold: 10,
            specificity: 2.0,
            states_per_action: 128,
        }
    }
}

/// Unclamped class scores for one input, indexed by class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteVector {
    pub votes: Vec<i32>,
}

impl VoteVector {
    /// Argmax with ties broken by the lowest class index.
    pub fn argmax(&self) -> usize {
        argmax_lowest(&self.votes)
    }
}

/// Index of the maximum value, lowest index on ties.
pub fn argmax_lowest(votes: &[i32]) -> usize {
    let mut best = 0;
    for (i, &v) in votes.iter().enumerate().skip(1) {
        if v > votes[best] {
            best = i;
        }
    }
    best
}

/// Multi-class Tsetlin Machine: `C` classes × `m` clauses over `d` literals.
///
/// Within each class block the first `m/2` clauses have positive polarity and
/// the last `m/2` negative, matching the split of the class-score sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsetlinModel {
    pub(crate) clauses: Vec<Clause>,
    num_classes: usize,
    params: TmParams,
    rng_seed: u64,
    /// One name per binarized literal, in bit order; fixes `d`.
    literal_names: Vec<String>,
    /// Training-set firing counts per clause, from the final fitted epoch.
    pub(crate) fire_counts: Vec<u64>,
}

impl TsetlinModel {
    pub fn new(num_classes: usize, literal_names: Vec<String>, params: TmParams, rng_seed: u64) -> Result<Self> {
        params.validate()?;
        if num_classes < 2 {
            return Err(Error::Usage(format!(
                "need at least 2 classes, got {num_classes}"
            )));
        }
        if literal_names.is_empty() {
            return Err(Error::Usage("literal name list is empty".into()));
        }
        let d = literal_names.len();
        let m = params.clauses_per_class;
        let mut clauses = Vec::with_capacity(num_classes * m);
        for class_id in 0..num_classes {
            for j in 0..m {
                let polarity = if j < m / 2 { Polarity::Positive } else { Polarity::Negative };
                clauses.push(Clause::new(d, polarity, class_id, params.states_per_action));
            }
        }
        let fire_counts = vec![0; clauses.len()];
        Ok(TsetlinModel {
            clauses,
            num_classes,
            params,
            rng_seed,
            literal_names,
            fire_counts,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_literals(&self) -> usize {
        self.literal_names.len()
    }

    pub fn params(&self) -> &TmParams {
        &self.params
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn literal_names(&self) -> &[String] {
        &self.literal_names
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn fire_counts(&self) -> &[u64] {
        &self.fire_counts
    }

    /// Clause index range owned by `class`.
    pub fn clause_range(&self, class: usize) -> std::ops::Range<usize> {
        let m = self.params.clauses_per_class;
        class * m..(class + 1) * m
    }

    /// The `j`-th clause of `class`.
    pub fn clause(&self, class: usize, j: usize) -> &Clause {
        &self.clauses[class * self.params.clauses_per_class + j]
    }

    pub(crate) fn check_bits(&self, bits: &[u8]) -> Result<()> {
        if bits.len() != self.num_literals() {
            return Err(Error::Dimension(format!(
                "model expects {} bits, sample has {}",
                self.num_literals(),
                bits.len()
            )));
        }
        Ok(())
    }

    /// Signed clause-vote sum for one class: positive-polarity firings minus
    /// negative-polarity firings.
    pub fn class_score(&self, bits: &[u8], class: usize) -> Result<i32> {
        self.check_bits(bits)?;
        if class >= self.num_classes {
            return Err(Error::Usage(format!(
                "class {class} out of range for {} classes",
                self.num_classes
            )));
        }
        Ok(self.class_vote_sum(bits, class, ClauseMode::Inference))
    }

    pub(crate) fn class_vote_sum(&self, bits: &[u8], class: usize, mode: ClauseMode) -> i32 {
        let n = self.params.states_per_action;
        self.clauses[self.clause_range(class)]
            .iter()
            .map(|c| if c.fires(bits, mode, n) { c.polarity.sign() } else { 0 })
            .sum()
    }

    /// Unclamped scores for every class, in class order.
    pub fn vote_vector(&self, bits: &[u8]) -> Result<VoteVector> {
        self.check_bits(bits)?;
        let votes = (0..self.num_classes)
            .map(|c| self.class_vote_sum(bits, c, ClauseMode::Inference))
            .collect();
        Ok(VoteVector { votes })
    }

    /// Predicted class: argmax of the class scores, lowest index on ties.
    pub fn predict(&self, bits: &[u8]) -> Result<usize> {
        Ok(self.vote_vector(bits)?.argmax())
    }

    /// Predictions for a batch of samples, in input order.
    pub fn predict_batch(&self, samples: &[BinarizedSample]) -> Result<Vec<usize>> {
        for s in samples {
            self.check_bits(&s.bits)?;
        }
        Ok(samples
            .par_iter()
            .map(|s| self.vote_vector(&s.bits).expect("validated above").argmax())
            .collect())
    }

    /// Inference pass over `samples`: number of correct predictions plus
    /// per-clause firing counts.
    pub(crate) fn eval_pass(&self, samples: &[BinarizedSample]) -> (usize, Vec<u64>) {
        let n = self.params.states_per_action;
        samples
            .par_iter()
            .fold(
                || (0usize, vec![0u64; self.clauses.len()]),
                |(mut correct, mut fires), s| {
                    let mut votes = vec![0i32; self.num_classes];
                    for (ci, clause) in self.clauses.iter().enumerate() {
                        if clause.fires(&s.bits, ClauseMode::Inference, n) {
                            fires[ci] += 1;
                            votes[clause.class_id] += clause.polarity.sign();
                        }
                    }
                    if argmax_lowest(&votes) == s.label {
                        correct += 1;
                    }
                    (correct, fires)
                },
            )
            .reduce(
                || (0usize, vec![0u64; self.clauses.len()]),
                |(c1, mut f1), (c2, f2)| {
                    for (a, b) in f1.iter_mut().zip(f2) {
                        *a += b;
                    }
                    (c1 + c2, f1)
                },
            )
    }

    /// Accuracy of the model on labeled samples.
    pub fn accuracy(&self, samples: &[BinarizedSample]) -> Result<f64> {
        if samples.is_empty() {
            return Err(Error::Usage("cannot compute accuracy on an empty set".into()));
        }
        for s in samples {
            self.check_bits(&s.bits)?;
        }
        let (correct, _) = self.eval_pass(samples);
        Ok(correct as f64 / samples.len() as f64)
    }

    /// Rebuilds a model from persisted automaton states.
    ///
    /// `clause_states` is class-major (all clauses of class 0 first), each
    /// entry the `2d` states of one clause; polarity is implied by position
    /// (first `m/2` per class positive).
    pub fn restore(
        num_classes: usize,
        literal_names: Vec<String>,
        params: TmParams,
        rng_seed: u64,
        clause_states: Vec<Vec<u16>>,
        fire_counts: Vec<u64>,
    ) -> Result<Self> {
        let mut model = TsetlinModel::new(num_classes, literal_names, params, rng_seed)?;
        if clause_states.len() != model.clauses.len() {
            return Err(Error::ModelFormat(format!(
                "expected {} clause state rows, found {}",
                model.clauses.len(),
                clause_states.len()
            )));
        }
        if fire_counts.len() != model.clauses.len() {
            return Err(Error::ModelFormat(format!(
                "expected {} fire counts, found {}",
                model.clauses.len(),
                fire_counts.len()
            )));
        }
        let d = model.num_literals();
        let max_state = 2 * params.states_per_action;
        for (clause, states) in model.clauses.iter_mut().zip(clause_states) {
            if states.len() != 2 * d {
                return Err(Error::ModelFormat(format!(
                    "clause state row has {} entries, expected {}",
                    states.len(),
                    2 * d
                )));
            }
            if let Some(bad) = states.iter().find(|&&s| s < 1 || s > max_state) {
                return Err(Error::ModelFormat(format!(
                    "automaton state {bad} outside [1, {max_state}]"
                )));
            }
            clause.automata = states.into_iter().map(super::automaton::TsetlinAutomaton::from_state).collect();
        }
        model.fire_counts = fire_counts;
        Ok(model)
    }

    /// Every automaton state within `[1, 2N]`.
    pub fn states_in_bounds(&self) -> bool {
        let n = self.params.states_per_action;
        self.clauses
            .iter()
            .all(|c| c.automata.iter().all(|a| a.in_bounds(n)))
    }
}
