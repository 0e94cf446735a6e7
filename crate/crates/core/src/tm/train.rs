//! Feedback-driven training of the clause banks.
//!
//! Each training step gives feedback to the clauses of the sample's own class
//! (pushing its clamped score toward `+T`) and to one uniformly sampled other
//! class (pushing toward `-T`). Clause-level feedback follows the standard
//! two-type construction: Type I refines clauses of the supported polarity,
//! Type II blocks false positives on the opposing polarity.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::clause::{Clause, ClauseMode};
use super::model::{BinarizedSample, TsetlinModel};
use crate::error::{Error, Result};

/// Per-epoch accuracy record produced by [`fit`](TsetlinModel::fit).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_accuracy: f64,
    pub holdout_accuracy: Option<f64>,
}

/// Accuracy trace across training epochs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub epochs: Vec<EpochStats>,
}

impl TrainingTrace {
    pub fn final_train_accuracy(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.train_accuracy)
    }

    pub fn final_holdout_accuracy(&self) -> Option<f64> {
        self.epochs.last().and_then(|e| e.holdout_accuracy)
    }
}

impl TsetlinModel {
    /// One stochastic update on a single labeled sample.
    ///
    /// Touches only the clauses of the sample's class and of one uniformly
    /// sampled other class; all automaton states stay in `[1, 2N]`.
    pub fn train_step(&mut self, sample: &BinarizedSample, rng: &mut ChaCha8Rng) -> Result<()> {
        self.check_bits(&sample.bits)?;
        if sample.label >= self.num_classes() {
            return Err(Error::Usage(format!(
                "label {} out of range for {} classes",
                sample.label,
                self.num_classes()
            )));
        }
        let target = sample.label;
        self.update_class(target, &sample.bits, true, rng);
        let negative = sample_other_class(target, self.num_classes(), rng);
        self.update_class(negative, &sample.bits, false, rng);
        Ok(())
    }

    /// Feedback for every clause of one class.
    ///
    /// The per-clause feedback probability is `(T - clamp(f)) / 2T` when
    /// raising the class score and `(T + clamp(f)) / 2T` when lowering it,
    /// with `f` the learning-mode vote sum clamped to `[-T, T]`.
    fn update_class(&mut self, class: usize, bits: &[u8], toward_positive: bool, rng: &mut ChaCha8Rng) {
        let t = self.params().threshold as f64;
        let s = self.params().specificity;
        let n = self.params().states_per_action;

        let votes = self.class_vote_sum(bits, class, ClauseMode::Learning) as f64;
        let clamped = votes.clamp(-t, t);
        let probability = if toward_positive {
            (t - clamped) / (2.0 * t)
        } else {
            (t + clamped) / (2.0 * t)
        };

        let range = self.clause_range(class);
        for clause in &mut self.clauses[range] {
            if rng.gen::<f64>() >= probability {
                continue;
            }
            let fired = clause.fires(bits, ClauseMode::Learning, n);
            let positive_polarity = clause.polarity.sign() > 0;
            if positive_polarity == toward_positive {
                type_i_feedback(clause, bits, fired, s, n, rng);
            } else {
                type_ii_feedback(clause, bits, fired, n);
            }
        }
    }

    /// Trains for `epochs` passes over `train`, shuffling the sample order
    /// each epoch, and records per-epoch train (and optional holdout)
    /// accuracy. Clause firing counts over the training set are captured on
    /// the final epoch for rule ranking.
    pub fn fit(
        &mut self,
        train: &[BinarizedSample],
        holdout: Option<&[BinarizedSample]>,
        epochs: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<TrainingTrace> {
        if train.is_empty() {
            return Err(Error::Usage("training set is empty".into()));
        }
        for s in train {
            self.check_bits(&s.bits)?;
        }
        if let Some(h) = holdout {
            for s in h {
                self.check_bits(&s.bits)?;
            }
        }

        let mut trace = TrainingTrace::default();
        let mut order: Vec<usize> = (0..train.len()).collect();
        for epoch in 0..epochs {
            order.shuffle(rng);
            for &idx in &order {
                self.train_step(&train[idx], rng)?;
            }
            let (correct, fires) = self.eval_pass(train);
            if epoch + 1 == epochs {
                self.fire_counts = fires;
            }
            let holdout_accuracy = match holdout {
                Some(h) if !h.is_empty() => {
                    let (hc, _) = self.eval_pass(h);
                    Some(hc as f64 / h.len() as f64)
                }
                _ => None,
            };
            trace.epochs.push(EpochStats {
                epoch: epoch + 1,
                train_accuracy: correct as f64 / train.len() as f64,
                holdout_accuracy,
            });
        }
        Ok(trace)
    }
}

/// Uniform draw from `{0..num_classes} \ {exclude}`.
fn sample_other_class(exclude: usize, num_classes: usize, rng: &mut ChaCha8Rng) -> usize {
    let k = rng.gen_range(0..num_classes - 1);
    if k >= exclude {
        k + 1
    } else {
        k
    }
}

/// Type I feedback: reinforce the pattern the clause matched.
///
/// On a firing clause, true literals step toward inclusion with probability
/// `(s-1)/s` and false literals toward exclusion with probability `1/s`. On a
/// non-firing clause every literal steps toward exclusion with probability
/// `1/s`.
fn type_i_feedback(
    clause: &mut Clause,
    bits: &[u8],
    fired: bool,
    specificity: f64,
    states_per_action: u16,
    rng: &mut ChaCha8Rng,
) {
    let d = bits.len();
    let p_include = (specificity - 1.0) / specificity;
    let p_exclude = 1.0 / specificity;

    if fired {
        for (i, &bit) in bits.iter().enumerate() {
            if bit == 1 {
                // literal x_i is true, literal ¬x_i is false
                if rng.gen::<f64>() < p_include {
                    clause.automata[i].step_toward_include(states_per_action);
                }
                if rng.gen::<f64>() < p_exclude {
                    clause.automata[d + i].step_toward_exclude();
                }
            } else {
                if rng.gen::<f64>() < p_exclude {
                    clause.automata[i].step_toward_exclude();
                }
                if rng.gen::<f64>() < p_include {
                    clause.automata[d + i].step_toward_include(states_per_action);
                }
            }
        }
    } else {
        for automaton in &mut clause.automata {
            if rng.gen::<f64>() < p_exclude {
                automaton.step_toward_exclude();
            }
        }
    }
}

/// Type II feedback: on a firing clause, false literals whose automata
/// currently exclude them are bumped one step toward inclusion so the clause
/// learns to reject this input. Non-firing clauses are left alone.
fn type_ii_feedback(clause: &mut Clause, bits: &[u8], fired: bool, states_per_action: u16) {
    if !fired {
        return;
    }
    let d = bits.len();
    for (i, &bit) in bits.iter().enumerate() {
        if bit == 0 && !clause.automata[i].includes(states_per_action) {
            clause.automata[i].step_toward_include(states_per_action);
        }
        if bit == 1 && !clause.automata[d + i].includes(states_per_action) {
            clause.automata[d + i].step_toward_include(states_per_action);
        }
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;

    use super::*;
    use crate::tm::TmParams;

    fn params(m: usize, t: u32, s: f64) -> TmParams {
        TmParams {
            clauses_per_class: m,
            threshold: t,
            specificity: s,
            states_per_action: 32,
        }
    }

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|i| format!("b{i}")).collect()
    }

    #[test]
    fn converges_on_a_constant_sample() {
        let mut model = TsetlinModel::new(2, names(3), params(10, 4, 3.0), 11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sample = BinarizedSample::new(vec![1, 0, 1], 0).unwrap();
        for _ in 0..200 {
            model.train_step(&sample, &mut rng).unwrap();
        }
        assert_eq!(model.predict(&sample.bits).unwrap(), 0);
        assert!(model.states_in_bounds());
    }

    #[test]
    fn states_stay_bounded_under_random_steps() {
        let mut model = TsetlinModel::new(3, names(4), params(6, 3, 2.0), 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for i in 0..500 {
            let bits: Vec<u8> = (0..4).map(|_| rng.gen_range(0..2) as u8).collect();
            let sample = BinarizedSample::new(bits, i % 3).unwrap();
            model.train_step(&sample, &mut rng).unwrap();
        }
        assert!(model.states_in_bounds());
    }

    #[test]
    fn update_touches_at_most_two_classes() {
        let base = TsetlinModel::new(5, names(4), params(8, 4, 3.0), 9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..20 {
            let mut model = base.clone();
            // warm the clone a little so scores are nonzero
            for i in 0..10 {
                let bits: Vec<u8> = (0..4).map(|_| rng.gen_range(0..2) as u8).collect();
                model
                    .train_step(&BinarizedSample::new(bits, (trial + i) % 5).unwrap(), &mut rng)
                    .unwrap();
            }
            let before = model.clone();
            let target = trial % 5;
            let sample = BinarizedSample::new(vec![1, 0, 1, 0], target).unwrap();
            model.train_step(&sample, &mut rng).unwrap();

            let changed: Vec<usize> = (0..5)
                .filter(|&c| model.clauses[model.clause_range(c)] != before.clauses[before.clause_range(c)])
                .collect();
            assert!(changed.len() <= 2, "changed classes: {changed:?}");
            for c in &changed {
                assert!(*c == target || changed.len() <= 2);
            }
            assert!(
                changed.iter().filter(|&&c| c != target).count() <= 1,
                "more than one non-target class changed: {changed:?}"
            );
        }
    }

    #[test]
    fn fit_zero_epochs_is_identity() {
        let mut model = TsetlinModel::new(2, names(3), params(4, 2, 2.5), 3).unwrap();
        let before = model.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = vec![BinarizedSample::new(vec![1, 0, 1], 0).unwrap()];
        let trace = model.fit(&data, None, 0, &mut rng).unwrap();
        assert!(trace.epochs.is_empty());
        assert_eq!(model, before);
    }

    #[test]
    fn fit_rejects_empty_dataset() {
        let mut model = TsetlinModel::new(2, names(3), params(4, 2, 2.5), 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(model.fit(&[], None, 1, &mut rng).is_err());
    }

    #[test]
    fn identical_seed_and_data_give_identical_models() {
        let data: Vec<BinarizedSample> = (0..40)
            .map(|i| {
                let b0 = (i / 2) % 2 as usize;
                let b1 = i % 2;
                BinarizedSample::new(vec![b0 as u8, b1 as u8, (i % 3 == 0) as u8], (b0 ^ b1) as usize).unwrap()
            })
            .collect();
        let run = || {
            let mut model = TsetlinModel::new(2, names(3), params(10, 5, 3.5), 77).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(77);
            model.fit(&data, None, 5, &mut rng).unwrap();
            model
        };
        let a = run();
        let b = run();
        assert_eq!(a, b);
        for bits in [[0, 0, 0], [0, 1, 1], [1, 0, 0], [1, 1, 1]] {
            assert_eq!(a.predict(&bits).unwrap(), b.predict(&bits).unwrap());
        }
    }

    #[test]
    fn sample_other_class_is_never_the_target_and_covers_all() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut seen = [false; 6];
        for _ in 0..500 {
            let c = sample_other_class(2, 6, &mut rng);
            assert_ne!(c, 2);
            seen[c] = true;
        }
        assert_eq!(seen, [true, true, false, true, true, true]);
    }
}
