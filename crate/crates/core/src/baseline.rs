//! Majority-class baseline: the sanity floor every trained model must beat.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Predicts the training-majority class for every input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MajorityModel {
    pub majority_class: usize,
}

/// Picks the most frequent label, ties broken by the lowest class index.
pub fn fit_majority(labels: &[usize], num_classes: usize) -> Result<MajorityModel> {
    if labels.is_empty() {
        return Err(Error::Usage("cannot fit majority baseline on empty labels".into()));
    }
    let mut counts = vec![0usize; num_classes];
    for &label in labels {
        if label >= num_classes {
            return Err(Error::Usage(format!(
                "label {label} out of range for {num_classes} classes"
            )));
        }
        counts[label] += 1;
    }
    let majority_class = counts
        .iter()
        .enumerate()
        .max_by(|(ia, ca), (ib, cb)| ca.cmp(cb).then(ib.cmp(ia)))
        .map(|(i, _)| i)
        .expect("non-empty counts");
    Ok(MajorityModel { majority_class })
}

impl MajorityModel {
    pub fn predict(&self) -> usize {
        self.majority_class
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn majority_wins() {
        let labels: Vec<usize> = std::iter::repeat(0).take(70).chain(std::iter::repeat(1).take(30)).collect();
        let model = fit_majority(&labels, 2).unwrap();
        assert_eq!(model.predict(), 0);
    }

    #[test]
    fn tie_breaks_to_lowest_index() {
        let labels = vec![1, 0, 1, 0];
        let model = fit_majority(&labels, 2).unwrap();
        assert_eq!(model.predict(), 0);

        let labels = vec![2, 1, 2, 1];
        let model = fit_majority(&labels, 3).unwrap();
        assert_eq!(model.predict(), 1);
    }

    #[test]
    fn accuracy_equals_prevalence() {
        let labels: Vec<usize> = (0..100).map(|i| usize::from(i % 10 < 3)).collect();
        let model = fit_majority(&labels, 2).unwrap();
        let correct = labels.iter().filter(|&&l| l == model.predict()).count();
        assert_eq!(correct, 70);
    }

    #[test]
    fn empty_labels_rejected() {
        assert!(fit_majority(&[], 2).is_err());
    }
}
