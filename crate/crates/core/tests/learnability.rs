//! Noisy-XOR learnability: the machine must recover the XOR of two
//! informative bits from label-noisy training data, ignore the noise bits,
//! and beat the majority baseline.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tmids_core::baseline::fit_majority;
use tmids_core::tm::{BinarizedSample, TmParams, TsetlinModel};

/// 2 informative bits + 2 noise bits; training labels flipped with the given
/// probability, held-out labels clean.
pub fn noisy_xor(n: usize, label_noise: f64, rng: &mut ChaCha8Rng) -> Vec<BinarizedSample> {
    (0..n)
        .map(|_| {
            let bits: Vec<u8> = (0..4).map(|_| rng.gen_range(0..2u8)).collect();
            let mut label = (bits[0] ^ bits[1]) as usize;
            if rng.gen::<f64>() < label_noise {
                label = 1 - label;
            }
            BinarizedSample::new(bits, label).unwrap()
        })
        .collect()
}

fn xor_params() -> TmParams {
    TmParams {
        clauses_per_class: 20,
        threshold: 10,
        specificity: 3.9,
        states_per_action: 128,
    }
}

#[test]
fn noisy_xor_reaches_95_percent_heldout() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let train = noisy_xor(1000, 0.10, &mut rng);
    let test = noisy_xor(500, 0.0, &mut rng);

    let names = (0..4).map(|i| format!("b{i}")).collect();
    let mut model = TsetlinModel::new(2, names, xor_params(), 404).unwrap();
    let mut train_rng = ChaCha8Rng::seed_from_u64(404);
    model.fit(&train, None, 50, &mut train_rng).unwrap();

    let accuracy = model.accuracy(&test).unwrap();
    assert!(accuracy >= 0.95, "held-out accuracy {accuracy}");

    let labels: Vec<usize> = train.iter().map(|s| s.label).collect();
    let majority = fit_majority(&labels, 2).unwrap();
    let baseline_accuracy = test.iter().filter(|s| s.label == majority.predict()).count() as f64
        / test.len() as f64;
    assert!(
        accuracy > baseline_accuracy,
        "model {accuracy} vs baseline {baseline_accuracy}"
    );
}
