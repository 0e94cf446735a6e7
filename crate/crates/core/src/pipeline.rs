//! End-to-end pipeline stages shared by the CLI commands and
//! cross-validation: clean, balance, standardize, binarize, train, evaluate.
//!
//! Stage order mirrors the deployed flow: cleaning and SMOTE operate on raw
//! features, the standardizer is fitted on the balanced training data, and
//! the binner on the standardized result. Test data is never resampled and
//! is always transformed with training-fitted state only.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baseline::{fit_majority, MajorityModel};
use crate::binarizer::QuantileBinner;
use crate::error::{Error, Result};
use crate::metrics::{compute_metrics, Averaging, ConfusionMatrix, EvalReport};
use crate::model_io::PersistedModel;
use crate::preprocess::{clean, smote, CleanReport, FlowTable, SmoteReport, StandardizerStats};
use crate::tm::{BinarizedSample, TmParams, TrainingTrace, TsetlinModel};

/// Everything one training run needs beyond the data itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub params: TmParams,
    pub epochs: usize,
    pub n_bins: usize,
    pub smote_k: usize,
    pub averaging: Averaging,
    /// Balance training folds with SMOTE (never applied to test data).
    pub apply_smote: bool,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.n_bins < 2 {
            return Err(Error::Usage(format!("n_bins must be >= 2, got {}", self.n_bins)));
        }
        if self.smote_k < 1 {
            return Err(Error::Usage(format!("smote_k must be >= 1, got {}", self.smote_k)));
        }
        Ok(())
    }
}

/// Fitted preprocessing state plus ready-to-train tables.
#[derive(Debug, Clone)]
pub struct Prepared {
    /// Cleaned, balanced, standardized training table.
    pub train: FlowTable,
    /// Cleaned, standardized test table (no resampling).
    pub test: FlowTable,
    pub standardizer: StandardizerStats,
    pub binner: QuantileBinner,
    pub train_clean: CleanReport,
    pub test_clean: CleanReport,
    pub smote: Option<SmoteReport>,
}

/// Cleans both splits, balances the training split, and fits the
/// standardizer and binner on training data only.
pub fn prepare(
    train_raw: &FlowTable,
    test_raw: &FlowTable,
    config: &PipelineConfig,
    seed: u64,
) -> Result<Prepared> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let (train_cleaned, train_clean) = clean(train_raw)?;
    let (test_cleaned, test_clean) = clean(test_raw)?;

    let (balanced, smote_report) = if config.apply_smote {
        let (t, r) = smote(&train_cleaned, config.smote_k, &mut rng)?;
        (t, Some(r))
    } else {
        (train_cleaned, None)
    };

    let standardizer = StandardizerStats::fit(&balanced)?;
    let train = standardizer.apply(&balanced)?;
    let test = standardizer.apply(&test_cleaned)?;
    let binner = QuantileBinner::fit(&train, config.n_bins)?;

    Ok(Prepared {
        train,
        test,
        standardizer,
        binner,
        train_clean,
        test_clean,
        smote: smote_report,
    })
}

/// Binarizes a standardized table into labeled samples, mapping label
/// strings to their index in `class_names`.
pub fn binarize_table(
    binner: &QuantileBinner,
    table: &FlowTable,
    class_names: &[String],
) -> Result<Vec<BinarizedSample>> {
    (0..table.num_rows())
        .map(|r| {
            let label = table.label(r);
            let class = class_names
                .iter()
                .position(|c| c == label)
                .ok_or_else(|| Error::Data(format!("label {label:?} not in class map {class_names:?}")))?;
            let bits = binner.transform_row(table.row(r))?;
            BinarizedSample::new(bits, class)
        })
        .collect()
}

/// Trains a Tsetlin model on prepared (standardized) train/holdout tables
/// and bundles it with the fitted preprocessing state.
pub fn train_model(
    train: &FlowTable,
    holdout: &FlowTable,
    standardizer: &StandardizerStats,
    binner: &QuantileBinner,
    class_names: &[String],
    scenario: &str,
    config: &PipelineConfig,
    seed: u64,
) -> Result<(PersistedModel, TrainingTrace)> {
    let train_samples = binarize_table(binner, train, class_names)?;
    let holdout_samples = binarize_table(binner, holdout, class_names)?;

    let mut model = TsetlinModel::new(class_names.len(), binner.literal_names(), config.params, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trace = model.fit(&train_samples, Some(&holdout_samples), config.epochs, &mut rng)?;

    let persisted = PersistedModel {
        scenario: scenario.to_string(),
        class_names: class_names.to_vec(),
        averaging: config.averaging,
        standardizer: standardizer.clone(),
        binner: binner.clone(),
        model,
    };
    Ok((persisted, trace))
}

/// Scores a raw-feature table row by row: standardize, binarize, vote.
/// Labels are ignored, so unlabeled inputs work; the output keeps input row
/// order and length.
pub fn predict_with_votes(
    persisted: &PersistedModel,
    raw: &FlowTable,
) -> Result<Vec<(usize, crate::tm::VoteVector)>> {
    let standardized = persisted.standardizer.apply(raw)?;
    (0..standardized.num_rows())
        .map(|r| {
            let bits = persisted
                .binner
                .transform_row(standardized.row(r))
                .map_err(|e| Error::Data(format!("row {r}: {e}")))?;
            let votes = persisted.model.vote_vector(&bits)?;
            Ok((votes.argmax(), votes))
        })
        .collect()
}

/// Evaluates a persisted model on a cleaned raw-feature table.
pub fn evaluate_model(persisted: &PersistedModel, raw: &FlowTable) -> Result<EvalReport> {
    let standardized = persisted.standardizer.apply(raw)?;
    let samples = binarize_table(&persisted.binner, &standardized, &persisted.class_names)?;
    let predictions = persisted.model.predict_batch(&samples)?;
    let truth: Vec<usize> = samples.iter().map(|s| s.label).collect();
    let confusion = ConfusionMatrix::from_predictions(&truth, &predictions, persisted.class_names.len())?;
    Ok(EvalReport {
        metrics: compute_metrics(&confusion, persisted.averaging)?,
        confusion,
        latency: None,
    })
}

/// Fits the majority baseline on training labels and evaluates it.
pub fn evaluate_majority(
    train: &FlowTable,
    test: &FlowTable,
    class_names: &[String],
    averaging: Averaging,
) -> Result<(MajorityModel, EvalReport)> {
    let to_indices = |table: &FlowTable| -> Result<Vec<usize>> {
        table
            .labels()
            .iter()
            .map(|label| {
                class_names
                    .iter()
                    .position(|c| c == label)
                    .ok_or_else(|| Error::Data(format!("label {label:?} not in class map")))
            })
            .collect()
    };
    let train_labels = to_indices(train)?;
    let test_labels = to_indices(test)?;
    let baseline = fit_majority(&train_labels, class_names.len())?;
    let predictions = vec![baseline.predict(); test_labels.len()];
    let confusion = ConfusionMatrix::from_predictions(&test_labels, &predictions, class_names.len())?;
    Ok((
        baseline,
        EvalReport {
            metrics: compute_metrics(&confusion, averaging)?,
            confusion,
            latency: None,
        },
    ))
}

/// The full per-fold pipeline for cross-validation: every fitted stage
/// (SMOTE, standardizer, binner, model) sees the training part only.
pub fn run_fold(
    train_raw: &FlowTable,
    validation_raw: &FlowTable,
    class_names: &[String],
    scenario: &str,
    config: &PipelineConfig,
    seed: u64,
) -> Result<EvalReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prepare_seed: u64 = rng.gen();
    let train_seed: u64 = rng.gen();
    let prepared = prepare(train_raw, validation_raw, config, prepare_seed)?;
    let (persisted, _) = train_model(
        &prepared.train,
        &prepared.test,
        &prepared.standardizer,
        &prepared.binner,
        class_names,
        scenario,
        config,
        train_seed,
    )?;

    // validation was cleaned and standardized inside prepare; score it directly
    let samples = binarize_table(&prepared.binner, &prepared.test, class_names)?;
    let predictions = persisted.model.predict_batch(&samples)?;
    let truth: Vec<usize> = samples.iter().map(|s| s.label).collect();
    let confusion = ConfusionMatrix::from_predictions(&truth, &predictions, class_names.len())?;
    Ok(EvalReport {
        metrics: compute_metrics(&confusion, config.averaging)?,
        confusion,
        latency: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_config() -> PipelineConfig {
        PipelineConfig {
            params: TmParams {
                clauses_per_class: 10,
                threshold: 5,
                specificity: 3.0,
                states_per_action: 64,
            },
            epochs: 10,
            n_bins: 4,
            smote_k: 2,
            averaging: Averaging::Macro,
            apply_smote: true,
        }
    }

    /// Two well-separated classes with an imbalanced training split.
    fn toy_tables(seed: u64) -> (FlowTable, FlowTable) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut make = |n_a: usize, n_b: usize| {
            let mut rows = Vec::new();
            let mut labels = Vec::new();
            for _ in 0..n_a {
                rows.push(vec![rng.gen::<f64>() * 2.0, 10.0 + rng.gen::<f64>()]);
                labels.push("calm".to_string());
            }
            for _ in 0..n_b {
                rows.push(vec![8.0 + rng.gen::<f64>() * 2.0, rng.gen::<f64>()]);
                labels.push("burst".to_string());
            }
            FlowTable::new(vec!["rate".into(), "gap".into()], rows, labels, "toy").unwrap()
        };
        (make(60, 12), make(20, 20))
    }

    #[test]
    fn prepare_balances_train_only() {
        let (train, test) = toy_tables(1);
        let prepared = prepare(&train, &test, &toy_config(), 7).unwrap();
        let counts = crate::preprocess::class_counts(&prepared.train);
        assert_eq!(counts[0].1, counts[1].1, "train classes balanced");
        let test_counts = crate::preprocess::class_counts(&prepared.test);
        assert_eq!(test_counts[0].1, 20);
        assert_eq!(test_counts[1].1, 20, "test untouched by smote");
        assert!(prepared.smote.is_some());
    }

    #[test]
    fn end_to_end_learns_separable_classes() {
        let (train, test) = toy_tables(2);
        let class_names = vec!["calm".to_string(), "burst".to_string()];
        let config = toy_config();
        let prepared = prepare(&train, &test, &config, 7).unwrap();
        let (persisted, trace) = train_model(
            &prepared.train,
            &prepared.test,
            &prepared.standardizer,
            &prepared.binner,
            &class_names,
            "toy",
            &config,
            7,
        )
        .unwrap();
        assert_eq!(trace.epochs.len(), config.epochs);

        let (cleaned_test, _) = clean(&test).unwrap();
        let report = evaluate_model(&persisted, &cleaned_test).unwrap();
        assert!(report.metrics.accuracy >= 0.95, "accuracy {}", report.metrics.accuracy);

        let (_, baseline_report) = evaluate_majority(&prepared.train, &prepared.test, &class_names, config.averaging).unwrap();
        assert!(report.metrics.accuracy > baseline_report.metrics.accuracy);
    }

    #[test]
    fn run_fold_works_inside_kfold() {
        let (train, _) = toy_tables(3);
        let class_names = vec!["calm".to_string(), "burst".to_string()];
        let config = toy_config();
        let (cleaned, _) = clean(&train).unwrap();
        let report = crate::metrics::kfold_cv(&cleaned, 3, 5, |tr, va, seed| {
            run_fold(tr, va, &class_names, "toy", &config, seed)
        })
        .unwrap();
        assert_eq!(report.folds.len(), 3);
        assert!(report.accuracy_mean > 0.8, "cv accuracy {}", report.accuracy_mean);
    }
}
