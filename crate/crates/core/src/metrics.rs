//! Evaluation: confusion matrix, accuracy/precision/recall/F1, stratified
//! five-fold cross-validation, and single-sample inference latency.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::FlowTable;
use crate::tm::{BinarizedSample, TsetlinModel};

/// C×C prediction counts; rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    num_classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(num_classes: usize) -> Self {
        ConfusionMatrix {
            num_classes,
            counts: vec![0; num_classes * num_classes],
        }
    }

    pub fn from_predictions(truth: &[usize], predicted: &[usize], num_classes: usize) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::Dimension(format!(
                "{} true labels vs {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        let mut cm = ConfusionMatrix::new(num_classes);
        for (&t, &p) in truth.iter().zip(predicted) {
            cm.record(t, p)?;
        }
        Ok(cm)
    }

    pub fn record(&mut self, true_class: usize, predicted_class: usize) -> Result<()> {
        if true_class >= self.num_classes || predicted_class >= self.num_classes {
            return Err(Error::Usage(format!(
                "class out of range: true {true_class}, predicted {predicted_class}, C {}",
                self.num_classes
            )));
        }
        self.counts[true_class * self.num_classes + predicted_class] += 1;
        Ok(())
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn get(&self, true_class: usize, predicted_class: usize) -> u64 {
        self.counts[true_class * self.num_classes + predicted_class]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.num_classes).map(|c| self.get(c, c)).sum()
    }

    /// Number of samples whose true class is `c`.
    pub fn row_sum(&self, c: usize) -> u64 {
        (0..self.num_classes).map(|p| self.get(c, p)).sum()
    }

    /// Number of samples predicted as `c`.
    pub fn column_sum(&self, c: usize) -> u64 {
        (0..self.num_classes).map(|t| self.get(t, c)).sum()
    }

    /// CSV grid with class names on both axes.
    pub fn to_csv_string(&self, class_names: &[String]) -> String {
        let mut out = String::from("true\\predicted");
        for name in class_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (t, name) in class_names.iter().enumerate() {
            out.push_str(name);
            for p in 0..self.num_classes {
                out.push(',');
                out.push_str(&self.get(t, p).to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Multi-class aggregation mode for precision/recall/F1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    Macro,
    Weighted,
}

impl std::str::FromStr for Averaging {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "macro" => Ok(Averaging::Macro),
            "weighted" => Ok(Averaging::Weighted),
            other => Err(Error::Usage(format!(
                "unknown averaging mode {other:?}; expected macro or weighted"
            ))),
        }
    }
}

/// One-vs-rest metrics of a single class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

/// Accuracy plus aggregated and per-class precision/recall/F1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub averaging: Averaging,
    pub per_class: Vec<ClassMetrics>,
}

/// Metrics from a confusion matrix.
///
/// The binary case treats class 1 as the attack class and reports its
/// precision/recall/F1 directly; the multi-class case computes one-vs-rest
/// metrics per class and aggregates by the requested mode. Zero-denominator
/// precision or recall is reported as 0 with a warning, and F1 is 0 when
/// precision + recall is 0.
pub fn compute_metrics(cm: &ConfusionMatrix, averaging: Averaging) -> Result<MetricsReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Usage("confusion matrix is empty".into()));
    }
    let accuracy = cm.trace() as f64 / total as f64;

    let per_class: Vec<ClassMetrics> = (0..cm.num_classes())
        .map(|c| {
            let tp = cm.get(c, c);
            let fp = cm.column_sum(c) - tp;
            let fn_ = cm.row_sum(c) - tp;
            let precision = ratio_or_zero(tp, tp + fp, c, "precision");
            let recall = ratio_or_zero(tp, tp + fn_, c, "recall");
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassMetrics {
                class: c,
                precision,
                recall,
                f1,
                support: cm.row_sum(c),
            }
        })
        .collect();

    let (precision, recall, f1) = if cm.num_classes() == 2 {
        let attack = &per_class[1];
        (attack.precision, attack.recall, attack.f1)
    } else {
        match averaging {
            Averaging::Macro => {
                let n = per_class.len() as f64;
                (
                    per_class.iter().map(|m| m.precision).sum::<f64>() / n,
                    per_class.iter().map(|m| m.recall).sum::<f64>() / n,
                    per_class.iter().map(|m| m.f1).sum::<f64>() / n,
                )
            }
            Averaging::Weighted => {
                let weight_total = total as f64;
                let weighted = |f: fn(&ClassMetrics) -> f64| {
                    per_class
                        .iter()
                        .map(|m| f(m) * m.support as f64)
                        .sum::<f64>()
                        / weight_total
                };
                (
                    weighted(|m| m.precision),
                    weighted(|m| m.recall),
                    weighted(|m| m.f1),
                )
            }
        }
    };

    Ok(MetricsReport {
        accuracy,
        precision,
        recall,
        f1,
        averaging,
        per_class,
    })
}

fn ratio_or_zero(numerator: u64, denominator: u64, class: usize, what: &str) -> f64 {
    if denominator == 0 {
        log::warn!("{what} for class {class} has a zero denominator; reporting 0");
        0.0
    } else {
        numerator as f64 / denominator as f64
    }
}

/// Wall-clock single-prediction latency statistics, in microseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub mean_us: f64,
    pub p50_us: f64,
    pub p99_us: f64,
    pub min_us: f64,
    pub max_us: f64,
    pub timed_predictions: usize,
    /// CPU model string of the measuring host.
    pub cpu: String,
}

/// Times single-sample `predict` calls over `samples`, `repetitions` passes,
/// with one untimed warmup pass. Requires at least 100 timed predictions.
pub fn measure_latency(
    model: &TsetlinModel,
    samples: &[BinarizedSample],
    repetitions: usize,
) -> Result<LatencyStats> {
    let timed = samples.len() * repetitions;
    if timed < 100 {
        return Err(Error::Usage(format!(
            "need at least 100 timed predictions, got {} samples x {} repetitions",
            samples.len(),
            repetitions
        )));
    }
    for s in samples {
        model.predict(&s.bits)?;
    }

    let mut durations_us = Vec::with_capacity(timed);
    for _ in 0..repetitions {
        for s in samples {
            let start = Instant::now();
            let prediction = model.predict(&s.bits).expect("validated during warmup");
            let elapsed = start.elapsed();
            std::hint::black_box(prediction);
            durations_us.push(elapsed.as_secs_f64() * 1e6);
        }
    }
    durations_us.sort_by(|a, b| a.partial_cmp(b).expect("finite durations"));
    let n = durations_us.len();
    let pct = |q: f64| durations_us[((n - 1) as f64 * q).round() as usize];
    Ok(LatencyStats {
        mean_us: durations_us.iter().sum::<f64>() / n as f64,
        p50_us: pct(0.50),
        p99_us: pct(0.99),
        min_us: durations_us[0],
        max_us: durations_us[n - 1],
        timed_predictions: n,
        cpu: cpu_model(),
    })
}

/// CPU model string from /proc/cpuinfo, or "unknown".
pub fn cpu_model() -> String {
    std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|text| {
            text.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split(':').nth(1))
                .map(|s| s.trim().to_string())
        })
        .unwrap_or_else(|| "unknown".to_string())
}

/// Evaluation output: aggregate metrics, the confusion matrix, and optional
/// latency figures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metrics: MetricsReport,
    pub confusion: ConfusionMatrix,
    pub latency: Option<LatencyStats>,
}

/// Cross-validation output: one report per fold plus mean/std summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<EvalReport>,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub f1_mean: f64,
    pub f1_std: f64,
}

/// Stratified fold assignment: per class, a seeded shuffle dealt round-robin
/// across folds. Returns `fold_of[row]`.
pub fn stratified_folds(table: &FlowTable, k: usize, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::Usage(format!("cross-validation needs k >= 2, got {k}")));
    }
    let mut by_class: Vec<(String, Vec<usize>)> = Vec::new();
    for r in 0..table.num_rows() {
        match by_class.iter_mut().find(|(l, _)| l == table.label(r)) {
            Some((_, v)) => v.push(r),
            None => by_class.push((table.label(r).to_string(), vec![r])),
        }
    }
    for (class, indices) in &by_class {
        if indices.len() < k {
            return Err(Error::Usage(format!(
                "class {class} has only {} samples, fewer than k={k} folds",
                indices.len()
            )));
        }
    }
    let mut fold_of = vec![0usize; table.num_rows()];
    for (_, mut indices) in by_class {
        indices.shuffle(rng);
        for (i, row) in indices.into_iter().enumerate() {
            fold_of[row] = i % k;
        }
    }
    Ok(fold_of)
}

/// Stratified k-fold cross-validation.
///
/// `run_fold(train, validation, fold_seed)` owns the full per-fold pipeline:
/// every fitted stage (standardizer, binner, SMOTE, model) must be fit on
/// the training part only. Folds run in parallel; per-fold seeds are drawn
/// up front so results do not depend on scheduling.
pub fn kfold_cv<F>(table: &FlowTable, k: usize, seed: u64, run_fold: F) -> Result<CvReport>
where
    F: Fn(&FlowTable, &FlowTable, u64) -> Result<EvalReport> + Sync,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fold_of = stratified_folds(table, k, &mut rng)?;
    let fold_seeds: Vec<u64> = (0..k).map(|_| rng.gen()).collect();

    use rayon::prelude::*;
    let folds: Vec<EvalReport> = (0..k)
        .into_par_iter()
        .map(|fold| {
            let train_idx: Vec<usize> = (0..table.num_rows()).filter(|&r| fold_of[r] != fold).collect();
            let val_idx: Vec<usize> = (0..table.num_rows()).filter(|&r| fold_of[r] == fold).collect();
            let train = table.select_rows(&train_idx)?;
            let validation = table.select_rows(&val_idx)?;
            run_fold(&train, &validation, fold_seeds[fold])
        })
        .collect::<Result<_>>()?;

    let mean_std = |values: Vec<f64>| {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        (mean, var.sqrt())
    };
    let (accuracy_mean, accuracy_std) = mean_std(folds.iter().map(|f| f.metrics.accuracy).collect());
    let (f1_mean, f1_std) = mean_std(folds.iter().map(|f| f.metrics.f1).collect());

    Ok(CvReport {
        folds,
        accuracy_mean,
        accuracy_std,
        f1_mean,
        f1_std,
    })
}
