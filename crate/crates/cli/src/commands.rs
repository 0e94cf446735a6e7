//! Implementations behind the CLI subcommands. Each command is a pure
//! function of its resolved configuration: inputs are never mutated and all
//! outputs land under the configured output directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tmids_core::error::{Error, Result};
use tmids_core::explain;
use tmids_core::ingest::{assemble_scenario, load_csv, stratified_subsample, Assembled};
use tmids_core::metrics::{kfold_cv, measure_latency, CvReport, EvalReport, LatencyStats};
use tmids_core::model_io::PersistedModel;
use tmids_core::pipeline::{
    self, binarize_table, evaluate_majority, evaluate_model, predict_with_votes, run_fold,
};
use tmids_core::preprocess::{clean, class_counts, CleanReport, FlowTable, SmoteReport, StandardizerStats};
use tmids_core::binarizer::QuantileBinner;
use tmids_core::tm::BinarizedSample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{stage_seed, RunConfig};

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent.display().to_string(), e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Data(format!("cannot serialize {}: {e}", path.display())))?;
    write_text(path, &text)
}

/// Loads the scenario's train/test files and applies the configured
/// stratified subsample.
fn assemble_raw(config: &RunConfig) -> Result<Assembled> {
    let mut assembled = assemble_scenario(&config.spec, &config.data_root)?;
    if config.subsample < 1.0 {
        let mut train_rng = ChaCha8Rng::seed_from_u64(stage_seed(config.seed, "subsample-train"));
        let mut test_rng = ChaCha8Rng::seed_from_u64(stage_seed(config.seed, "subsample-test"));
        assembled.train = stratified_subsample(&assembled.train, config.subsample, &mut train_rng)?;
        assembled.test = stratified_subsample(&assembled.test, config.subsample, &mut test_rng)?;
    }
    Ok(assembled)
}

/// Loads an explicit input CSV against the scenario schema and normalizes
/// its labels when present.
fn load_input(config: &RunConfig, path: &Path, require_labels: bool) -> Result<FlowTable> {
    let table = if require_labels {
        load_csv(path, &config.spec.feature_names, None)?
    } else {
        load_csv(path, &config.spec.feature_names, Some(""))?
    };
    if require_labels {
        let labels: Vec<String> = table
            .labels()
            .iter()
            .map(|l| config.spec.normalize_label(l))
            .collect::<Result<_>>()?;
        return FlowTable::new(
            table.columns().to_vec(),
            table.rows().to_vec(),
            labels,
            config.spec.id.to_string(),
        );
    }
    Ok(table)
}

#[derive(Debug, Serialize)]
pub struct PrepareReport {
    pub scenario: String,
    pub seed: u64,
    pub subsample: f64,
    pub train_counts_raw: Vec<(String, usize)>,
    pub test_counts_raw: Vec<(String, usize)>,
    pub train_clean: CleanReport,
    pub test_clean: CleanReport,
    pub smote: Option<SmoteReport>,
    pub train_counts_balanced: Vec<(String, usize)>,
    pub literal_count: usize,
}

/// prepare: ingest, subsample, clean, balance, fit standardizer and binner,
/// and write every prepared artifact plus the class-distribution report.
pub fn cmd_prepare(config: &RunConfig) -> Result<PrepareReport> {
    let assembled = assemble_raw(config)?;
    let prepared = pipeline::prepare(
        &assembled.train,
        &assembled.test,
        &config.pipeline,
        stage_seed(config.seed, "prepare"),
    )?;

    let dir = config.output_dir.join("prepared");
    prepared.train.write_csv(&dir.join("train.csv"))?;
    prepared.test.write_csv(&dir.join("test.csv"))?;
    write_json(&dir.join("standardizer.json"), &prepared.standardizer)?;
    write_json(&dir.join("binner.json"), &prepared.binner)?;

    // per-stage class counts: the data behind the imbalance/balance charts
    let mut distribution = String::from("split,stage,class,count\n");
    let cleaned_train_counts: Vec<(String, usize)> = match &prepared.smote {
        Some(report) => report.per_class.iter().map(|(c, n, _)| (c.clone(), *n)).collect(),
        None => class_counts(&prepared.train),
    };
    let balanced_counts = class_counts(&prepared.train);
    let cleaned_test_counts = class_counts(&prepared.test);
    for (stage, counts) in [
        ("raw", &assembled.train_counts),
        ("cleaned", &cleaned_train_counts),
        ("balanced", &balanced_counts),
    ] {
        for (class, count) in counts {
            distribution.push_str(&format!("train,{stage},{class},{count}\n"));
        }
    }
    for (stage, counts) in [("raw", &assembled.test_counts), ("cleaned", &cleaned_test_counts)] {
        for (class, count) in counts {
            distribution.push_str(&format!("test,{stage},{class},{count}\n"));
        }
    }
    write_text(&dir.join("class_distribution.csv"), &distribution)?;

    let report = PrepareReport {
        scenario: config.spec.id.to_string(),
        seed: config.seed,
        subsample: config.subsample,
        train_counts_raw: assembled.train_counts,
        test_counts_raw: assembled.test_counts,
        train_clean: prepared.train_clean,
        test_clean: prepared.test_clean,
        smote: prepared.smote.clone(),
        train_counts_balanced: balanced_counts,
        literal_count: prepared.binner.num_literals(),
    };
    write_json(&dir.join("prepare_report.json"), &report)?;

    let config_text = toml::to_string_pretty(&config.to_file_config())
        .map_err(|e| Error::Data(format!("cannot serialize run config: {e}")))?;
    write_text(&config.output_dir.join("run_config.toml"), &config_text)?;
    Ok(report)
}

fn prepared_dir(config: &RunConfig) -> PathBuf {
    config.output_dir.join("prepared")
}

fn load_prepared(config: &RunConfig) -> Result<(FlowTable, FlowTable, StandardizerStats, QuantileBinner)> {
    let dir = prepared_dir(config);
    let missing = |name: &str| {
        Error::Usage(format!(
            "prepared artifact {} not found under {}; run prepare first",
            name,
            dir.display()
        ))
    };
    if !dir.join("train.csv").exists() {
        return Err(missing("train.csv"));
    }
    let train = FlowTable::read_csv(&dir.join("train.csv"), config.spec.id.to_string())?;
    let test = FlowTable::read_csv(&dir.join("test.csv"), config.spec.id.to_string())?;
    let standardizer: StandardizerStats = read_json(&dir.join("standardizer.json"))?;
    let binner: QuantileBinner = read_json(&dir.join("binner.json"))?;
    Ok((train, test, standardizer, binner))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

#[derive(Debug, Serialize)]
pub struct TrainOutput {
    pub model_path: PathBuf,
    pub trace_path: PathBuf,
    pub final_train_accuracy: Option<f64>,
    pub final_test_accuracy: Option<f64>,
}

/// train: fit the machine on prepared artifacts, persist the model with its
/// embedded preprocessing state, and write the per-epoch accuracy trace.
pub fn cmd_train(config: &RunConfig) -> Result<TrainOutput> {
    let (train, test, standardizer, binner) = load_prepared(config)?;
    let (persisted, trace) = pipeline::train_model(
        &train,
        &test,
        &standardizer,
        &binner,
        &config.spec.class_names,
        &config.spec.id.to_string(),
        &config.pipeline,
        stage_seed(config.seed, "train"),
    )?;

    let model_path = config.output_dir.join("model.json");
    persisted.save(&model_path)?;

    let mut trace_csv = String::from("epoch,train_accuracy,test_accuracy\n");
    for epoch in &trace.epochs {
        let holdout = epoch
            .holdout_accuracy
            .map(|a| a.to_string())
            .unwrap_or_default();
        trace_csv.push_str(&format!("{},{},{}\n", epoch.epoch, epoch.train_accuracy, holdout));
    }
    let trace_path = config.output_dir.join("trace.csv");
    write_text(&trace_path, &trace_csv)?;

    Ok(TrainOutput {
        model_path,
        trace_path,
        final_train_accuracy: trace.final_train_accuracy(),
        final_test_accuracy: trace.final_holdout_accuracy(),
    })
}

fn default_model_path(config: &RunConfig) -> PathBuf {
    config.output_dir.join("model.json")
}

fn load_model(config: &RunConfig, model_arg: Option<&Path>) -> Result<PersistedModel> {
    let path = model_arg.map(Path::to_path_buf).unwrap_or_else(|| default_model_path(config));
    let persisted = PersistedModel::load(&path)?;
    if persisted.binner.num_features() != config.spec.num_features() {
        return Err(Error::Dimension(format!(
            "model was fitted on {} features but scenario {} has {}; scenario schemas do not match",
            persisted.binner.num_features(),
            config.spec.id,
            config.spec.num_features()
        )));
    }
    Ok(persisted)
}

/// evaluate: score a model (or the majority baseline) on labeled data and
/// write the metric report and confusion matrix.
pub fn cmd_evaluate(
    config: &RunConfig,
    model_arg: Option<&str>,
    input: Option<&Path>,
) -> Result<EvalReport> {
    let assembled = if input.is_none() || model_arg == Some("majority") {
        Some(assemble_raw(config)?)
    } else {
        None
    };
    let test_raw = match input {
        Some(path) => load_input(config, path, true)?,
        None => assembled.as_ref().expect("assembled above").test.clone(),
    };
    let (cleaned_test, _) = clean(&test_raw)?;

    let report = if model_arg == Some("majority") {
        let train_raw = &assembled.as_ref().expect("assembled above").train;
        let (cleaned_train, _) = clean(train_raw)?;
        let (_, report) = evaluate_majority(
            &cleaned_train,
            &cleaned_test,
            &config.spec.class_names,
            config.pipeline.averaging,
        )?;
        report
    } else {
        let model_path = model_arg.map(Path::new);
        let persisted = load_model(config, model_path)?;
        evaluate_model(&persisted, &cleaned_test)?
    };

    let dir = config.output_dir.join("eval");
    write_json(&dir.join("report.json"), &report)?;
    write_text(
        &dir.join("confusion.csv"),
        &report.confusion.to_csv_string(&config.spec.class_names),
    )?;
    Ok(report)
}

/// cv: stratified k-fold cross-validation of the full per-fold pipeline on
/// the scenario's training split.
pub fn cmd_cv(config: &RunConfig, folds: usize) -> Result<CvReport> {
    let train_raw = assemble_raw(config)?.train;
    let (cleaned, _) = clean(&train_raw)?;
    let class_names = config.spec.class_names.clone();
    let scenario = config.spec.id.to_string();
    let pipeline_config = config.pipeline.clone();
    let report = kfold_cv(
        &cleaned,
        folds,
        stage_seed(config.seed, "cv"),
        |train, validation, fold_seed| {
            run_fold(train, validation, &class_names, &scenario, &pipeline_config, fold_seed)
        },
    )?;

    let dir = config.output_dir.join("cv");
    write_json(&dir.join("report.json"), &report)?;
    let mut folds_csv = String::from("fold,accuracy,precision,recall,f1\n");
    for (i, fold) in report.folds.iter().enumerate() {
        folds_csv.push_str(&format!(
            "{},{},{},{},{}\n",
            i, fold.metrics.accuracy, fold.metrics.precision, fold.metrics.recall, fold.metrics.f1
        ));
    }
    write_text(&dir.join("folds.csv"), &folds_csv)?;
    Ok(report)
}

/// predict: one output row per input row, predicted label plus the full
/// vote vector. Input labels are not required.
pub fn cmd_predict(config: &RunConfig, model_arg: Option<&Path>, input: &Path) -> Result<PathBuf> {
    let persisted = load_model(config, model_arg)?;
    let table = load_input(config, input, false)?;
    let predictions = predict_with_votes(&persisted, &table)?;

    let mut csv = String::from("row,predicted_label");
    for class in &persisted.class_names {
        csv.push_str(&format!(",vote_{class}"));
    }
    csv.push('\n');
    for (row, (class, votes)) in predictions.iter().enumerate() {
        csv.push_str(&format!("{row},{}", persisted.class_names[*class]));
        for v in &votes.votes {
            csv.push_str(&format!(",{v}"));
        }
        csv.push('\n');
    }
    let path = config.output_dir.join("predict").join("predictions.csv");
    write_text(&path, &csv)?;
    Ok(path)
}

#[derive(Debug, Serialize)]
pub struct ExplainOutput {
    pub row: usize,
    pub predicted_class: String,
    pub votes_csv: PathBuf,
    pub heatmap_csv: PathBuf,
    pub heatmap_svg: PathBuf,
    pub rules_txt: PathBuf,
    pub rules_json: PathBuf,
}

/// explain: for each selected row, write the vote scores, the clause
/// activation heatmap (CSV and SVG), and the top rules of the predicted
/// class.
pub fn cmd_explain(
    config: &RunConfig,
    model_arg: Option<&Path>,
    input: &Path,
    rows: &[usize],
    top_k: usize,
) -> Result<Vec<ExplainOutput>> {
    if rows.is_empty() {
        return Err(Error::Usage("explain needs at least one row index (--rows)".into()));
    }
    let persisted = load_model(config, model_arg)?;
    let table = load_input(config, input, false)?;
    let standardized = persisted.standardizer.apply(&table)?;
    let dir = config.output_dir.join("explain");

    let mut outputs = Vec::with_capacity(rows.len());
    for &row in rows {
        if row >= standardized.num_rows() {
            return Err(Error::Usage(format!(
                "row {row} out of range; input has {} rows",
                standardized.num_rows()
            )));
        }
        let bits = persisted.binner.transform_row(standardized.row(row))?;
        let votes = explain::class_votes(&persisted.model, &bits)?;
        let map = explain::activation_map(&persisted.model, &bits)?;
        let predicted = votes.argmax();
        let rules = explain::render_rules(&persisted.model, predicted, top_k, Some(&persisted.binner))?;

        let votes_csv = dir.join(format!("row{row}_votes.csv"));
        write_text(&votes_csv, &explain::votes_csv(&votes, &persisted.class_names))?;
        let heatmap_csv = dir.join(format!("row{row}_heatmap.csv"));
        write_text(&heatmap_csv, &map.to_csv_string(&persisted.class_names))?;
        let heatmap_svg = dir.join(format!("row{row}_heatmap.svg"));
        write_text(&heatmap_svg, &map.to_svg_string(&persisted.class_names))?;

        let mut rules_text = format!(
            "top {} rules voting for class {} (input row {row})\n",
            rules.len(),
            persisted.class_names[predicted]
        );
        for rule in &rules {
            rules_text.push_str(&format!(
                "clause {:>3} (+) fired {:>6} times: IF {}\n",
                rule.clause_index, rule.fire_count, rule.text
            ));
            for predicate in &rule.predicates {
                rules_text.push_str(&format!("    {predicate}\n"));
            }
        }
        let rules_txt = dir.join(format!("row{row}_rules.txt"));
        write_text(&rules_txt, &rules_text)?;
        let rules_json = dir.join(format!("row{row}_rules.json"));
        write_json(&rules_json, &rules)?;

        outputs.push(ExplainOutput {
            row,
            predicted_class: persisted.class_names[predicted].clone(),
            votes_csv,
            heatmap_csv,
            heatmap_svg,
            rules_txt,
            rules_json,
        });
    }
    Ok(outputs)
}

/// bench: single-sample inference latency over prepared samples.
pub fn cmd_bench(
    config: &RunConfig,
    model_arg: Option<&Path>,
    input: Option<&Path>,
    repetitions: usize,
    max_samples: usize,
) -> Result<LatencyStats> {
    let persisted = load_model(config, model_arg)?;
    let raw = match input {
        Some(path) => load_input(config, path, true)?,
        None => assemble_raw(config)?.test,
    };
    let (cleaned, _) = clean(&raw)?;
    let standardized = persisted.standardizer.apply(&cleaned)?;
    let mut samples = binarize_table(&persisted.binner, &standardized, &persisted.class_names)?;
    samples.truncate(max_samples.max(1));
    let stats = bench_samples(&persisted, &samples, repetitions)?;

    let dir = config.output_dir.join("bench");
    write_json(&dir.join("latency.json"), &stats)?;
    Ok(stats)
}

fn bench_samples(
    persisted: &PersistedModel,
    samples: &[BinarizedSample],
    repetitions: usize,
) -> Result<LatencyStats> {
    measure_latency(&persisted.model, samples, repetitions)
}
