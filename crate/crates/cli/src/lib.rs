//! Command-line front end for the Tsetlin Machine intrusion-detection
//! pipeline: prepare → train → evaluate/cv → predict/explain/bench.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use tmids_core::error::Error;

use config::{FileConfig, Overrides, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "tmids",
    version,
    about = "Tsetlin Machine intrusion detection for IoMT network flows",
    after_help = "Config precedence: scenario manifest < --config file < command-line flags."
)]
pub struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Scenario: s1 (Bluetooth binary), s2 (MQTT/Wi-Fi six-class), s3 (combined).
    #[arg(long, global = true)]
    pub scenario: Option<String>,

    /// Custom scenario manifest (TOML) replacing the built-in one.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,

    /// Directory holding the scenario's CSV files.
    #[arg(long, global = true)]
    pub data_root: Option<PathBuf>,

    /// Directory receiving every artifact this run writes.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Run seed; every stochastic stage derives from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Stratified subsample fraction in (0, 1]; 1 uses all rows.
    #[arg(long, global = true)]
    pub subsample: Option<f64>,

    /// Aggregation for multi-class precision/recall/F1: macro or weighted.
    #[arg(long, global = true)]
    pub averaging: Option<String>,

    /// Worker threads for parallel stages; 0 uses all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Clauses per class (m).
    #[arg(long, global = true)]
    pub clauses: Option<usize>,

    /// Read --clauses as a total split evenly across classes.
    #[arg(long, global = true)]
    pub clauses_total: bool,

    /// Voting threshold (T).
    #[arg(long, global = true)]
    pub threshold: Option<u32>,

    /// Specificity (s), must be > 1.
    #[arg(long, global = true)]
    pub specificity: Option<f64>,

    /// Training epochs.
    #[arg(long, global = true)]
    pub epochs: Option<usize>,

    /// Quantile bins per feature.
    #[arg(long, global = true)]
    pub n_bins: Option<usize>,

    /// Automaton states per action (N).
    #[arg(long, global = true)]
    pub states: Option<u16>,

    /// SMOTE neighbor count.
    #[arg(long, global = true)]
    pub smote_k: Option<usize>,

    /// Skip SMOTE balancing of the training split.
    #[arg(long, global = true)]
    pub no_smote: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ingest, clean, balance, and fit the standardizer and binner.
    Prepare,
    /// Train on prepared artifacts and persist the model plus accuracy trace.
    Train,
    /// Score a model (or `--model majority`) on labeled data.
    Evaluate {
        /// Model file path, or the literal `majority` for the baseline.
        #[arg(long)]
        model: Option<String>,
        /// Labeled CSV in the scenario schema; defaults to the scenario test files.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Stratified k-fold cross-validation of the whole pipeline.
    Cv {
        #[arg(long, default_value_t = 5)]
        folds: usize,
    },
    /// Per-row predicted label and vote vector for an input CSV.
    Predict {
        #[arg(long)]
        model: Option<PathBuf>,
        /// CSV in the scenario feature schema; a label column is not required.
        #[arg(long)]
        input: PathBuf,
    },
    /// Vote scores, clause activation heatmap, and rules for selected rows.
    Explain {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated row indices to explain.
        #[arg(long, value_delimiter = ',', required = true)]
        rows: Vec<usize>,
        /// Rules to render for the predicted class.
        #[arg(long, default_value_t = 5)]
        top_k: usize,
    },
    /// Single-sample inference latency measurement.
    Bench {
        #[arg(long)]
        model: Option<PathBuf>,
        /// Labeled CSV to draw samples from; defaults to the scenario test files.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        repetitions: usize,
        /// Cap on distinct samples used for timing.
        #[arg(long, default_value_t = 1000)]
        max_samples: usize,
    },
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            scenario: self.scenario.clone(),
            manifest: self.manifest.clone(),
            data_root: self.data_root.clone(),
            output_dir: self.out.clone(),
            seed: self.seed,
            subsample: self.subsample,
            averaging: self.averaging.clone(),
            threads: self.threads,
            clauses: self.clauses,
            clauses_total: self.clauses_total,
            threshold: self.threshold,
            specificity: self.specificity,
            epochs: self.epochs,
            n_bins: self.n_bins,
            states: self.states,
            smote_k: self.smote_k,
            no_smote: self.no_smote,
        }
    }
}

/// Exit codes: 0 success, 2 usage error, 3 data/schema error, 4 internal.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Usage(_) => 2,
        Error::Data(_) | Error::Schema { .. } | Error::Io { .. } | Error::ModelFormat(_) => 3,
        Error::Dimension(_) => 4,
    }
}

/// Runs one parsed invocation and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match execute(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}

fn execute(cli: Cli) -> Result<(), Error> {
    let file_config = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let config = RunConfig::resolve(&file_config, &cli.overrides())?;

    if config.threads > 0 {
        // ignore the error if a pool already exists (tests, repeated calls)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build_global();
    }

    match &cli.command {
        Command::Prepare => {
            let report = commands::cmd_prepare(&config)?;
            println!(
                "prepared scenario {}: train {} -> {} rows (clean) -> {} (balanced), test {} -> {} rows, {} literals",
                report.scenario,
                report.train_clean.rows_in,
                report.train_clean.rows_out,
                report.train_counts_balanced.iter().map(|(_, n)| n).sum::<usize>(),
                report.test_clean.rows_in,
                report.test_clean.rows_out,
                report.literal_count,
            );
            println!("artifacts under {}", config.output_dir.join("prepared").display());
        }
        Command::Train => {
            let output = commands::cmd_train(&config)?;
            if let Some(train_acc) = output.final_train_accuracy {
                let test = output
                    .final_test_accuracy
                    .map(|a| format!(", test accuracy {a:.4}"))
                    .unwrap_or_default();
                println!("final epoch: train accuracy {train_acc:.4}{test}");
            } else {
                println!("0 epochs requested; persisted the untrained model");
            }
            println!("model: {}", output.model_path.display());
            println!("trace: {}", output.trace_path.display());
        }
        Command::Evaluate { model, input } => {
            let report = commands::cmd_evaluate(&config, model.as_deref(), input.as_deref())?;
            let m = &report.metrics;
            println!(
                "accuracy {:.4}  precision {:.4}  recall {:.4}  f1 {:.4}",
                m.accuracy, m.precision, m.recall, m.f1
            );
            println!("reports under {}", config.output_dir.join("eval").display());
        }
        Command::Cv { folds } => {
            let report = commands::cmd_cv(&config, *folds)?;
            for (i, fold) in report.folds.iter().enumerate() {
                println!(
                    "fold {i}: accuracy {:.4}  f1 {:.4}",
                    fold.metrics.accuracy, fold.metrics.f1
                );
            }
            println!(
                "cv accuracy {:.4} +/- {:.4}, f1 {:.4} +/- {:.4}",
                report.accuracy_mean, report.accuracy_std, report.f1_mean, report.f1_std
            );
        }
        Command::Predict { model, input } => {
            let path = commands::cmd_predict(&config, model.as_deref(), input)?;
            println!("predictions: {}", path.display());
        }
        Command::Explain {
            model,
            input,
            rows,
            top_k,
        } => {
            let outputs = commands::cmd_explain(&config, model.as_deref(), input, rows, *top_k)?;
            for out in outputs {
                println!(
                    "row {} predicted {}: votes {}, heatmap {} / {}, rules {}",
                    out.row,
                    out.predicted_class,
                    out.votes_csv.display(),
                    out.heatmap_csv.display(),
                    out.heatmap_svg.display(),
                    out.rules_txt.display()
                );
            }
        }
        Command::Bench {
            model,
            input,
            repetitions,
            max_samples,
        } => {
            let stats =
                commands::cmd_bench(&config, model.as_deref(), input.as_deref(), *repetitions, *max_samples)?;
            println!(
                "latency over {} predictions: mean {:.3} us, p50 {:.3} us, p99 {:.3} us ({})",
                stats.timed_predictions, stats.mean_us, stats.p50_us, stats.p99_us, stats.cpu
            );
        }
    }
    Ok(())
}
