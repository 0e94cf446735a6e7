//! Run configuration: scenario manifest defaults, overridden by an optional
//! TOML config file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tmids_core::error::{Error, Result};
use tmids_core::ingest::{ScenarioId, ScenarioSpec};
use tmids_core::metrics::Averaging;
use tmids_core::pipeline::PipelineConfig;
use tmids_core::tm::TmParams;

/// Hyperparameter bounds enforced before any work starts.
const MAX_CLAUSES: usize = 100_000;
const MAX_THRESHOLD: u32 = 1_000_000;
const MAX_EPOCHS: usize = 10_000;
const MAX_BINS: usize = 1_000;

/// The TOML config file shape. Every field is optional; omitted values fall
/// back to the scenario manifest (hyperparameters) or built-in defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub scenario: Option<String>,
    pub manifest: Option<PathBuf>,
    pub data_root: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub subsample: Option<f64>,
    pub averaging: Option<String>,
    pub threads: Option<usize>,
    pub tm: Option<TmFileConfig>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TmFileConfig {
    pub clauses: Option<usize>,
    /// Read `clauses` as a total budget split evenly across classes instead
    /// of a per-class count.
    pub clauses_total: Option<bool>,
    pub threshold: Option<u32>,
    pub specificity: Option<f64>,
    pub epochs: Option<usize>,
    pub n_bins: Option<usize>,
    pub states: Option<u16>,
    pub smote_k: Option<usize>,
    pub smote: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        toml::from_str(&text).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))
    }
}

/// Command-line overrides collected by the argument parser; `None` means the
/// flag was not given.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub scenario: Option<String>,
    pub manifest: Option<PathBuf>,
    pub data_root: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub subsample: Option<f64>,
    pub averaging: Option<String>,
    pub threads: Option<usize>,
    pub clauses: Option<usize>,
    pub clauses_total: bool,
    pub threshold: Option<u32>,
    pub specificity: Option<f64>,
    pub epochs: Option<usize>,
    pub n_bins: Option<usize>,
    pub states: Option<u16>,
    pub smote_k: Option<usize>,
    pub no_smote: bool,
}

/// Fully resolved settings for one command invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub spec: ScenarioSpec,
    pub data_root: PathBuf,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub subsample: f64,
    pub threads: usize,
    pub pipeline: PipelineConfig,
    /// True when the clause budget was interpreted as a total across both
    /// polarities rather than per class.
    pub clauses_total: bool,
}

impl RunConfig {
    pub fn resolve(file: &FileConfig, cli: &Overrides) -> Result<RunConfig> {
        let scenario_name = cli
            .scenario
            .clone()
            .or_else(|| file.scenario.clone())
            .unwrap_or_else(|| "s1".to_string());
        let scenario_id: ScenarioId = scenario_name.parse()?;

        let manifest_path = cli.manifest.clone().or_else(|| file.manifest.clone());
        let spec = match manifest_path {
            Some(path) => ScenarioSpec::from_manifest_path(&path)?,
            None => ScenarioSpec::builtin(scenario_id)?,
        };
        if spec.id != scenario_id {
            return Err(Error::Usage(format!(
                "manifest declares scenario {}, but {} was requested",
                spec.id, scenario_id
            )));
        }

        let file_tm = file.tm.clone().unwrap_or_default();
        let clauses_requested = cli.clauses.or(file_tm.clauses).unwrap_or(spec.tm.clauses);
        let clauses_total = cli.clauses_total || file_tm.clauses_total.unwrap_or(false);
        let clauses_per_class = if clauses_total {
            clauses_requested / spec.num_classes()
        } else {
            clauses_requested
        };

        let params = TmParams {
            clauses_per_class,
            threshold: cli.threshold.or(file_tm.threshold).unwrap_or(spec.tm.threshold),
            specificity: cli
                .specificity
                .or(file_tm.specificity)
                .unwrap_or(spec.tm.specificity),
            states_per_action: cli.states.or(file_tm.states).unwrap_or(128),
        };
        let epochs = cli.epochs.or(file_tm.epochs).unwrap_or(spec.tm.epochs);
        let n_bins = cli.n_bins.or(file_tm.n_bins).unwrap_or(spec.tm.n_bins);
        let smote_k = cli.smote_k.or(file_tm.smote_k).unwrap_or(5);
        let apply_smote = if cli.no_smote { false } else { file_tm.smote.unwrap_or(true) };

        let averaging: Averaging = cli
            .averaging
            .clone()
            .or_else(|| file.averaging.clone())
            .unwrap_or_else(|| "macro".to_string())
            .parse()?;

        let config = RunConfig {
            spec,
            data_root: cli
                .data_root
                .clone()
                .or_else(|| file.data_root.clone())
                .unwrap_or_else(|| PathBuf::from(".")),
            output_dir: cli
                .output_dir
                .clone()
                .or_else(|| file.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("out")),
            seed: cli.seed.or(file.seed).unwrap_or(42),
            subsample: cli.subsample.or(file.subsample).unwrap_or(1.0),
            threads: cli.threads.or(file.threads).unwrap_or(0),
            pipeline: PipelineConfig {
                params,
                epochs,
                n_bins,
                smote_k,
                averaging,
                apply_smote,
            },
            clauses_total,
        };
        config.validate()?;
        Ok(config)
    }

    /// Range checks beyond what the core validators enforce, so bad values
    /// fail before any data is touched.
    pub fn validate(&self) -> Result<()> {
        self.pipeline.validate()?;
        let p = &self.pipeline.params;
        if p.clauses_per_class > MAX_CLAUSES {
            return Err(Error::Usage(format!(
                "clauses per class {} exceeds the supported maximum {MAX_CLAUSES}",
                p.clauses_per_class
            )));
        }
        if p.threshold > MAX_THRESHOLD {
            return Err(Error::Usage(format!(
                "threshold {} exceeds the supported maximum {MAX_THRESHOLD}",
                p.threshold
            )));
        }
        if self.pipeline.epochs > MAX_EPOCHS {
            return Err(Error::Usage(format!(
                "epochs {} exceeds the supported maximum {MAX_EPOCHS}",
                self.pipeline.epochs
            )));
        }
        if self.pipeline.n_bins > MAX_BINS {
            return Err(Error::Usage(format!(
                "n_bins {} exceeds the supported maximum {MAX_BINS}",
                self.pipeline.n_bins
            )));
        }
        if !(0.0 < self.subsample && self.subsample <= 1.0) {
            return Err(Error::Usage(format!(
                "subsample fraction must be in (0, 1], got {}",
                self.subsample
            )));
        }
        Ok(())
    }

    /// The resolved settings as a config file document; parsing it back
    /// resolves to the same configuration.
    pub fn to_file_config(&self) -> FileConfig {
        FileConfig {
            scenario: Some(self.spec.id.to_string()),
            manifest: None,
            data_root: Some(self.data_root.clone()),
            output_dir: Some(self.output_dir.clone()),
            seed: Some(self.seed),
            subsample: Some(self.subsample),
            averaging: Some(match self.pipeline.averaging {
                Averaging::Macro => "macro".to_string(),
                Averaging::Weighted => "weighted".to_string(),
            }),
            threads: Some(self.threads),
            tm: Some(TmFileConfig {
                clauses: Some(if self.clauses_total {
                    self.pipeline.params.clauses_per_class * self.spec.num_classes()
                } else {
                    self.pipeline.params.clauses_per_class
                }),
                clauses_total: Some(self.clauses_total),
                threshold: Some(self.pipeline.params.threshold),
                specificity: Some(self.pipeline.params.specificity),
                epochs: Some(self.pipeline.epochs),
                n_bins: Some(self.pipeline.n_bins),
                states: Some(self.pipeline.params.states_per_action),
                smote_k: Some(self.pipeline.smote_k),
                smote: Some(self.pipeline.apply_smote),
            }),
        }
    }
}

/// Stage-specific seed derived from the run seed; stable across commands so
/// each pipeline stage draws from its own stream.
pub fn stage_seed(seed: u64, stage: &str) -> u64 {
    // FNV-1a over the stage tag, mixed with the run seed
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in stage.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash ^ seed.rotate_left(17)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_defaults_flow_through() {
        let config = RunConfig::resolve(&FileConfig::default(), &Overrides::default()).unwrap();
        assert_eq!(config.spec.id, ScenarioId::S1);
        assert_eq!(config.pipeline.params.clauses_per_class, 100);
        assert_eq!(config.pipeline.params.threshold, 10);
        assert!((config.pipeline.params.specificity - 2.0).abs() < 1e-12);
        assert_eq!(config.pipeline.epochs, 10);
        assert_eq!(config.pipeline.n_bins, 5);
        assert_eq!(config.seed, 42);
    }

    #[test]
    fn cli_overrides_beat_file_values() {
        let file = FileConfig {
            scenario: Some("s2".into()),
            seed: Some(7),
            tm: Some(TmFileConfig {
                clauses: Some(50),
                ..Default::default()
            }),
            ..Default::default()
        };
        let cli = Overrides {
            seed: Some(99),
            clauses: Some(60),
            ..Default::default()
        };
        let config = RunConfig::resolve(&file, &cli).unwrap();
        assert_eq!(config.spec.id, ScenarioId::S2);
        assert_eq!(config.seed, 99);
        assert_eq!(config.pipeline.params.clauses_per_class, 60);
        // untouched values still from the manifest
        assert!((config.pipeline.params.specificity - 5.0).abs() < 1e-12);
    }

    #[test]
    fn total_clause_budget_splits_across_classes() {
        let cli = Overrides {
            scenario: Some("s2".into()),
            clauses: Some(120),
            clauses_total: true,
            ..Default::default()
        };
        let config = RunConfig::resolve(&FileConfig::default(), &cli).unwrap();
        assert_eq!(config.pipeline.params.clauses_per_class, 20);
    }

    #[test]
    fn out_of_range_values_are_usage_errors() {
        let cli = Overrides {
            epochs: Some(1_000_000),
            ..Default::default()
        };
        assert!(matches!(
            RunConfig::resolve(&FileConfig::default(), &cli),
            Err(Error::Usage(_))
        ));

        let cli = Overrides {
            subsample: Some(1.5),
            ..Default::default()
        };
        assert!(RunConfig::resolve(&FileConfig::default(), &cli).is_err());
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cli = Overrides {
            scenario: Some("s3".into()),
            seed: Some(1234),
            subsample: Some(0.05),
            averaging: Some("weighted".into()),
            epochs: Some(3),
            ..Default::default()
        };
        let config = RunConfig::resolve(&FileConfig::default(), &cli).unwrap();
        let text = toml::to_string_pretty(&config.to_file_config()).unwrap();
        let parsed: FileConfig = toml::from_str(&text).unwrap();
        let resolved = RunConfig::resolve(&parsed, &Overrides::default()).unwrap();

        assert_eq!(resolved.spec.id, config.spec.id);
        assert_eq!(resolved.seed, config.seed);
        assert_eq!(resolved.subsample, config.subsample);
        assert_eq!(resolved.pipeline, config.pipeline);
        assert_eq!(resolved.clauses_total, config.clauses_total);
    }

    #[test]
    fn stage_seeds_differ_by_stage_and_seed() {
        assert_ne!(stage_seed(1, "smote"), stage_seed(1, "train"));
        assert_ne!(stage_seed(1, "smote"), stage_seed(2, "smote"));
        assert_eq!(stage_seed(5, "fold"), stage_seed(5, "fold"));
    }
}
