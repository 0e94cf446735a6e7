//! Versioned model persistence.
//!
//! A model file is a single JSON document bundling everything prediction
//! needs: hyperparameters, the training seed, the class map, the fitted
//! standardizer and binner, literal names, and every automaton state.
//! Floating-point values are written in shortest round-trip notation, so a
//! save/load cycle is bit-exact and re-saving is byte-identical.

use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::binarizer::QuantileBinner;
use crate::error::{Error, Result};
use crate::metrics::Averaging;
use crate::preprocess::StandardizerStats;
use crate::tm::{TmParams, TsetlinModel};

pub const MODEL_FORMAT: &str = "tmids-model";
pub const MODEL_VERSION: u32 = 1;

/// A trained model plus the preprocessing state needed to score raw flows.
#[derive(Debug, Clone, PartialEq)]
pub struct PersistedModel {
    pub scenario: String,
    pub class_names: Vec<String>,
    pub averaging: Averaging,
    pub standardizer: StandardizerStats,
    pub binner: QuantileBinner,
    pub model: TsetlinModel,
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    format: String,
    version: u32,
    scenario: String,
    class_names: Vec<String>,
    averaging: Averaging,
    params: TmParams,
    seed: u64,
    standardizer: StandardizerDoc,
    binner: BinnerDoc,
    literal_names: Vec<String>,
    /// Class-major clause rows of `2d` automaton states each.
    clause_states: Vec<Vec<u16>>,
    fire_counts: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct StandardizerDoc {
    columns: Vec<String>,
    mean: Vec<f64>,
    std: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct BinnerDoc {
    feature_names: Vec<String>,
    edges: Vec<Vec<f64>>,
    n_bins: usize,
}

impl PersistedModel {
    fn to_doc(&self) -> ModelDoc {
        ModelDoc {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            scenario: self.scenario.clone(),
            class_names: self.class_names.clone(),
            averaging: self.averaging,
            params: *self.model.params(),
            seed: self.model.rng_seed(),
            standardizer: StandardizerDoc {
                columns: self.standardizer.columns().to_vec(),
                mean: self.standardizer.mean().to_vec(),
                std: self.standardizer.std().to_vec(),
            },
            binner: BinnerDoc {
                feature_names: self.binner.feature_names().to_vec(),
                edges: (0..self.binner.num_features())
                    .map(|f| self.binner.edges(f).to_vec())
                    .collect(),
                n_bins: self.binner.n_bins(),
            },
            literal_names: self.model.literal_names().to_vec(),
            clause_states: self
                .model
                .clauses()
                .iter()
                .map(|c| c.automata.iter().map(|a| a.state()).collect())
                .collect(),
            fire_counts: self.model.fire_counts().to_vec(),
        }
    }

    fn from_doc(doc: ModelDoc) -> Result<Self> {
        if doc.format != MODEL_FORMAT {
            return Err(Error::ModelFormat(format!(
                "unexpected format marker {:?}, expected {MODEL_FORMAT:?}",
                doc.format
            )));
        }
        if doc.version != MODEL_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported model version {}, this build reads version {MODEL_VERSION}",
                doc.version
            )));
        }
        let standardizer = StandardizerStats::from_parts(
            doc.standardizer.columns,
            doc.standardizer.mean,
            doc.standardizer.std,
        )?;
        let binner = QuantileBinner::from_parts(doc.binner.feature_names, doc.binner.edges, doc.binner.n_bins)?;
        let model = TsetlinModel::restore(
            doc.class_names.len(),
            doc.literal_names,
            doc.params,
            doc.seed,
            doc.clause_states,
            doc.fire_counts,
        )?;
        Ok(PersistedModel {
            scenario: doc.scenario,
            class_names: doc.class_names,
            averaging: doc.averaging,
            standardizer,
            binner,
            model,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        serde_json::to_writer(BufWriter::new(file), &self.to_doc())
            .map_err(|e| Error::ModelFormat(format!("cannot serialize model: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let doc: ModelDoc = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::ModelFormat(format!("{}: {e}", path.display())))?;
        Self::from_doc(doc)
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::preprocess::FlowTable;
    use crate::tm::BinarizedSample;

    fn fixture() -> PersistedModel {
        let table = FlowTable::new(
            vec!["a".into(), "b".into()],
            (0..12).map(|i| vec![i as f64, (i * i) as f64 * 0.125]).collect(),
            (0..12).map(|i| if i % 2 == 0 { "X".into() } else { "Y".into() }).collect(),
            "S1",
        )
        .unwrap();
        let standardizer = StandardizerStats::fit(&table).unwrap();
        let standardized = standardizer.apply(&table).unwrap();
        let binner = QuantileBinner::fit(&standardized, 3).unwrap();

        let mut model = TsetlinModel::new(
            2,
            binner.literal_names(),
            TmParams {
                clauses_per_class: 4,
                threshold: 3,
                specificity: 2.5,
                states_per_action: 32,
            },
            99,
        )
        .unwrap();
        let samples: Vec<BinarizedSample> = (0..standardized.num_rows())
            .map(|r| {
                let bits = binner.transform_row(standardized.row(r)).unwrap();
                BinarizedSample::new(bits, usize::from(standardized.label(r) == "Y")).unwrap()
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        model.fit(&samples, None, 3, &mut rng).unwrap();

        PersistedModel {
            scenario: "S1".into(),
            class_names: vec!["X".into(), "Y".into()],
            averaging: Averaging::Macro,
            standardizer,
            binner,
            model,
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let original = fixture();
        original.save(&path).unwrap();
        let loaded = PersistedModel::load(&path).unwrap();
        assert_eq!(original, loaded);

        // re-saving writes identical bytes
        let path2 = dir.path().join("model2.json");
        loaded.save(&path2).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn version_and_format_are_checked() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let original = fixture();
        original.save(&path).unwrap();

        let text = std::fs::read_to_string(&path).unwrap();
        let bad_version = text.replacen("\"version\":1", "\"version\":9", 1);
        std::fs::write(&path, bad_version).unwrap();
        assert!(PersistedModel::load(&path).is_err());

        let bad_format = text.replacen("tmids-model", "other-model", 1);
        std::fs::write(&path, bad_format).unwrap();
        assert!(PersistedModel::load(&path).is_err());
    }

    #[test]
    fn corrupt_states_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let original = fixture();
        original.save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        // state 0 is outside [1, 2N]
        let corrupted = text.replacen("\"clause_states\":[[", "\"clause_states\":[[0,", 1);
        std::fs::write(&path, corrupted).unwrap();
        assert!(PersistedModel::load(&path).is_err());
    }
}
