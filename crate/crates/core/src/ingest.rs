//! Scenario schemas and CSV ingestion.
//!
//! A scenario manifest pins the expected feature columns, the class list and
//! its index order, label aliases, and the train/test file sets. The three
//! shipped manifests are embedded so the binary works from any directory;
//! custom manifests can be loaded from disk and act as the adaptation point
//! when a local dataset copy spells columns or files differently.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::preprocess::FlowTable;

const S1_MANIFEST: &str = include_str!("../../../manifests/s1.toml");
const S2_MANIFEST: &str = include_str!("../../../manifests/s2.toml");
const S3_MANIFEST: &str = include_str!("../../../manifests/s3.toml");

/// The three classification scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioId {
    S1,
    S2,
    S3,
}

impl FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "s1" | "1" => Ok(ScenarioId::S1),
            "s2" | "2" => Ok(ScenarioId::S2),
            "s3" | "3" => Ok(ScenarioId::S3),
            other => Err(Error::Usage(format!("unknown scenario {other:?}; expected S1, S2 or S3"))),
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioId::S1 => write!(f, "S1"),
            ScenarioId::S2 => write!(f, "S2"),
            ScenarioId::S3 => write!(f, "S3"),
        }
    }
}

/// One input CSV: where it lives, the label applied to its rows when the
/// file itself has no label column, and the schema it was extracted with
/// (for scenarios that merge protocols).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileEntry {
    pub path: PathBuf,
    pub label: Option<String>,
    pub schema: Option<ScenarioId>,
}

/// Per-scenario training defaults.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct TmDefaults {
    pub clauses: usize,
    pub threshold: u32,
    pub specificity: f64,
    pub epochs: usize,
    pub n_bins: usize,
}

/// A validated scenario schema.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub id: ScenarioId,
    pub protocol: String,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    /// Lowercased label variant -> canonical class name.
    pub aliases: HashMap<String, String>,
    pub train_files: Vec<FileEntry>,
    pub test_files: Vec<FileEntry>,
    pub tm: TmDefaults,
}

#[derive(Deserialize)]
struct ManifestDoc {
    id: String,
    #[serde(default)]
    protocol: String,
    classes: Vec<String>,
    features: Option<Vec<String>>,
    derive_features: Option<DeriveFeaturesDoc>,
    #[serde(default)]
    aliases: HashMap<String, String>,
    tm: TmDefaults,
    #[serde(default)]
    train_files: Vec<FileEntryDoc>,
    #[serde(default)]
    test_files: Vec<FileEntryDoc>,
}

#[derive(Deserialize)]
struct DeriveFeaturesDoc {
    intersect: Vec<String>,
}

#[derive(Deserialize)]
struct FileEntryDoc {
    path: String,
    label: Option<String>,
    schema: Option<String>,
}

impl ScenarioSpec {
    /// The embedded manifest for one of the three shipped scenarios.
    pub fn builtin(id: ScenarioId) -> Result<Self> {
        let text = match id {
            ScenarioId::S1 => S1_MANIFEST,
            ScenarioId::S2 => S2_MANIFEST,
            ScenarioId::S3 => S3_MANIFEST,
        };
        Self::parse(text, &format!("builtin manifest {id}"))
    }

    /// Loads and validates a manifest file.
    pub fn from_manifest_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::parse(&text, &path.display().to_string())
    }

    fn parse(text: &str, context: &str) -> Result<Self> {
        let doc: ManifestDoc =
            toml::from_str(text).map_err(|e| Error::Data(format!("{context}: {e}")))?;
        let id: ScenarioId = doc.id.parse()?;

        let feature_names = match (doc.features, doc.derive_features) {
            (Some(f), None) => f,
            (None, Some(derive)) => {
                let mut parents = derive.intersect.iter();
                let first: ScenarioId = parents
                    .next()
                    .ok_or_else(|| Error::Data(format!("{context}: empty intersect list")))?
                    .parse()?;
                let mut features = Self::builtin(first)?.feature_names;
                for p in parents {
                    let parent: ScenarioId = p.parse()?;
                    features = common_features_by_name(&features, &Self::builtin(parent)?.feature_names)?;
                }
                features
            }
            (Some(_), Some(_)) => {
                return Err(Error::Data(format!(
                    "{context}: give either features or derive_features, not both"
                )))
            }
            (None, None) => {
                return Err(Error::Data(format!(
                    "{context}: manifest lists neither features nor derive_features"
                )))
            }
        };

        if doc.classes.len() < 2 {
            return Err(Error::Data(format!("{context}: need at least two classes")));
        }
        let mut aliases = HashMap::new();
        for (variant, canonical) in doc.aliases {
            if !doc.classes.contains(&canonical) {
                return Err(Error::Data(format!(
                    "{context}: alias {variant:?} points at unknown class {canonical:?}"
                )));
            }
            aliases.insert(variant.to_lowercase(), canonical);
        }

        let convert = |entries: Vec<FileEntryDoc>| -> Result<Vec<FileEntry>> {
            entries
                .into_iter()
                .map(|e| {
                    Ok(FileEntry {
                        path: PathBuf::from(e.path),
                        label: e.label,
                        schema: e.schema.as_deref().map(str::parse).transpose()?,
                    })
                })
                .collect()
        };

        Ok(ScenarioSpec {
            id,
            protocol: doc.protocol,
            feature_names,
            class_names: doc.classes,
            aliases,
            train_files: convert(doc.train_files)?,
            test_files: convert(doc.test_files)?,
            tm: doc.tm,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn num_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Canonical class name for a raw label string, using case-insensitive
    /// matching and the alias table.
    pub fn normalize_label(&self, raw: &str) -> Result<String> {
        let trimmed = raw.trim();
        if let Some(name) = self.class_names.iter().find(|c| c.as_str() == trimmed) {
            return Ok(name.clone());
        }
        if let Some(name) = self
            .class_names
            .iter()
            .find(|c| c.eq_ignore_ascii_case(trimmed))
        {
            return Ok(name.clone());
        }
        if let Some(name) = self.aliases.get(&trimmed.to_lowercase()) {
            return Ok(name.clone());
        }
        Err(Error::Data(format!(
            "unknown label {trimmed:?} for scenario {}; expected one of {:?}",
            self.id, self.class_names
        )))
    }

    /// Stable class index of a canonical class name.
    pub fn class_index(&self, name: &str) -> Result<usize> {
        self.class_names
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Data(format!("unknown class {name:?} for scenario {}", self.id)))
    }
}

/// Order-preserving intersection of two feature lists (order of `a`).
pub fn common_features(a: &ScenarioSpec, b: &ScenarioSpec) -> Result<Vec<String>> {
    common_features_by_name(&a.feature_names, &b.feature_names)
}

fn common_features_by_name(a: &[String], b: &[String]) -> Result<Vec<String>> {
    let common: Vec<String> = a.iter().filter(|n| b.contains(n)).cloned().collect();
    if common.is_empty() {
        return Err(Error::Data("feature lists have an empty intersection".into()));
    }
    Ok(common)
}

/// Loads one CSV against an expected feature list.
///
/// Columns are reordered to the canonical order; unexpected or missing
/// columns are an error naming them. A column named `label` (any case)
/// carries per-row labels; otherwise `default_label` applies to every row.
/// Unparsable numeric cells become NaN for the cleaning stage to drop.
pub fn load_csv(path: &Path, features: &[String], default_label: Option<&str>) -> Result<FlowTable> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Data(format!("bad header in {}: {e}", path.display())))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    let label_col = headers.iter().position(|h| h.eq_ignore_ascii_case("label"));
    if label_col.is_none() && default_label.is_none() {
        return Err(Error::Data(format!(
            "{} has no label column and no per-file label was given",
            path.display()
        )));
    }

    // map canonical feature order -> csv column position
    let mut positions = Vec::with_capacity(features.len());
    let mut missing = Vec::new();
    for feature in features {
        match headers.iter().position(|h| h == feature) {
            Some(p) => positions.push(p),
            None => missing.push(feature.clone()),
        }
    }
    let extra: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, h)| Some(*i) != label_col && !features.contains(h))
        .map(|(_, h)| h.clone())
        .collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(Error::Schema {
            context: path.display().to_string(),
            missing,
            extra,
        });
    }

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| Error::Data(format!("{} row {}: {e}", path.display(), line + 2)))?;
        let row: Vec<f64> = positions
            .iter()
            .map(|&p| crate::preprocess::parse_cell(record.get(p).unwrap_or("")))
            .collect();
        let label = match label_col {
            Some(c) => record.get(c).unwrap_or("").to_string(),
            None => default_label.expect("checked above").to_string(),
        };
        rows.push(row);
        labels.push(label);
    }
    FlowTable::new(features.to_vec(), rows, labels, "")
}

/// Assembled scenario data with per-class counts for comparison against the
/// published totals.
#[derive(Debug, Clone)]
pub struct Assembled {
    pub train: FlowTable,
    pub test: FlowTable,
    /// Pre-cleaning per-class row counts, in scenario class order.
    pub train_counts: Vec<(String, usize)>,
    pub test_counts: Vec<(String, usize)>,
}

/// Loads, labels, and merges every file of the scenario's train/test sets.
///
/// Files carrying a different source schema (Scenario 3 merges Bluetooth and
/// MQTT/Wi-Fi extractions) are loaded against that schema and projected onto
/// the scenario's feature list. Bluetooth DoS rows are relabeled `DoS_bt`
/// under Scenario 3.
pub fn assemble_scenario(spec: &ScenarioSpec, data_root: &Path) -> Result<Assembled> {
    let train = assemble_split(spec, data_root, &spec.train_files)?;
    let test = assemble_split(spec, data_root, &spec.test_files)?;
    let train_counts = counts_in_class_order(&train, spec);
    let test_counts = counts_in_class_order(&test, spec);
    Ok(Assembled {
        train,
        test,
        train_counts,
        test_counts,
    })
}

fn assemble_split(spec: &ScenarioSpec, data_root: &Path, entries: &[FileEntry]) -> Result<FlowTable> {
    if entries.is_empty() {
        return Err(Error::Usage(format!(
            "scenario {} manifest lists no files for this split",
            spec.id
        )));
    }
    let mut merged: Option<FlowTable> = None;
    for entry in entries {
        let source_features = match entry.schema {
            Some(schema) if schema != spec.id => ScenarioSpec::builtin(schema)?.feature_names,
            _ => spec.feature_names.clone(),
        };
        let path = data_root.join(&entry.path);
        let mut table = load_csv(&path, &source_features, entry.label.as_deref())?;

        // canonical labels, then the scenario-3 Bluetooth relabel
        let mut relabeled = Vec::with_capacity(table.num_rows());
        for r in 0..table.num_rows() {
            let mut label = spec.normalize_label(table.label(r))?;
            if spec.id == ScenarioId::S3 && entry.schema == Some(ScenarioId::S1) && label == "DoS" {
                label = "DoS_bt".to_string();
            }
            relabeled.push(label);
        }
        table = FlowTable::new(
            table.columns().to_vec(),
            table.rows().to_vec(),
            relabeled,
            spec.id.to_string(),
        )?;

        if table.columns() != spec.feature_names.as_slice() {
            table = table.select_columns(&spec.feature_names)?;
        }

        merged = Some(match merged {
            None => table,
            Some(mut acc) => {
                for r in 0..table.num_rows() {
                    acc.push_row(table.row(r).to_vec(), table.label(r).to_string())?;
                }
                acc
            }
        });
    }
    let table = merged.expect("at least one entry");
    FlowTable::new(
        table.columns().to_vec(),
        table.rows().to_vec(),
        table.labels().to_vec(),
        spec.id.to_string(),
    )
}

/// Per-class counts in scenario class order (absent classes count 0).
pub fn counts_in_class_order(table: &FlowTable, spec: &ScenarioSpec) -> Vec<(String, usize)> {
    spec.class_names
        .iter()
        .map(|c| {
            let n = table.labels().iter().filter(|l| *l == c).count();
            (c.clone(), n)
        })
        .collect()
}

/// Seeded stratified subsample: keeps `round(fraction * count)` rows per
/// class (at least one), in original row order.
pub fn stratified_subsample(table: &FlowTable, fraction: f64, rng: &mut ChaCha8Rng) -> Result<FlowTable> {
    if !(0.0 < fraction && fraction <= 1.0) {
        return Err(Error::Usage(format!(
            "subsample fraction must be in (0, 1], got {fraction}"
        )));
    }
    if fraction == 1.0 {
        return Ok(table.clone());
    }
    let mut by_class: Vec<(String, Vec<usize>)> = Vec::new();
    for r in 0..table.num_rows() {
        match by_class.iter_mut().find(|(l, _)| l == table.label(r)) {
            Some((_, v)) => v.push(r),
            None => by_class.push((table.label(r).to_string(), vec![r])),
        }
    }
    let mut selected = Vec::new();
    for (_, mut indices) in by_class {
        let keep = ((indices.len() as f64 * fraction).round() as usize).max(1);
        indices.shuffle(rng);
        indices.truncate(keep);
        selected.extend(indices);
    }
    selected.sort_unstable();
    table.select_rows(&selected)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;

    use super::*;

    #[test]
    fn builtin_manifests_parse() {
        let s1 = ScenarioSpec::builtin(ScenarioId::S1).unwrap();
        assert_eq!(s1.num_features(), 27);
        assert_eq!(s1.class_names, vec!["Benign", "DoS"]);
        assert_eq!(s1.tm.clauses, 100);
        assert!((s1.tm.specificity - 2.0).abs() < 1e-12);

        let s2 = ScenarioSpec::builtin(ScenarioId::S2).unwrap();
        assert_eq!(s2.num_features(), 38);
        assert_eq!(s2.num_classes(), 6);
        assert_eq!(s2.tm.epochs, 15);

        let s3 = ScenarioSpec::builtin(ScenarioId::S3).unwrap();
        assert_eq!(s3.num_classes(), 7);
        assert_eq!(s3.class_names.last().unwrap(), "DoS_bt");
        assert_eq!(s3.tm.clauses, 120);
        assert_eq!(s3.tm.threshold, 15);
    }

    #[test]
    fn common_features_is_the_eleven_shared_names() {
        let s1 = ScenarioSpec::builtin(ScenarioId::S1).unwrap();
        let s2 = ScenarioSpec::builtin(ScenarioId::S2).unwrap();
        let common = common_features(&s1, &s2).unwrap();
        assert_eq!(
            common,
            vec![
                "Header_Length",
                "Protocol_Type",
                "Tot_sum",
                "Min",
                "Max",
                "AVG",
                "Std",
                "Tot_size",
                "IAT",
                "Number",
                "Variance"
            ]
        );
        // the derived S3 schema uses exactly this list
        let s3 = ScenarioSpec::builtin(ScenarioId::S3).unwrap();
        assert_eq!(s3.feature_names, common);
    }

    #[test]
    fn common_features_identity_and_disjoint() {
        let s1 = ScenarioSpec::builtin(ScenarioId::S1).unwrap();
        assert_eq!(common_features(&s1, &s1).unwrap(), s1.feature_names);

        let mut other = s1.clone();
        other.feature_names = vec!["nothing_shared".into()];
        assert!(common_features(&s1, &other).is_err());
    }

    #[test]
    fn label_normalization_and_aliases() {
        let s2 = ScenarioSpec::builtin(ScenarioId::S2).unwrap();
        assert_eq!(s2.normalize_label("ddos").unwrap(), "DDoS");
        assert_eq!(s2.normalize_label(" Benign ").unwrap(), "Benign");
        assert_eq!(s2.normalize_label("Reconnaissance").unwrap(), "Recon");
        let err = s2.normalize_label("martian").unwrap_err();
        assert!(err.to_string().contains("martian"));
    }

    fn write_csv(dir: &Path, name: &str, header: &str, rows: &[&str]) -> PathBuf {
        let path = dir.join(name);
        let mut text = String::from(header);
        text.push('\n');
        for r in rows {
            text.push_str(r);
            text.push('\n');
        }
        std::fs::write(&path, text).unwrap();
        path
    }

    #[test]
    fn load_csv_reorders_permuted_headers() {
        let dir = tempfile::tempdir().unwrap();
        let features = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let p1 = write_csv(dir.path(), "in_order.csv", "a,b,c,label", &["1,2,3,X"]);
        let p2 = write_csv(dir.path(), "permuted.csv", "c,label,a,b", &["3,X,1,2"]);
        let t1 = load_csv(&p1, &features, None).unwrap();
        let t2 = load_csv(&p2, &features, None).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(t1.row(0), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn load_csv_names_missing_and_extra_columns() {
        let dir = tempfile::tempdir().unwrap();
        let features = vec!["a".to_string(), "IAT".to_string()];
        let path = write_csv(dir.path(), "bad.csv", "a,bogus,label", &["1,2,X"]);
        match load_csv(&path, &features, None).unwrap_err() {
            Error::Schema { missing, extra, .. } => {
                assert_eq!(missing, vec!["IAT".to_string()]);
                assert_eq!(extra, vec!["bogus".to_string()]);
            }
            other => panic!("expected schema error, got {other}"),
        }
    }

    #[test]
    fn assemble_merges_relabels_and_projects() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = ScenarioSpec::builtin(ScenarioId::S3).unwrap();
        let s1 = ScenarioSpec::builtin(ScenarioId::S1).unwrap();
        let s2 = ScenarioSpec::builtin(ScenarioId::S2).unwrap();

        let s1_header = format!("{},label", s1.feature_names.join(","));
        let s1_row = format!("{},DoS", (0..27).map(|i| i.to_string()).collect::<Vec<_>>().join(","));
        write_csv(dir.path(), "bt.csv", &s1_header, &[&s1_row]);

        let s2_header = format!("{},label", s2.feature_names.join(","));
        let s2_row = format!("{},Benign", (0..38).map(|i| (100 + i).to_string()).collect::<Vec<_>>().join(","));
        write_csv(dir.path(), "wifi.csv", &s2_header, &[&s2_row]);

        spec.train_files = vec![
            FileEntry {
                path: "bt.csv".into(),
                label: None,
                schema: Some(ScenarioId::S1),
            },
            FileEntry {
                path: "wifi.csv".into(),
                label: None,
                schema: Some(ScenarioId::S2),
            },
        ];
        spec.test_files = spec.train_files.clone();

        let assembled = assemble_scenario(&spec, dir.path()).unwrap();
        assert_eq!(assembled.train.num_columns(), 11);
        assert_eq!(assembled.train.label(0), "DoS_bt");
        assert_eq!(assembled.train.label(1), "Benign");
        // Header_Length is column 0 in both schemas here
        assert_eq!(assembled.train.row(0)[0], 0.0);
        assert_eq!(assembled.train.row(1)[0], 100.0);
        let dos_bt = assembled.train_counts.iter().find(|(c, _)| c == "DoS_bt").unwrap();
        assert_eq!(dos_bt.1, 1);
    }

    #[test]
    fn subsample_is_stratified_and_seeded() {
        let rows: Vec<Vec<f64>> = (0..1000).map(|i| vec![i as f64]).collect();
        let labels: Vec<String> = (0..1000)
            .map(|i| if i % 10 == 0 { "rare".into() } else { "common".into() })
            .collect();
        let table = FlowTable::new(vec!["x".into()], rows, labels, "t").unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let sub = stratified_subsample(&table, 0.1, &mut rng).unwrap();
        let counts = crate::preprocess::class_counts(&sub);
        let common = counts.iter().find(|(c, _)| c == "common").unwrap().1;
        let rare = counts.iter().find(|(c, _)| c == "rare").unwrap().1;
        assert_eq!(common, 90);
        assert_eq!(rare, 10);

        let mut rng2 = ChaCha8Rng::seed_from_u64(8);
        let sub2 = stratified_subsample(&table, 0.1, &mut rng2).unwrap();
        assert_eq!(sub, sub2);
    }
}
