//! Data preparation: the flow-feature table, cleaning, z-score
//! standardization, and SMOTE oversampling.

mod smote;
mod table;

pub use smote::{smote, SmoteReport};
pub(crate) use table::parse_cell;
pub use table::{class_counts, FlowTable};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counts from one [`clean`] pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanReport {
    pub rows_in: usize,
    pub dropped_non_finite: usize,
    pub dropped_duplicates: usize,
    pub rows_out: usize,
}

/// Drops rows with any missing/non-finite value, then exact duplicates.
///
/// The duplicate key is the full `(features, label)` tuple, so rows identical
/// in features but labeled differently are both kept. Column and row order
/// are preserved otherwise.
pub fn clean(raw: &FlowTable) -> Result<(FlowTable, CleanReport)> {
    use std::collections::HashSet;

    let rows_in = raw.num_rows();
    let mut seen: HashSet<(Vec<u64>, &str)> = HashSet::with_capacity(rows_in);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut dropped_non_finite = 0;
    let mut dropped_duplicates = 0;

    for r in 0..rows_in {
        let row = raw.row(r);
        if row.iter().any(|v| !v.is_finite()) {
            dropped_non_finite += 1;
            continue;
        }
        let key: Vec<u64> = row.iter().map(|v| v.to_bits()).collect();
        if !seen.insert((key, raw.label(r))) {
            dropped_duplicates += 1;
            continue;
        }
        rows.push(row.to_vec());
        labels.push(raw.label(r).to_string());
    }

    if rows.is_empty() {
        return Err(Error::Usage(
            "cleaning removed every row; input has no usable samples".into(),
        ));
    }
    let report = CleanReport {
        rows_in,
        dropped_non_finite,
        dropped_duplicates,
        rows_out: rows.len(),
    };
    let table = FlowTable::new(raw.columns().to_vec(), rows, labels, raw.scenario())?;
    Ok((table, report))
}

/// Per-column mean and population standard deviation, fitted on training
/// data only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizerStats {
    columns: Vec<String>,
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl StandardizerStats {
    /// Fits means and population standard deviations on `train`.
    pub fn fit(train: &FlowTable) -> Result<Self> {
        if train.num_rows() == 0 {
            return Err(Error::Usage("cannot fit standardizer on an empty table".into()));
        }
        let n = train.num_rows() as f64;
        let mut mean = Vec::with_capacity(train.num_columns());
        let mut std = Vec::with_capacity(train.num_columns());
        for c in 0..train.num_columns() {
            let values = train.column(c);
            let m = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            mean.push(m);
            std.push(var.sqrt());
        }
        Ok(StandardizerStats {
            columns: train.columns().to_vec(),
            mean,
            std,
        })
    }

    /// Rebuilds standardizer stats from persisted values.
    pub fn from_parts(columns: Vec<String>, mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        if columns.len() != mean.len() || columns.len() != std.len() {
            return Err(Error::ModelFormat(format!(
                "standardizer shape mismatch: {} columns, {} means, {} stds",
                columns.len(),
                mean.len(),
                std.len()
            )));
        }
        if std.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::ModelFormat("standardizer std must be >= 0".into()));
        }
        Ok(StandardizerStats { columns, mean, std })
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    fn check_columns(&self, table: &FlowTable) -> Result<()> {
        if table.columns() != self.columns.as_slice() {
            return Err(Error::Schema {
                context: "standardizer".into(),
                missing: self.columns.iter().filter(|c| !table.columns().contains(c)).cloned().collect(),
                extra: table.columns().iter().filter(|c| !self.columns.contains(c)).cloned().collect(),
            });
        }
        Ok(())
    }

    /// `(x - mean) / std` per column; zero-variance columns map to all zeros.
    pub fn apply(&self, table: &FlowTable) -> Result<FlowTable> {
        self.check_columns(table)?;
        let rows = (0..table.num_rows())
            .map(|r| {
                table
                    .row(r)
                    .iter()
                    .enumerate()
                    .map(|(c, v)| {
                        if self.std[c] == 0.0 {
                            0.0
                        } else {
                            (v - self.mean[c]) / self.std[c]
                        }
                    })
                    .collect()
            })
            .collect();
        FlowTable::new(
            table.columns().to_vec(),
            rows,
            table.labels().to_vec(),
            table.scenario(),
        )
    }

    /// Inverse of [`apply`](Self::apply) for non-constant columns; constant
    /// columns come back as their training mean.
    pub fn invert(&self, table: &FlowTable) -> Result<FlowTable> {
        self.check_columns(table)?;
        let rows = (0..table.num_rows())
            .map(|r| {
                table
                    .row(r)
                    .iter()
                    .enumerate()
                    .map(|(c, v)| v * self.std[c] + self.mean[c])
                    .collect()
            })
            .collect();
        FlowTable::new(
            table.columns().to_vec(),
            rows,
            table.labels().to_vec(),
            table.scenario(),
        )
    }

    /// Standardizes a single feature row.
    pub fn apply_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.columns.len() {
            return Err(Error::Dimension(format!(
                "standardizer expects {} features, row has {}",
                self.columns.len(),
                row.len()
            )));
        }
        Ok(row
            .iter()
            .enumerate()
            .map(|(c, v)| if self.std[c] == 0.0 { 0.0 } else { (v - self.mean[c]) / self.std[c] })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: Vec<Vec<f64>>, labels: Vec<&str>) -> FlowTable {
        let cols = (0..rows[0].len()).map(|i| format!("c{i}")).collect();
        FlowTable::new(cols, rows, labels.into_iter().map(String::from).collect(), "test").unwrap()
    }

    #[test]
    fn clean_drops_missing_and_duplicates() {
        let t = table(
            vec![vec![1.0, 2.0], vec![1.0, f64::NAN], vec![3.0, 4.0], vec![3.0, 4.0]],
            vec!["A", "A", "B", "B"],
        );
        let (cleaned, report) = clean(&t).unwrap();
        assert_eq!(cleaned.num_rows(), 2);
        assert_eq!(report.dropped_non_finite, 1);
        assert_eq!(report.dropped_duplicates, 1);
        assert_eq!(report.rows_out, 2);
    }

    #[test]
    fn clean_keeps_same_features_with_different_labels() {
        let t = table(vec![vec![1.0, 2.0], vec![1.0, 2.0]], vec!["A", "B"]);
        let (cleaned, _) = clean(&t).unwrap();
        assert_eq!(cleaned.num_rows(), 2);
    }

    #[test]
    fn clean_is_idempotent() {
        let t = table(
            vec![vec![1.0, 2.0], vec![f64::INFINITY, 0.0], vec![1.0, 2.0], vec![5.0, 6.0]],
            vec!["A", "A", "A", "B"],
        );
        let (once, _) = clean(&t).unwrap();
        let (twice, report) = clean(&once).unwrap();
        assert_eq!(once, twice);
        assert_eq!(report.dropped_non_finite + report.dropped_duplicates, 0);
    }

    #[test]
    fn clean_rejects_empty_result() {
        let t = table(vec![vec![f64::NAN]], vec!["A"]);
        assert!(clean(&t).is_err());
    }

    #[test]
    fn standardizer_matches_hand_computation() {
        let t = table(vec![vec![1.0], vec![2.0], vec![3.0]], vec!["A", "A", "A"]);
        let stats = StandardizerStats::fit(&t).unwrap();
        assert!((stats.mean()[0] - 2.0).abs() < 1e-12);
        assert!((stats.std()[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);

        let out = stats.apply(&t).unwrap();
        let expected = [-1.224744871391589, 0.0, 1.224744871391589];
        for (r, want) in expected.iter().enumerate() {
            assert!((out.row(r)[0] - want).abs() < 1e-9);
        }

        // unseen value transformed with train stats only
        let unseen = stats.apply_row(&[4.0]).unwrap();
        assert!((unseen[0] - 2.449489742783178).abs() < 1e-9);
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let t = table(vec![vec![5.0], vec![5.0]], vec!["A", "A"]);
        let stats = StandardizerStats::fit(&t).unwrap();
        let out = stats.apply(&t).unwrap();
        assert_eq!(out.row(0)[0], 0.0);
        assert_eq!(out.row(1)[0], 0.0);
    }

    #[test]
    fn standardization_inverts_for_non_constant_columns() {
        let t = table(
            vec![vec![1.5, -2.0], vec![4.0, 0.5], vec![-3.25, 9.0]],
            vec!["A", "B", "A"],
        );
        let stats = StandardizerStats::fit(&t).unwrap();
        let back = stats.invert(&stats.apply(&t).unwrap()).unwrap();
        for r in 0..t.num_rows() {
            for c in 0..t.num_columns() {
                let raw = t.row(r)[c];
                let rec = back.row(r)[c];
                assert!((raw - rec).abs() <= 1e-6 * raw.abs().max(1.0));
            }
        }
    }
}
