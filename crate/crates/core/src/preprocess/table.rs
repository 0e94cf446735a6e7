//! The in-memory flow-feature table.

use std::path::Path;

use crate::error::{Error, Result};

/// A numeric feature matrix with named columns, one string label per row,
/// and the scenario tag it belongs to. Missing values are carried as NaN
/// until [`clean`](super::clean) drops them.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowTable {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
    labels: Vec<String>,
    scenario: String,
}

impl FlowTable {
    pub fn new(
        columns: Vec<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<String>,
        scenario: impl Into<String>,
    ) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::Usage("table needs at least one feature column".into()));
        }
        if rows.len() != labels.len() {
            return Err(Error::Data(format!(
                "row/label count mismatch: {} rows vs {} labels",
                rows.len(),
                labels.len()
            )));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != columns.len()) {
            return Err(Error::Data(format!(
                "row {bad} has {} values, expected {}",
                rows[bad].len(),
                columns.len()
            )));
        }
        Ok(FlowTable {
            columns,
            rows,
            labels,
            scenario: scenario.into(),
        })
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.rows[r]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn label(&self, r: usize) -> &str {
        &self.labels[r]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn scenario(&self) -> &str {
        &self.scenario
    }

    /// Copy of one column, in row order.
    pub fn column(&self, c: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[c]).collect()
    }

    /// Appends a row; widths must match.
    pub fn push_row(&mut self, row: Vec<f64>, label: String) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Data(format!(
                "pushed row has {} values, expected {}",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        self.labels.push(label);
        Ok(())
    }

    /// New table containing the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<FlowTable> {
        let rows = indices.iter().map(|&i| self.rows[i].clone()).collect();
        let labels = indices.iter().map(|&i| self.labels[i].clone()).collect();
        FlowTable::new(self.columns.clone(), rows, labels, self.scenario.clone())
    }

    /// New table keeping only the named columns, in the given order.
    pub fn select_columns(&self, names: &[String]) -> Result<FlowTable> {
        let positions: Vec<usize> = names
            .iter()
            .map(|n| {
                self.columns
                    .iter()
                    .position(|c| c == n)
                    .ok_or_else(|| Error::Data(format!("column {n} not present in table")))
            })
            .collect::<Result<_>>()?;
        let rows = self
            .rows
            .iter()
            .map(|r| positions.iter().map(|&p| r[p]).collect())
            .collect();
        FlowTable::new(names.to_vec(), rows, self.labels.clone(), self.scenario.clone())
    }

    /// Replaces every label according to `rename`; labels not in the map are
    /// kept as-is.
    pub fn relabel(&mut self, rename: &std::collections::HashMap<String, String>) {
        for label in &mut self.labels {
            if let Some(new) = rename.get(label) {
                *label = new.clone();
            }
        }
    }

    /// Writes `features...,label` CSV with a header row.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)
            .map_err(|e| Error::Data(format!("cannot create {}: {e}", path.display())))?;
        let mut header: Vec<&str> = self.columns.iter().map(String::as_str).collect();
        header.push("label");
        writer
            .write_record(&header)
            .and_then(|_| {
                for (row, label) in self.rows.iter().zip(&self.labels) {
                    let mut record: Vec<String> = row.iter().map(|v| format_cell(*v)).collect();
                    record.push(label.clone());
                    writer.write_record(&record)?;
                }
                writer.flush().map_err(csv::Error::from)
            })
            .map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))
    }

    /// Reads a `features...,label` CSV written by [`write_csv`](Self::write_csv).
    ///
    /// Unparsable numeric cells become NaN so a later clean pass can drop
    /// them with row context.
    pub fn read_csv(path: &Path, scenario: impl Into<String>) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)
            .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
        let headers: Vec<String> = reader
            .headers()
            .map_err(|e| Error::Data(format!("bad header in {}: {e}", path.display())))?
            .iter()
            .map(String::from)
            .collect();
        let label_col = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case("label"))
            .ok_or_else(|| Error::Data(format!("{} has no label column", path.display())))?;
        let columns: Vec<String> = headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != label_col)
            .map(|(_, h)| h.clone())
            .collect();

        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record =
                record.map_err(|e| Error::Data(format!("{} row {}: {e}", path.display(), line + 2)))?;
            let mut row = Vec::with_capacity(columns.len());
            for (i, cell) in record.iter().enumerate() {
                if i == label_col {
                    labels.push(cell.to_string());
                } else {
                    row.push(parse_cell(cell));
                }
            }
            rows.push(row);
        }
        FlowTable::new(columns, rows, labels, scenario)
    }
}

pub(crate) fn parse_cell(cell: &str) -> f64 {
    let trimmed = cell.trim();
    if trimmed.is_empty() {
        return f64::NAN;
    }
    trimmed.parse::<f64>().unwrap_or(f64::NAN)
}

pub(crate) fn format_cell(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        // shortest representation that round-trips exactly
        format!("{v}")
    }
}

/// Per-class row counts in order of first appearance.
pub fn class_counts(table: &FlowTable) -> Vec<(String, usize)> {
    let mut order: Vec<String> = Vec::new();
    let mut counts: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
    for label in table.labels() {
        if !counts.contains_key(label.as_str()) {
            order.push(label.clone());
        }
        *counts.entry(label).or_insert(0) += 1;
    }
    order.into_iter().map(|l| {
        let c = counts[l.as_str()];
        (l, c)
    }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_rows() {
        let err = FlowTable::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 2.0], vec![1.0]],
            vec!["x".into(), "y".into()],
            "t",
        );
        assert!(err.is_err());
    }

    #[test]
    fn csv_round_trip_preserves_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let t = FlowTable::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.5, -0.25], vec![3.0000001, 1e-12]],
            vec!["X".into(), "Y".into()],
            "t",
        )
        .unwrap();
        t.write_csv(&path).unwrap();
        let back = FlowTable::read_csv(&path, "t").unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn unparsable_cells_become_nan() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, "a,b,label\n1.0,oops,X\n,2.0,Y\n").unwrap();
        let t = FlowTable::read_csv(&path, "t").unwrap();
        assert!(t.row(0)[1].is_nan());
        assert!(t.row(1)[0].is_nan());
    }

    #[test]
    fn class_counts_in_appearance_order() {
        let t = FlowTable::new(
            vec!["a".into()],
            vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]],
            vec!["B".into(), "A".into(), "B".into(), "B".into()],
            "t",
        )
        .unwrap();
        assert_eq!(class_counts(&t), vec![("B".into(), 3), ("A".into(), 1)]);
    }
}
