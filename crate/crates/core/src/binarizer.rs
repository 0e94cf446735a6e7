//! Quantile binning with one-hot dense encoding.
//!
//! Each real-valued feature is split at its training-data quantiles and a
//! transformed row carries exactly one set bit per feature block. Duplicate
//! quantile edges (heavily skewed counters, constant columns) collapse, so a
//! feature may contribute fewer bins than requested — down to a single
//! always-1 literal.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::FlowTable;

/// Fitted per-feature quantile bin edges.
///
/// Interior edges only: `n_bins - 1` candidate edges per feature before
/// degenerate-edge collapse, kept strictly increasing. The bin of a value `v`
/// follows the half-open convention `[edge_k, edge_{k+1})`: `v` below the
/// first edge maps to bin 0, `v` at or above the last edge to the final bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileBinner {
    feature_names: Vec<String>,
    /// Strictly increasing interior edges per feature; empty list = 1 bin.
    edges: Vec<Vec<f64>>,
    n_bins: usize,
}

/// Linear-interpolation quantile of a sorted slice: for fraction `q`, the
/// value at rank `(len - 1) * q` interpolated between neighboring order
/// statistics.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

impl QuantileBinner {
    /// Fits interior edges at the `k/n_bins` quantiles (`k = 1..n_bins-1`) of
    /// each column of `table`, collapsing duplicate edges.
    pub fn fit(table: &FlowTable, n_bins: usize) -> Result<Self> {
        if n_bins < 2 {
            return Err(Error::Usage(format!("n_bins must be >= 2, got {n_bins}")));
        }
        if table.num_rows() == 0 {
            return Err(Error::Usage("cannot fit binner on an empty table".into()));
        }
        if table.num_rows() < n_bins {
            return Err(Error::Usage(format!(
                "need at least n_bins={} rows to fit quantile edges, table has {}",
                n_bins,
                table.num_rows()
            )));
        }
        let mut edges = Vec::with_capacity(table.num_columns());
        for col in 0..table.num_columns() {
            let mut values = table.column(col);
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data(format!(
                    "column {} contains non-finite values; run clean first",
                    table.columns()[col]
                )));
            }
            values.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
            let mut column_edges: Vec<f64> = Vec::with_capacity(n_bins - 1);
            if values[0] < values[values.len() - 1] {
                for k in 1..n_bins {
                    let edge = quantile_sorted(&values, k as f64 / n_bins as f64);
                    if column_edges.last().map_or(true, |&prev| edge > prev) {
                        column_edges.push(edge);
                    }
                }
            }
            // constant column: no edges, a single always-1 literal
            edges.push(column_edges);
        }
        Ok(QuantileBinner {
            feature_names: table.columns().to_vec(),
            edges,
            n_bins,
        })
    }

    /// Rebuilds a binner from persisted edges.
    pub fn from_parts(feature_names: Vec<String>, edges: Vec<Vec<f64>>, n_bins: usize) -> Result<Self> {
        if feature_names.len() != edges.len() {
            return Err(Error::ModelFormat(format!(
                "{} feature names vs {} edge lists",
                feature_names.len(),
                edges.len()
            )));
        }
        for (name, feature_edges) in feature_names.iter().zip(&edges) {
            if !feature_edges.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::ModelFormat(format!(
                    "edges for feature {name} are not strictly increasing"
                )));
            }
        }
        Ok(QuantileBinner {
            feature_names,
            edges,
            n_bins,
        })
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn num_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Interior edges of one feature.
    pub fn edges(&self, feature: usize) -> &[f64] {
        &self.edges[feature]
    }

    /// Effective bin count of one feature after edge collapse.
    pub fn effective_bins(&self, feature: usize) -> usize {
        self.edges[feature].len() + 1
    }

    /// Total transformed width: sum of effective bin counts.
    pub fn num_literals(&self) -> usize {
        self.edges.iter().map(|e| e.len() + 1).sum()
    }

    /// Bin index of `value` within `feature`'s edge list.
    pub fn bin_index(&self, feature: usize, value: f64) -> usize {
        self.edges[feature].partition_point(|&edge| edge <= value)
    }

    /// One name per output literal: `feature=binK` in block order.
    pub fn literal_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.num_literals());
        for (f, name) in self.feature_names.iter().enumerate() {
            for k in 0..self.effective_bins(f) {
                names.push(format!("{name}=bin{k}"));
            }
        }
        names
    }

    /// Human-readable half-open interval of one bin, in the standardized
    /// feature scale.
    pub fn bin_interval(&self, feature: usize, bin: usize) -> String {
        let edges = &self.edges[feature];
        if edges.is_empty() {
            return "(-inf, inf)".to_string();
        }
        if bin == 0 {
            format!("(-inf, {})", edges[0])
        } else if bin >= edges.len() {
            format!("[{}, inf)", edges[edges.len() - 1])
        } else {
            format!("[{}, {})", edges[bin - 1], edges[bin])
        }
    }

    /// One-hot transform of a single row of standardized features.
    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<u8>> {
        if row.len() != self.num_features() {
            return Err(Error::Dimension(format!(
                "binner expects {} features, row has {}",
                self.num_features(),
                row.len()
            )));
        }
        let mut bits = Vec::with_capacity(self.num_literals());
        for (f, &value) in row.iter().enumerate() {
            if value.is_nan() {
                return Err(Error::Data(format!(
                    "NaN in feature {}; cleaning must remove missing values before binarization",
                    self.feature_names[f]
                )));
            }
            let bin = self.bin_index(f, value);
            let width = self.effective_bins(f);
            for k in 0..width {
                bits.push(u8::from(k == bin));
            }
        }
        Ok(bits)
    }

    /// Transforms every row of `table` into bit vectors, in row order.
    pub fn transform_table(&self, table: &FlowTable) -> Result<Vec<Vec<u8>>> {
        if table.columns() != self.feature_names.as_slice() {
            return Err(Error::Schema {
                context: "binner transform".into(),
                missing: self
                    .feature_names
                    .iter()
                    .filter(|n| !table.columns().contains(n))
                    .cloned()
                    .collect(),
                extra: table
                    .columns()
                    .iter()
                    .filter(|n| !self.feature_names.contains(n))
                    .cloned()
                    .collect(),
            });
        }
        (0..table.num_rows()).map(|r| self.transform_row(table.row(r))).collect()
    }
}
