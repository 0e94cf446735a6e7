//! Synthetic minority oversampling.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::table::{class_counts, FlowTable};
use crate::error::{Error, Result};

/// What one SMOTE pass did, per class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmoteReport {
    pub majority_class: String,
    pub majority_count: usize,
    /// (class, original count, synthesized count) in first-appearance order.
    pub per_class: Vec<(String, usize, usize)>,
    /// Classes whose neighbor count had to be clipped below `k_neighbors`.
    pub clipped: Vec<String>,
}

/// Balances every class up to the majority count by interpolating between a
/// minority sample and one of its `k_neighbors` nearest same-class neighbors
/// (Euclidean distance): `p + u * (q - p)` with `u` uniform in `[0, 1)`.
///
/// Original rows are preserved unchanged and come first; synthetic rows are
/// appended grouped by class in first-appearance order. `k_neighbors` is
/// clipped (with a warning) for classes smaller than `k_neighbors + 1`.
pub fn smote(train: &FlowTable, k_neighbors: usize, rng: &mut ChaCha8Rng) -> Result<(FlowTable, SmoteReport)> {
    if k_neighbors < 1 {
        return Err(Error::Usage("smote k_neighbors must be >= 1".into()));
    }
    let counts = class_counts(train);
    if counts.is_empty() {
        return Err(Error::Usage("smote on an empty table".into()));
    }
    for (class, count) in &counts {
        if *count < 2 {
            return Err(Error::Usage(format!(
                "class {class} has {count} sample(s); smote needs at least 2 per class"
            )));
        }
    }
    let (majority_class, majority_count) = counts
        .iter()
        .max_by_key(|(_, c)| *c)
        .map(|(l, c)| (l.clone(), *c))
        .expect("non-empty counts");

    let mut balanced = train.clone();
    let mut per_class = Vec::with_capacity(counts.len());
    let mut clipped = Vec::new();

    for (class, count) in &counts {
        let missing = majority_count - count;
        per_class.push((class.clone(), *count, missing));
        if missing == 0 {
            continue;
        }

        let member_rows: Vec<usize> = (0..train.num_rows())
            .filter(|&r| train.label(r) == class)
            .collect();
        let k = if k_neighbors > count - 1 {
            log::warn!(
                "smote: class {class} has {count} samples; clipping k from {k_neighbors} to {}",
                count - 1
            );
            clipped.push(class.clone());
            count - 1
        } else {
            k_neighbors
        };

        let neighbors = nearest_neighbors(train, &member_rows, k);
        for _ in 0..missing {
            let base = rng.gen_range(0..member_rows.len());
            let neighbor = neighbors[base][rng.gen_range(0..k)];
            let u: f64 = rng.gen();
            let p = train.row(member_rows[base]);
            let q = train.row(neighbor);
            let synthetic: Vec<f64> = p.iter().zip(q).map(|(a, b)| a + u * (b - a)).collect();
            balanced.push_row(synthetic, class.clone())?;
        }
    }

    let report = SmoteReport {
        majority_class,
        majority_count,
        per_class,
        clipped,
    };
    Ok((balanced, report))
}

/// For each member row, the `k` nearest other member rows by Euclidean
/// distance, ties broken by row index.
fn nearest_neighbors(table: &FlowTable, members: &[usize], k: usize) -> Vec<Vec<usize>> {
    members
        .par_iter()
        .map(|&base| {
            let mut dists: Vec<(f64, usize)> = members
                .iter()
                .filter(|&&other| other != base)
                .map(|&other| (squared_distance(table.row(base), table.row(other)), other))
                .collect();
            dists.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
            dists.truncate(k);
            dists.into_iter().map(|(_, idx)| idx).collect()
        })
        .collect()
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
