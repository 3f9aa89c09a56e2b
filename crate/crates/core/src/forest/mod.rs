//! Random-forest classification and permutation importance.
//!
//! Training data is an `n x d` [`nalgebra::DMatrix`] plus one class label per
//! row. Labels are arbitrary `usize` values; the forest keeps them sorted
//! ascending and that order breaks every vote tie.

mod ensemble;
mod importance;
mod metrics;
mod sampling;
mod tree;
mod tuning;

pub use ensemble::{
    default_m_try, fit_forest, fit_forest_with, oob_error, predict, predict_batch, OobEstimate,
    RandomForest,
};
pub use importance::{permutation_importance, ImportanceReport};
pub use metrics::{kappa, ConfusionMatrix};
pub use sampling::{sample_per_cluster, sample_per_cluster_indices, stratified_split};
pub use tree::{fit_tree, gini_best_split, DecisionTree, Node, Split};
pub use tuning::{default_mtry_grid, tune_mtry, TuningReport, TuningRow};

use crate::error::{Error, Result};

/// Sorted distinct labels and each row's index into them.
pub(crate) fn encode_labels(labels: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let idx = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label present"))
        .collect();
    (classes, idx)
}

/// Index of the largest count; the earliest wins ties.
pub(crate) fn plurality(counts: &[u32]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn check_labels(n_rows: usize, labels: &[usize]) -> Result<()> {
    if n_rows != labels.len() {
        return Err(Error::LengthMismatch {
            left: n_rows,
            right: labels.len(),
        });
    }
    Ok(())
}
