use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ensemble::RandomForest;
use super::check_labels;
use crate::error::{Error, Result};
use crate::rng;

/// Mean decrease in accuracy, one row per feature, one column per class plus
/// a final `overall` column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub feature_names: Vec<String>,
    pub class_labels: Vec<usize>,
    pub values: Vec<Vec<f64>>,
}

impl ImportanceReport {
    pub fn overall(&self, feature: usize) -> f64 {
        self.values[feature][self.class_labels.len()]
    }

    pub fn for_class(&self, feature: usize, class_label: usize) -> Option<f64> {
        let c = self.class_labels.iter().position(|&l| l == class_label)?;
        Some(self.values[feature][c])
    }

    /// Feature indices sorted by decreasing importance for one class
    /// (`None` ranks by the overall column). Ties keep feature order.
    pub fn ranking(&self, class_label: Option<usize>) -> Vec<usize> {
        let col = match class_label {
            Some(l) => self.class_labels.iter().position(|&c| c == l).unwrap_or(0),
            None => self.class_labels.len(),
        };
        let mut idx: Vec<usize> = (0..self.values.len()).collect();
        idx.sort_by(|&a, &b| self.values[b][col].total_cmp(&self.values[a][col]));
        idx
    }

    /// `feature,<class labels...>,overall`
    pub fn to_csv(&self) -> String {
        let mut s = String::from("feature");
        for l in &self.class_labels {
            s.push_str(&format!(",{l}"));
        }
        s.push_str(",overall\n");
        for (name, row) in self.feature_names.iter().zip(&self.values) {
            s.push_str(name);
            for v in row {
                s.push_str(&format!(",{v}"));
            }
            s.push('\n');
        }
        s
    }
}

/// Per-tree sums: `[feature][class or overall]` drops and per-column tree counts.
struct TreeContribution {
    drops: Vec<Vec<f64>>,
    used: Vec<bool>,
}

/// Permutation importance computed tree by tree on each tree's OOB rows.
///
/// For tree `t` and feature `f` the OOB values of `f` are shuffled
/// (`n_permutations` times, stream `seed ^ t`) and the loss in the tree's
/// accuracy is recorded, overall and restricted to each class. A column's
/// importance is the mean over trees that have OOB rows of that class.
/// Features a tree never splits on contribute exactly zero for that tree.
pub fn permutation_importance(
    forest: &RandomForest,
    data: &DMatrix<f64>,
    labels: &[usize],
    n_permutations: usize,
    seed: u64,
) -> Result<ImportanceReport> {
    let (n, d) = data.shape();
    check_labels(n, labels)?;
    if d != forest.n_features() {
        return Err(Error::DimensionMismatch {
            expected: forest.n_features(),
            got: d,
        });
    }
    if forest.oob_masks.iter().any(|m| m.len() != n) {
        return Err(Error::LengthMismatch {
            left: forest.oob_masks.first().map_or(0, Vec::len),
            right: n,
        });
    }
    let n_perm = n_permutations.max(1);
    let c = forest.n_classes();
    let class_of: Vec<Option<usize>> = labels
        .iter()
        .map(|l| forest.class_labels.iter().position(|x| x == l))
        .collect();

    let contributions: Vec<Option<TreeContribution>> = forest
        .trees
        .par_iter()
        .zip(&forest.oob_masks)
        .enumerate()
        .map(|(t, (tree, mask))| {
            let rows: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
            if rows.is_empty() {
                return None;
            }
            let mut per_class = vec![0usize; c];
            let mut base_correct = vec![0usize; c + 1];
            let mut base_pred = Vec::with_capacity(rows.len());
            for &i in &rows {
                let p = tree.predict_row(data, i);
                base_pred.push(p);
                if let Some(k) = class_of[i] {
                    per_class[k] += 1;
                    if p == k {
                        base_correct[k] += 1;
                        base_correct[c] += 1;
                    }
                }
            }
            let mut used = vec![false; c + 1];
            for k in 0..c {
                used[k] = per_class[k] > 0;
            }
            used[c] = true;

            let mut g = rng::stream(rng::indexed(seed, t as u64));
            let mut drops = vec![vec![0.0; c + 1]; d];
            let mut shuffled: Vec<f64> = Vec::with_capacity(rows.len());
            let mut x = vec![0.0; d];
            for (f, drop) in drops.iter_mut().enumerate() {
                if !tree.uses_feature(f) {
                    continue;
                }
                let mut acc = vec![0.0; c + 1];
                for _ in 0..n_perm {
                    shuffled.clear();
                    shuffled.extend(rows.iter().map(|&i| data[(i, f)]));
                    shuffled.shuffle(&mut g);
                    let mut correct = vec![0usize; c + 1];
                    for (pos, &i) in rows.iter().enumerate() {
                        for (j, v) in x.iter_mut().enumerate() {
                            *v = data[(i, j)];
                        }
                        x[f] = shuffled[pos];
                        let p = tree.predict_by(|j| x[j]);
                        if let Some(k) = class_of[i] {
                            if p == k {
                                correct[k] += 1;
                                correct[c] += 1;
                            }
                        }
                    }
                    for k in 0..c {
                        if per_class[k] > 0 {
                            acc[k] += (base_correct[k] as f64 - correct[k] as f64) / per_class[k] as f64;
                        }
                    }
                    acc[c] += (base_correct[c] as f64 - correct[c] as f64) / rows.len() as f64;
                }
                for (dst, a) in drop.iter_mut().zip(acc) {
                    *dst = a / n_perm as f64;
                }
            }
            Some(TreeContribution { drops, used })
        })
        .collect();

    let mut sums = vec![vec![0.0; c + 1]; d];
    let mut trees_per_col = vec![0usize; c + 1];
    for contrib in contributions.iter().flatten() {
        for (k, &u) in contrib.used.iter().enumerate() {
            if u {
                trees_per_col[k] += 1;
            }
        }
        for (s, dr) in sums.iter_mut().zip(&contrib.drops) {
            for (k, v) in dr.iter().enumerate() {
                if contrib.used[k] {
                    s[k] += v;
                }
            }
        }
    }
    if trees_per_col[c] == 0 {
        return Err(Error::NoOobCoverage);
    }
    let values = sums
        .into_iter()
        .map(|row| {
            row.into_iter()
                .zip(&trees_per_col)
                .map(|(s, &m)| if m > 0 { s / m as f64 } else { 0.0 })
                .collect()
        })
        .collect();
    Ok(ImportanceReport {
        feature_names: forest.feature_names.clone(),
        class_labels: forest.class_labels.clone(),
        values,
    })
}
