use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ensemble::{fit_forest, predict_batch};
use super::metrics::{kappa, ConfusionMatrix};
use super::sampling::stratified_split;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningRow {
    pub m_try: usize,
    pub mean_accuracy: f64,
    pub mean_kappa: f64,
    pub n_repeats: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningReport {
    pub rows: Vec<TuningRow>,
    pub best_m_try: usize,
}

impl TuningReport {
    /// `mtry,accuracy,kappa`
    pub fn to_csv(&self) -> String {
        let mut s = String::from("mtry,accuracy,kappa\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{}\n", r.m_try, r.mean_accuracy, r.mean_kappa));
        }
        s
    }
}

/// `{2, floor((d + 1) / 2), d}` without duplicates, clipped to `[1, d]`.
pub fn default_mtry_grid(d: usize) -> Vec<usize> {
    let mut g: Vec<usize> = [2, d.div_ceil(2), d].iter().map(|&m| m.clamp(1, d.max(1))).collect();
    g.dedup();
    g
}

/// Repeated stratified holdout over an `m_try` grid. Every grid value sees the
/// same `n_repeats` splits; split `r` uses seed `seed ^ r`.
#[allow(clippy::too_many_arguments)]
pub fn tune_mtry(
    data: &DMatrix<f64>,
    labels: &[usize],
    feature_names: &[String],
    grid: &[usize],
    n_repeats: usize,
    train_fraction: f64,
    n_tree: usize,
    seed: u64,
) -> Result<TuningReport> {
    let d = data.ncols();
    if grid.is_empty() || grid.iter().any(|&m| m < 1 || m > d) {
        return Err(Error::InvalidParam(format!("m_try grid {grid:?} must be non-empty within [1, {d}]")));
    }
    if n_repeats == 0 {
        return Err(Error::InvalidParam("n_repeats must be positive".into()));
    }
    let split_seed = rng::labelled(seed, "split");
    let fit_seed = rng::labelled(seed, "fit");
    let splits = (0..n_repeats)
        .map(|r| stratified_split(labels, train_fraction, rng::indexed(split_seed, r as u64)))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = grid
        .iter()
        .flat_map(|&m| (0..n_repeats).map(move |r| (m, r)))
        .collect();
    let scores = jobs
        .par_iter()
        .map(|&(m, r)| {
            let (train, test) = &splits[r];
            let x_train = data.select_rows(train.iter());
            let y_train: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
            let forest = fit_forest(&x_train, &y_train, feature_names, n_tree, m, rng::indexed(fit_seed, r as u64))?;
            let x_test = data.select_rows(test.iter());
            let y_test: Vec<usize> = test.iter().map(|&i| labels[i]).collect();
            let pred = predict_batch(&forest, &x_test)?;
            let cm = ConfusionMatrix::from_predictions(&forest.class_labels, &y_test, &pred)?;
            Ok((cm.accuracy()?, kappa(&cm)?))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;

    let rows: Vec<TuningRow> = grid
        .iter()
        .enumerate()
        .map(|(gi, &m)| {
            let s = &scores[gi * n_repeats..(gi + 1) * n_repeats];
            TuningRow {
                m_try: m,
                mean_accuracy: s.iter().map(|p| p.0).sum::<f64>() / n_repeats as f64,
                mean_kappa: s.iter().map(|p| p.1).sum::<f64>() / n_repeats as f64,
                n_repeats,
            }
        })
        .collect();
    let mut best = &rows[0];
    for r in &rows[1..] {
        if r.mean_accuracy > best.mean_accuracy
            || (r.mean_accuracy == best.mean_accuracy && r.m_try < best.m_try)
        {
            best = r;
        }
    }
    Ok(TuningReport {
        best_m_try: best.m_try,
        rows,
    })
}
