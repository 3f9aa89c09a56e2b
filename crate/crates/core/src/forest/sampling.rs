use nalgebra::DMatrix;
use rand::seq::{index, SliceRandom};

use super::encode_labels;
use crate::error::{Error, Result};
use crate::rng;

/// Per-class shuffled holdout. Each class keeps `round(fraction * n_c)` rows
/// for training, clamped so both sides get at least one row. Indices come
/// back sorted.
pub fn stratified_split(labels: &[usize], train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParam(format!(
            "train fraction {train_fraction} must lie in (0, 1)"
        )));
    }
    let (classes, idx) = encode_labels(labels);
    let mut g = rng::stream(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, &label) in classes.iter().enumerate() {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| idx[i] == c).collect();
        let n_c = members.len();
        if n_c < 2 {
            return Err(Error::ClassTooSmall(label));
        }
        members.shuffle(&mut g);
        let n_train = ((train_fraction * n_c as f64).round() as usize).clamp(1, n_c - 1);
        train.extend_from_slice(&members[..n_train]);
        test.extend_from_slice(&members[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Rows kept by [`sample_per_cluster`], in ascending order.
pub fn sample_per_cluster_indices(labels: &[usize], cap: usize, seed: u64) -> Result<Vec<usize>> {
    if cap == 0 {
        return Err(Error::InvalidParam("per-cluster cap must be at least 1".into()));
    }
    let (classes, idx) = encode_labels(labels);
    let mut g = rng::stream(seed);
    let mut keep = Vec::new();
    for c in 0..classes.len() {
        let members: Vec<usize> = (0..labels.len()).filter(|&i| idx[i] == c).collect();
        if members.len() <= cap {
            keep.extend(members);
        } else {
            keep.extend(index::sample(&mut g, members.len(), cap).iter().map(|k| members[k]));
        }
    }
    keep.sort_unstable();
    Ok(keep)
}

/// Uniform sample without replacement of at most `cap` rows per cluster.
pub fn sample_per_cluster(
    data: &DMatrix<f64>,
    labels: &[usize],
    cap: usize,
    seed: u64,
) -> Result<(DMatrix<f64>, Vec<usize>, Vec<usize>)> {
    super::check_labels(data.nrows(), labels)?;
    let keep = sample_per_cluster_indices(labels, cap, seed)?;
    let sub = data.select_rows(keep.iter());
    let sub_labels = keep.iter().map(|&i| labels[i]).collect();
    Ok((sub, sub_labels, keep))
}
