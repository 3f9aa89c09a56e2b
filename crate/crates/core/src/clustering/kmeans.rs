use nalgebra::DMatrix;
use rand::Rng;

use super::squared_distance;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// 1-based cluster labels.
    pub labels: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    /// Within-cluster sum of squares after each centre update.
    pub wss_trace: Vec<f64>,
}

fn nearest(data: &DMatrix<f64>, i: usize, centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d = squared_distance(data, i, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// D^2-weighted seeding: each new centre is drawn with probability
/// proportional to its squared distance from the closest chosen centre.
fn seed_centers(data: &DMatrix<f64>, k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = data.nrows();
    let row = |i: usize| data.row(i).iter().copied().collect::<Vec<f64>>();
    let mut centers = vec![row(rng.random_range(0..n))];
    let mut d2: Vec<f64> = (0..n).map(|i| squared_distance(data, i, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 && target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            while d2[chosen] == 0.0 {
                chosen -= 1;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = row(pick);
        for (i, v) in d2.iter_mut().enumerate() {
            *v = v.min(squared_distance(data, i, &c));
        }
        centers.push(c);
    }
    centers
}

fn update_centers(data: &DMatrix<f64>, labels: &[usize], k: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let d = data.ncols();
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for (j, s) in sums[l].iter_mut().enumerate() {
            *s += data[(i, j)];
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            s.iter_mut().for_each(|v| *v /= c as f64);
        }
    }
    (sums, counts)
}

/// Lloyd's algorithm with D^2 seeding. Empty clusters take over the point
/// farthest from its current centre.
pub fn kmeans(data: &DMatrix<f64>, k: usize, max_iter: usize, seed: u64) -> Result<KMeansResult> {
    let n = data.nrows();
    if k == 0 || n < k {
        return Err(Error::TooFewPoints { n, k });
    }
    let mut rng = rng::stream(seed);
    let mut centers = seed_centers(data, k, &mut rng);
    let mut labels: Vec<usize> = (0..n).map(|i| nearest(data, i, &centers).0).collect();
    let mut wss_trace = Vec::new();
    for iter in 0..max_iter.max(1) {
        let (mut new_centers, mut counts) = update_centers(data, &labels, k);
        while let Some(empty) = counts.iter().position(|&c| c == 0) {
            let far = (0..n)
                .filter(|&i| counts[labels[i]] > 1)
                .max_by(|&a, &b| {
                    squared_distance(data, a, &new_centers[labels[a]])
                        .total_cmp(&squared_distance(data, b, &new_centers[labels[b]]))
                })
                .expect("n >= k leaves a cluster with spare points");
            labels[far] = empty;
            let updated = update_centers(data, &labels, k);
            new_centers = updated.0;
            counts = updated.1;
        }
        centers = new_centers;
        wss_trace.push(
            (0..n)
                .map(|i| squared_distance(data, i, &centers[labels[i]]))
                .sum(),
        );
        let next: Vec<usize> = (0..n)
            .map(|i| {
                let (j, d) = nearest(data, i, &centers);
                // keep the current label on ties so assignments settle
                if squared_distance(data, i, &centers[labels[i]]) <= d {
                    labels[i]
                } else {
                    j
                }
            })
            .collect();
        if next == labels && iter > 0 {
            break;
        }
        labels = next;
    }
    Ok(KMeansResult {
        labels: labels.into_iter().map(|l| l + 1).collect(),
        centers,
        wss_trace,
    })
}
