//! Shared inputs for the benchmarks.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rotodiag_core::rng;

/// `n` rows drawn around `k` random centres in `d` dimensions.
pub fn blobs(n: usize, d: usize, k: usize, seed: u64) -> DMatrix<f64> {
    let mut g = rng::stream(seed);
    let centers: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..d).map(|_| g.random_range(-4.0..4.0)).collect())
        .collect();
    DMatrix::from_fn(n, d, |i, j| {
        let z: f64 = StandardNormal.sample(&mut g);
        centers[i % k][j] + z
    })
}

/// Labels that depend on the first two columns only.
pub fn quadrant_labels(data: &DMatrix<f64>) -> Vec<usize> {
    (0..data.nrows())
        .map(|i| 1 + usize::from(data[(i, 0)] > 0.0) + 2 * usize::from(data[(i, 1)] > 0.0))
        .collect()
}
