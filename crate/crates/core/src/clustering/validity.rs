use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Number of clusters implied by 1-based labels; every cluster must be used.
fn cluster_sizes(labels: &[usize]) -> Result<Vec<usize>> {
    let k = labels.iter().copied().max().unwrap_or(0);
    let mut sizes = vec![0usize; k];
    for &l in labels {
        if l == 0 {
            return Err(Error::InvalidParam("cluster labels are 1-based".into()));
        }
        sizes[l - 1] += 1;
    }
    if let Some(j) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::EmptyCluster(j + 1));
    }
    Ok(sizes)
}

fn check_rows(data: &DMatrix<f64>, labels: &[usize]) -> Result<()> {
    if data.nrows() != labels.len() {
        return Err(Error::LengthMismatch {
            left: data.nrows(),
            right: labels.len(),
        });
    }
    Ok(())
}

/// Within-cluster sum of squared Euclidean distances to the cluster means.
pub fn wss(data: &DMatrix<f64>, labels: &[usize]) -> Result<f64> {
    check_rows(data, labels)?;
    let sizes = cluster_sizes(labels)?;
    let d = data.ncols();
    let mut means = vec![vec![0.0; d]; sizes.len()];
    for (i, &l) in labels.iter().enumerate() {
        for (j, m) in means[l - 1].iter_mut().enumerate() {
            *m += data[(i, j)];
        }
    }
    for (m, &s) in means.iter_mut().zip(&sizes) {
        m.iter_mut().for_each(|v| *v /= s as f64);
    }
    Ok(labels
        .iter()
        .enumerate()
        .map(|(i, &l)| super::squared_distance(data, i, &means[l - 1]))
        .sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Silhouette {
    pub per_point: Vec<f64>,
    pub mean: f64,
}

/// Euclidean silhouette widths. Members of singleton clusters score 0.
pub fn silhouette(data: &DMatrix<f64>, labels: &[usize]) -> Result<Silhouette> {
    check_rows(data, labels)?;
    let sizes = cluster_sizes(labels)?;
    let k = sizes.len();
    if k < 2 {
        return Err(Error::SingleCluster);
    }
    let n = data.nrows();
    let mut per_point = Vec::with_capacity(n);
    let mut sums = vec![0.0; k];
    for i in 0..n {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for m in 0..n {
            if m != i {
                let mut acc = 0.0;
                for j in 0..data.ncols() {
                    acc += (data[(i, j)] - data[(m, j)]).powi(2);
                }
                sums[labels[m] - 1] += acc.sqrt();
            }
        }
        let own = labels[i] - 1;
        if sizes[own] == 1 {
            per_point.push(0.0);
            continue;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        per_point.push(if denom > 0.0 { (b - a) / denom } else { 0.0 });
    }
    let mean = per_point.iter().sum::<f64>() / n as f64;
    Ok(Silhouette { per_point, mean })
}
