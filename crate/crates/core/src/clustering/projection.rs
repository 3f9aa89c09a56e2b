use nalgebra::{DMatrix, SymmetricEigen};

/// Scores on the leading principal directions, `n x n_components`.
///
/// Each direction's sign is fixed so its largest-magnitude loading is positive.
pub fn principal_projection(data: &DMatrix<f64>, n_components: usize) -> DMatrix<f64> {
    let n = data.nrows();
    let d = data.ncols();
    let n_components = n_components.min(d);
    let means: Vec<f64> = data.column_iter().map(|c| c.mean()).collect();
    let centered = DMatrix::from_fn(n, d, |i, j| data[(i, j)] - means[j]);
    let cov = centered.transpose() * &centered / (n.max(2) - 1) as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut basis = DMatrix::zeros(d, n_components);
    for (c, &idx) in order.iter().take(n_components).enumerate() {
        let mut v = eig.eigenvectors.column(idx).into_owned();
        let pivot = v.iter().copied().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap_or(1.0);
        if pivot < 0.0 {
            v = -v;
        }
        basis.set_column(c, &v);
    }
    centered * basis
}
