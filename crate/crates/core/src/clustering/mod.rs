//! Gaussian-mixture clustering and cluster validity.
//!
//! Data is an `n x d` [`nalgebra::DMatrix`], one observation per row. Public
//! cluster labels are 1-based (`1..=k`).

mod gmm;
mod kmeans;
mod projection;
mod select;
mod validity;

pub use gmm::{
    component_density, component_log_density, e_step, em_fit, hard_assign, log_likelihood,
    m_step, mixture_density, variance_floor, EmConfig, GmmModel, MStepOutput, Responsibilities,
};
pub use kmeans::{kmeans, KMeansResult};
pub use projection::principal_projection;
pub use select::{
    compact_labels, select_k, select_k_with, ClusterSelectionReport, SelectionFailure,
    SelectionRow, SelectionRule,
};
pub use validity::{silhouette, wss, Silhouette};

use nalgebra::DMatrix;

pub(crate) fn squared_distance(data: &DMatrix<f64>, i: usize, center: &[f64]) -> f64 {
    center
        .iter()
        .enumerate()
        .map(|(j, c)| (data[(i, j)] - c).powi(2))
        .sum()
}
