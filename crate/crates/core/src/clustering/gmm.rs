use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kmeans::kmeans;
use crate::error::{Error, Result};
use crate::rng;

/// EM settings shared by every restart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmConfig {
    pub n_restarts: usize,
    pub max_iter: usize,
    /// Stop once the relative log-likelihood gain drops below this.
    pub rel_tol: f64,
    /// Eigenvalue floor for every covariance, relative to the mean data variance.
    pub reg_epsilon: f64,
    /// Lloyd iterations for the k-means initialiser.
    pub kmeans_max_iter: usize,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            n_restarts: 5,
            max_iter: 500,
            rel_tol: 1e-8,
            reg_epsilon: 1e-6,
            kmeans_max_iter: 100,
        }
    }
}

/// A fitted full-covariance Gaussian mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel {
    pub k: usize,
    pub weights: Vec<f64>,
    pub centers: Vec<DVector<f64>>,
    pub covariances: Vec<DMatrix<f64>>,
    pub log_likelihood_trace: Vec<f64>,
    pub converged: bool,
    pub n_iter: usize,
    pub reg_epsilon: f64,
    /// Components re-seeded after losing all responsibility mass.
    pub n_rescues: usize,
}

/// Row-major persistence form of [`GmmModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GmmModelJson {
    schema_version: u32,
    k: usize,
    d: usize,
    weights: Vec<f64>,
    centers: Vec<Vec<f64>>,
    covariances: Vec<Vec<f64>>,
    log_likelihood_trace: Vec<f64>,
    converged: bool,
    n_iter: usize,
    reg_epsilon: f64,
    n_rescues: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config: Option<EmConfig>,
}

impl GmmModel {
    /// Builds a model from explicit parameters (no fit diagnostics).
    pub fn from_parameters(
        weights: Vec<f64>,
        centers: Vec<DVector<f64>>,
        covariances: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        let k = weights.len();
        if k == 0 || centers.len() != k || covariances.len() != k {
            return Err(Error::InvalidParam("mixture needs matching non-empty parameter lists".into()));
        }
        let d = centers[0].len();
        if centers.iter().any(|c| c.len() != d)
            || covariances.iter().any(|s| s.nrows() != d || s.ncols() != d)
        {
            return Err(Error::InvalidParam("inconsistent mixture dimensions".into()));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParam("weights must be non-negative and sum to one".into()));
        }
        Ok(GmmModel {
            k,
            weights,
            centers,
            covariances,
            log_likelihood_trace: Vec::new(),
            converged: false,
            n_iter: 0,
            reg_epsilon: 0.0,
            n_rescues: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.centers[0].len()
    }

    pub fn final_log_likelihood(&self) -> f64 {
        self.log_likelihood_trace.last().copied().unwrap_or(f64::NEG_INFINITY)
    }

    /// Reorders components; `order[new] = old`.
    pub fn permuted(&self, order: &[usize]) -> GmmModel {
        GmmModel {
            weights: order.iter().map(|&j| self.weights[j]).collect(),
            centers: order.iter().map(|&j| self.centers[j].clone()).collect(),
            covariances: order.iter().map(|&j| self.covariances[j].clone()).collect(),
            ..self.clone()
        }
    }

    pub fn to_json(&self, config: Option<EmConfig>) -> String {
        let d = self.dim();
        let dto = GmmModelJson {
            schema_version: 1,
            k: self.k,
            d,
            weights: self.weights.clone(),
            centers: self.centers.iter().map(|c| c.iter().copied().collect()).collect(),
            covariances: self
                .covariances
                .iter()
                .map(|s| (0..d).flat_map(|r| (0..d).map(move |c| s[(r, c)])).collect())
                .collect(),
            log_likelihood_trace: self.log_likelihood_trace.clone(),
            converged: self.converged,
            n_iter: self.n_iter,
            reg_epsilon: self.reg_epsilon,
            n_rescues: self.n_rescues,
            config,
        };
        serde_json::to_string_pretty(&dto).expect("model serialises")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let dto: GmmModelJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        let d = dto.d;
        if dto.covariances.iter().any(|c| c.len() != d * d) {
            return Err(Error::Parse("covariance length does not match d*d".into()));
        }
        let mut m = GmmModel::from_parameters(
            dto.weights,
            dto.centers.into_iter().map(DVector::from_vec).collect(),
            dto.covariances
                .iter()
                .map(|c| DMatrix::from_row_slice(d, d, c))
                .collect(),
        )?;
        m.log_likelihood_trace = dto.log_likelihood_trace;
        m.converged = dto.converged;
        m.n_iter = dto.n_iter;
        m.reg_epsilon = dto.reg_epsilon;
        m.n_rescues = dto.n_rescues;
        Ok(m)
    }
}

/// Posterior component probabilities, `n x k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    pub matrix: DMatrix<f64>,
}

impl Responsibilities {
    /// One-hot responsibilities from 1-based labels.
    pub fn from_labels(labels: &[usize], k: usize) -> Self {
        let mut m = DMatrix::zeros(labels.len(), k);
        for (i, &l) in labels.iter().enumerate() {
            m[(i, l - 1)] = 1.0;
        }
        Responsibilities { matrix: m }
    }
}

fn cholesky(cov: &DMatrix<f64>, j: usize) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(cov.clone()).ok_or(Error::SingularCovariance(j))
}

fn log_norm_const(chol: &Cholesky<f64, Dyn>) -> f64 {
    let d = chol.l_dirty().nrows() as f64;
    let log_det_half: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum();
    -0.5 * d * (2.0 * PI).ln() - log_det_half
}

pub fn component_log_density(x: &DVector<f64>, center: &DVector<f64>, covariance: &DMatrix<f64>) -> Result<f64> {
    let chol = cholesky(covariance, 0)?;
    let z = chol.l().solve_lower_triangular(&(x - center)).ok_or(Error::SingularCovariance(0))?;
    Ok(log_norm_const(&chol) - 0.5 * z.norm_squared())
}

pub fn component_density(x: &DVector<f64>, center: &DVector<f64>, covariance: &DMatrix<f64>) -> Result<f64> {
    component_log_density(x, center, covariance).map(f64::exp)
}

pub fn mixture_density(model: &GmmModel, x: &DVector<f64>) -> Result<f64> {
    let mut p = 0.0;
    for j in 0..model.k {
        p += model.weights[j] * component_density(x, &model.centers[j], &model.covariances[j])?;
    }
    Ok(p)
}

/// `n x k` matrix of `ln P(j) + ln p(x_i | j)`.
fn weighted_log_densities(model: &GmmModel, data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if data.ncols() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: data.ncols(),
        });
    }
    let n = data.nrows();
    let xt = data.transpose();
    let mut out = DMatrix::zeros(n, model.k);
    for j in 0..model.k {
        let chol = cholesky(&model.covariances[j], j)?;
        let mut diff = xt.clone();
        for mut col in diff.column_iter_mut() {
            col -= &model.centers[j];
        }
        if !chol.l_dirty().solve_lower_triangular_mut(&mut diff) {
            return Err(Error::SingularCovariance(j));
        }
        let base = model.weights[j].ln() + log_norm_const(&chol);
        for (i, col) in diff.column_iter().enumerate() {
            out[(i, j)] = base - 0.5 * col.norm_squared();
        }
    }
    Ok(out)
}

fn log_sum_exp<'a>(values: impl IntoIterator<Item = &'a f64>) -> f64 {
    let values: Vec<f64> = values.into_iter().copied().collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

pub fn log_likelihood(model: &GmmModel, data: &DMatrix<f64>) -> Result<f64> {
    let wl = weighted_log_densities(model, data)?;
    Ok(wl.row_iter().map(|r| log_sum_exp(r.iter())).sum())
}

fn e_step_with_ll(model: &GmmModel, data: &DMatrix<f64>) -> Result<(Responsibilities, f64)> {
    let mut wl = weighted_log_densities(model, data)?;
    let mut ll = 0.0;
    for mut row in wl.row_iter_mut() {
        let lse = log_sum_exp(row.iter());
        ll += lse;
        let max = row.max();
        row.apply(|v| *v = (*v - max).exp());
        let s = row.sum();
        row /= s;
    }
    Ok((Responsibilities { matrix: wl }, ll))
}

pub fn e_step(model: &GmmModel, data: &DMatrix<f64>) -> Result<Responsibilities> {
    e_step_with_ll(model, data).map(|(r, _)| r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MStepOutput {
    pub weights: Vec<f64>,
    pub centers: Vec<DVector<f64>>,
    pub covariances: Vec<DMatrix<f64>>,
}

const EMPTY_MASS: f64 = 1e-10;

/// Smallest eigenvalue any component covariance may take: `reg_epsilon` times
/// the mean per-column variance of the data (of 1.0 for constant data).
/// It is fixed for a whole fit, so every M-step maximises over the same set
/// and the log-likelihood cannot fall.
pub fn variance_floor(data: &DMatrix<f64>, reg_epsilon: f64) -> f64 {
    let n = data.nrows() as f64;
    let mean_var = data
        .column_iter()
        .map(|c| {
            let m = c.sum() / n;
            c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n
        })
        .sum::<f64>()
        / data.ncols() as f64;
    reg_epsilon * if mean_var > 0.0 { mean_var } else { 1.0 }
}

/// Raises eigenvalues below `floor` to `floor`. With the eigenvectors of the
/// scatter matrix kept, this is the constrained maximiser of the M-step
/// objective.
fn clamp_eigenvalues(cov: &mut DMatrix<f64>, floor: f64) {
    let eig = cov.clone().symmetric_eigen();
    if eig.eigenvalues.iter().all(|&l| l >= floor) {
        return;
    }
    let clamped = eig.eigenvalues.map(|l| l.max(floor));
    let v = &eig.eigenvectors;
    let rebuilt = v * DMatrix::from_diagonal(&clamped) * v.transpose();
    *cov = (&rebuilt + rebuilt.transpose()) * 0.5;
}

fn weighted_moments(data: &DMatrix<f64>, weights: &[f64], mass: f64, floor: f64) -> (DVector<f64>, DMatrix<f64>) {
    let d = data.ncols();
    let mut center = DVector::zeros(d);
    for (i, row) in data.row_iter().enumerate() {
        center.axpy(weights[i], &row.transpose(), 1.0);
    }
    center /= mass;
    let mut scaled = data.transpose();
    for (i, mut col) in scaled.column_iter_mut().enumerate() {
        col -= &center;
        col *= weights[i].sqrt();
    }
    let mut cov = &scaled * scaled.transpose() / mass;
    cov = (&cov + cov.transpose()) * 0.5;
    clamp_eigenvalues(&mut cov, floor);
    (center, cov)
}

/// Weight, centre and covariance of one component.
type ComponentUpdate = (f64, DVector<f64>, DMatrix<f64>);

/// Per-component update; `None` marks a component without mass.
fn m_step_partial(
    data: &DMatrix<f64>,
    resp: &Responsibilities,
    floor: f64,
) -> Vec<Option<ComponentUpdate>> {
    let n = data.nrows() as f64;
    resp.matrix
        .column_iter()
        .map(|col| {
            let w: Vec<f64> = col.iter().copied().collect();
            let mass: f64 = w.iter().sum();
            if mass < EMPTY_MASS {
                return None;
            }
            let (c, s) = weighted_moments(data, &w, mass, floor);
            Some((mass / n, c, s))
        })
        .collect()
}

/// Responsibility-weighted means, covariances about the new means (eigenvalues
/// floored at [`variance_floor`]), and mixing proportions.
pub fn m_step(data: &DMatrix<f64>, resp: &Responsibilities, reg_epsilon: f64) -> Result<MStepOutput> {
    m_step_floored(data, resp, variance_floor(data, reg_epsilon))
}

fn m_step_floored(data: &DMatrix<f64>, resp: &Responsibilities, floor: f64) -> Result<MStepOutput> {
    let mut out = MStepOutput {
        weights: Vec::new(),
        centers: Vec::new(),
        covariances: Vec::new(),
    };
    for (j, part) in m_step_partial(data, resp, floor).into_iter().enumerate() {
        let (w, c, s) = part.ok_or(Error::EmptyComponent(j))?;
        out.weights.push(w);
        out.centers.push(c);
        out.covariances.push(s);
    }
    Ok(out)
}

fn data_covariance(data: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let n = data.nrows();
    weighted_moments(data, &vec![1.0; n], n as f64, floor).1
}

fn normalise(weights: &mut [f64]) {
    let s: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= s);
}

/// Applies an M-step, re-seeding massless components at the point the
/// current model explains worst.
fn m_step_with_rescue(
    data: &DMatrix<f64>,
    resp: &Responsibilities,
    current: &GmmModel,
    floor: f64,
) -> Result<(GmmModel, usize)> {
    let parts = m_step_partial(data, resp, floor);
    let n = data.nrows();
    let mut rescued = 0;
    let mut worst: Option<Vec<f64>> = None;
    let mut taken: Vec<usize> = Vec::new();
    let mut model = current.clone();
    for (j, part) in parts.into_iter().enumerate() {
        match part {
            Some((w, c, s)) => {
                model.weights[j] = w;
                model.centers[j] = c;
                model.covariances[j] = s;
            }
            None => {
                rescued += 1;
                let scores = match &worst {
                    Some(s) => s,
                    None => {
                        let wl = weighted_log_densities(current, data)?;
                        worst = Some(wl.row_iter().map(|r| log_sum_exp(r.iter())).collect());
                        worst.as_ref().expect("just set")
                    }
                };
                let i = (0..n)
                    .filter(|i| !taken.contains(i))
                    .min_by(|&a, &b| scores[a].total_cmp(&scores[b]))
                    .unwrap_or(0);
                taken.push(i);
                model.weights[j] = 1.0 / n as f64;
                model.centers[j] = data.row(i).transpose();
                model.covariances[j] = data_covariance(data, floor);
            }
        }
    }
    normalise(&mut model.weights);
    Ok((model, rescued))
}

fn fit_once(data: &DMatrix<f64>, k: usize, cfg: &EmConfig, seed: u64) -> Result<GmmModel> {
    let init = kmeans(data, k, cfg.kmeans_max_iter, seed)?;
    let resp = Responsibilities::from_labels(&init.labels, k);
    let floor = variance_floor(data, cfg.reg_epsilon);
    let MStepOutput { mut weights, centers, covariances } = m_step_floored(data, &resp, floor)?;
    normalise(&mut weights);
    let mut model = GmmModel::from_parameters(weights, centers, covariances)?;
    model.reg_epsilon = cfg.reg_epsilon;

    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut rescues = 0;
    for _ in 0..cfg.max_iter {
        let (resp, ll) = e_step_with_ll(&model, data)?;
        if let Some(&prev) = trace.last() {
            trace.push(ll);
            if ll - prev < cfg.rel_tol * prev.abs() {
                converged = true;
                break;
            }
        } else {
            trace.push(ll);
        }
        let (next, r) = m_step_with_rescue(data, &resp, &model, floor)?;
        rescues += r;
        model = next;
    }
    if !converged && trace.len() == cfg.max_iter {
        // the parameters after the final M-step have not been scored yet
        let ll = log_likelihood(&model, data)?;
        trace.push(ll);
    }
    model.n_iter = trace.len();
    model.log_likelihood_trace = trace;
    model.converged = converged;
    model.n_rescues = rescues;
    Ok(model)
}

/// Fits a `k`-component mixture, keeping the best of `n_restarts` k-means
/// initialised EM runs. Restart `r` uses seed `seed ^ r`.
pub fn em_fit(data: &DMatrix<f64>, k: usize, cfg: &EmConfig, seed: u64) -> Result<GmmModel> {
    let n = data.nrows();
    if k == 0 || n < k {
        return Err(Error::TooFewPoints { n, k });
    }
    if data.ncols() == 0 {
        return Err(Error::InvalidParam("data has no columns".into()));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("clustering data"));
    }
    let restarts = cfg.n_restarts.max(1);
    let fits: Vec<Result<GmmModel>> = (0..restarts)
        .into_par_iter()
        .map(|r| fit_once(data, k, cfg, rng::indexed(seed, r as u64)))
        .collect();
    let mut best: Option<GmmModel> = None;
    let mut last_err = None;
    for fit in fits {
        match fit {
            Ok(m) => {
                if best
                    .as_ref()
                    .is_none_or(|b| m.final_log_likelihood() > b.final_log_likelihood())
                {
                    best = Some(m);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.expect("at least one restart ran"))
}

/// 1-based argmax-responsibility labels; ties go to the lower component.
pub fn hard_assign(model: &GmmModel, data: &DMatrix<f64>) -> Result<Vec<usize>> {
    let wl = weighted_log_densities(model, data)?;
    Ok(wl
        .row_iter()
        .map(|r| {
            let mut best = 0;
            for j in 1..r.len() {
                if r[j] > r[best] {
                    best = j;
                }
            }
            best + 1
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn spd2(r: &mut impl Rng) -> DMatrix<f64> {
        let a = DMatrix::from_fn(2, 2, |_, _| r.random_range(-1.0..1.0));
        &a * a.transpose() + DMatrix::identity(2, 2) * 0.3
    }

    fn mat1(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    fn vec1(v: f64) -> DVector<f64> {
        DVector::from_element(1, v)
    }

    #[test]
    fn standard_normal_modes() {
        let p = component_density(&vec1(0.0), &vec1(0.0), &mat1(1.0)).unwrap();
        assert!((p - 0.398_942_280_401_432_7).abs() < 1e-15);
        let z = DVector::zeros(2);
        let p = component_density(&z, &z, &DMatrix::identity(2, 2)).unwrap();
        assert!((p - 1.0 / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn two_dim_density_matches_closed_form() {
        let mut r = rng::stream(5);
        for _ in 0..100 {
            let s = spd2(&mut r);
            let c = DVector::from_fn(2, |_, _| r.random_range(-2.0..2.0));
            let x = DVector::from_fn(2, |_, _| r.random_range(-3.0..3.0));
            let (a, b, d) = (s[(0, 0)], s[(0, 1)], s[(1, 1)]);
            let det = a * d - b * b;
            let (u, v) = (x[0] - c[0], x[1] - c[1]);
            let q = (d * u * u - 2.0 * b * u * v + a * v * v) / det;
            let oracle = (-0.5 * q).exp() / (2.0 * PI * det.sqrt());
            let got = component_density(&x, &c, &s).unwrap();
            assert!(((got - oracle) / oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_covariance_is_reported() {
        let z = DVector::zeros(2);
        assert!(matches!(
            component_density(&z, &z, &DMatrix::zeros(2, 2)),
            Err(Error::SingularCovariance(_))
        ));
    }

    #[test]
    fn mixture_reductions() {
        let m = GmmModel::from_parameters(vec![1.0], vec![vec1(0.5)], vec![mat1(2.0)]).unwrap();
        let x = vec1(1.7);
        assert_eq!(
            mixture_density(&m, &x).unwrap(),
            component_density(&x, &vec1(0.5), &mat1(2.0)).unwrap()
        );
        let m = GmmModel::from_parameters(
            vec![0.5, 0.5],
            vec![vec1(-1.0), vec1(1.0)],
            vec![mat1(1.0), mat1(1.0)],
        )
        .unwrap();
        let p = mixture_density(&m, &vec1(0.0)).unwrap();
        let c = component_density(&vec1(0.0), &vec1(1.0), &mat1(1.0)).unwrap();
        assert!((p - c).abs() < 1e-16);
    }

    fn random_model(r: &mut impl Rng, k: usize) -> GmmModel {
        let mut w: Vec<f64> = (0..k).map(|_| r.random_range(0.1..1.0)).collect();
        normalise(&mut w);
        let centers = (0..k)
            .map(|_| DVector::from_fn(2, |_, _| r.random_range(-3.0..3.0)))
            .collect();
        let covs = (0..k).map(|_| spd2(r)).collect();
        GmmModel::from_parameters(w, centers, covs).unwrap()
    }

    #[test]
    fn mixture_matches_explicit_sum() {
        let mut r = rng::stream(6);
        for _ in 0..20 {
            let m = random_model(&mut r, 3);
            let x = DVector::from_fn(2, |_, _| r.random_range(-3.0..3.0));
            let mut oracle = 0.0;
            for j in 0..3 {
                oracle += m.weights[j] * component_density(&x, &m.centers[j], &m.covariances[j]).unwrap();
            }
            let got = mixture_density(&m, &x).unwrap();
            assert!(((got - oracle) / oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn log_likelihood_examples() {
        let m = GmmModel::from_parameters(vec![1.0], vec![vec1(0.0)], vec![mat1(1.0)]).unwrap();
        let ll = log_likelihood(&m, &DMatrix::zeros(1, 1)).unwrap();
        assert!((ll + 0.918_938_533_204_672_8).abs() < 1e-14);

        let mut r = rng::stream(8);
        let m = random_model(&mut r, 3);
        let data = DMatrix::from_fn(15, 2, |_, _| r.random_range(-3.0..3.0));
        let twice = DMatrix::from_fn(30, 2, |i, j| data[(i % 15, j)]);
        let (a, b) = (log_likelihood(&m, &data).unwrap(), log_likelihood(&m, &twice).unwrap());
        assert!((b - 2.0 * a).abs() < 1e-12 * a.abs());

        let mut naive = 0.0;
        for row in data.row_iter() {
            naive += mixture_density(&m, &row.transpose()).unwrap().ln();
        }
        assert!((naive - a).abs() < 1e-9 * a.abs());
    }

    #[test]
    fn e_step_examples() {
        let m = GmmModel::from_parameters(vec![1.0], vec![vec1(0.0)], vec![mat1(1.0)]).unwrap();
        let data = DMatrix::from_column_slice(3, 1, &[0.0, 5.0, -2.0]);
        assert!(e_step(&m, &data).unwrap().matrix.iter().all(|&v| v == 1.0));

        let m = GmmModel::from_parameters(
            vec![0.5, 0.5],
            vec![vec1(-1.0), vec1(1.0)],
            vec![mat1(1.0), mat1(1.0)],
        )
        .unwrap();
        let r = e_step(&m, &DMatrix::zeros(1, 1)).unwrap();
        assert_eq!((r.matrix[(0, 0)], r.matrix[(0, 1)]), (0.5, 0.5));
        assert_eq!(hard_assign(&m, &DMatrix::zeros(1, 1)).unwrap(), vec![1]);

        let mut g = rng::stream(10);
        let m = random_model(&mut g, 4);
        let data = DMatrix::from_fn(25, 2, |_, _| g.random_range(-3.0..3.0));
        let resp = e_step(&m, &data).unwrap();
        for (i, row) in data.row_iter().enumerate() {
            let x = row.transpose();
            let parts: Vec<f64> = (0..4)
                .map(|j| m.weights[j] * component_density(&x, &m.centers[j], &m.covariances[j]).unwrap())
                .collect();
            let total: f64 = parts.iter().sum();
            for j in 0..4 {
                assert!((resp.matrix[(i, j)] - parts[j] / total).abs() < 1e-12);
            }
            assert!((resp.matrix.row(i).sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn m_step_degenerate_responsibilities() {
        let data = DMatrix::from_row_slice(4, 2, &[0.0, 1.0, 2.0, 3.0, 4.0, 1.0, 2.0, -1.0]);
        let resp = Responsibilities { matrix: DMatrix::from_element(4, 1, 1.0) };
        let out = m_step(&data, &resp, 1e-6).unwrap();
        assert_eq!(out.weights, vec![1.0]);
        assert_eq!(out.centers[0].as_slice(), &[2.0, 1.0]);
        // population covariance: var 2.0 and 2.0, covariance 0, well above the floor
        let expect = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]);
        assert!((&out.covariances[0] - expect).amax() < 1e-14);
    }

    #[test]
    fn m_step_hard_partition_gives_group_means() {
        let data = DMatrix::from_row_slice(5, 1, &[1.0, 2.0, 3.0, 10.0, 20.0]);
        let resp = Responsibilities::from_labels(&[1, 1, 1, 2, 2], 2);
        let out = m_step(&data, &resp, 1e-6).unwrap();
        assert_eq!(out.centers[0][0], 2.0);
        assert_eq!(out.centers[1][0], 15.0);
        assert!((out.weights[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn m_step_matches_weighted_moment_oracle() {
        let mut r = rng::stream(12);
        let data = DMatrix::from_fn(20, 2, |_, _| r.random_range(-5.0..5.0));
        let mut raw = DMatrix::from_fn(20, 3, |_, _| r.random_range(0.01..1.0));
        for mut row in raw.row_iter_mut() {
            let s = row.sum();
            row /= s;
        }
        let resp = Responsibilities { matrix: raw.clone() };
        let out = m_step(&data, &resp, 1e-6).unwrap();
        for j in 0..3 {
            let (mut nj, mut mx, mut my) = (0.0, 0.0, 0.0);
            for i in 0..20 {
                nj += raw[(i, j)];
                mx += raw[(i, j)] * data[(i, 0)];
                my += raw[(i, j)] * data[(i, 1)];
            }
            mx /= nj;
            my /= nj;
            let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
            for i in 0..20 {
                let (u, v) = (data[(i, 0)] - mx, data[(i, 1)] - my);
                sxx += raw[(i, j)] * u * u;
                sxy += raw[(i, j)] * u * v;
                syy += raw[(i, j)] * v * v;
            }
            let (sxx, sxy, syy) = (sxx / nj, sxy / nj, syy / nj);
            let s = &out.covariances[j];
            assert!((out.weights[j] - nj / 20.0).abs() < 1e-12);
            assert!((out.centers[j][0] - mx).abs() < 1e-12 && (out.centers[j][1] - my).abs() < 1e-12);
            assert!((s[(0, 0)] - sxx).abs() < 1e-12);
            assert!((s[(1, 1)] - syy).abs() < 1e-12);
            assert!((s[(0, 1)] - sxy).abs() < 1e-12 && s[(0, 1)] == s[(1, 0)]);
        }
    }

    #[test]
    fn thin_components_are_floored() {
        // three points in 3-D span a plane, so the scatter is singular
        let data = DMatrix::from_row_slice(4, 3, &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 5.0, 5.0, 5.0]);
        let resp = Responsibilities::from_labels(&[1, 1, 1, 2], 2);
        let floor = variance_floor(&data, 1e-6);
        let out = m_step(&data, &resp, 1e-6).unwrap();
        for s in &out.covariances {
            let min = s.clone().symmetric_eigen().eigenvalues.min();
            assert!(min >= floor * (1.0 - 1e-9), "{min} < {floor}");
        }
        let lone = &out.covariances[1];
        assert!((lone - DMatrix::identity(3, 3) * floor).amax() < 1e-18);
    }

    #[test]
    fn m_step_flags_empty_component() {
        let data = DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 2.0]);
        let resp = Responsibilities::from_labels(&[1, 1, 1], 2);
        assert_eq!(m_step(&data, &resp, 1e-6), Err(Error::EmptyComponent(1)));
    }

    #[test]
    fn rescue_reseeds_at_worst_point() {
        let data = DMatrix::from_row_slice(4, 1, &[0.0, 0.1, 0.2, 9.0]);
        let model = GmmModel::from_parameters(
            vec![0.5, 0.5],
            vec![vec1(0.1), vec1(0.1)],
            vec![mat1(1.0), mat1(1.0)],
        )
        .unwrap();
        let resp = Responsibilities::from_labels(&[1, 1, 1, 1], 2);
        let (m, n) = m_step_with_rescue(&data, &resp, &model, 1e-6).unwrap();
        assert_eq!(n, 1);
        assert_eq!(m.centers[1][0], 9.0);
        assert!((m.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_points_single_component() {
        let data = DMatrix::from_fn(10, 3, |_, j| j as f64 + 0.5);
        let m = em_fit(&data, 1, &EmConfig::default(), 1).unwrap();
        assert_eq!(m.centers[0].as_slice(), &[0.5, 1.5, 2.5]);
        assert!((&m.covariances[0] - DMatrix::identity(3, 3) * 1e-6).amax() < 1e-18);
        assert!(m.converged && m.n_iter <= 2);
    }

    #[test]
    fn recovers_two_well_separated_components() {
        let mut r = rng::stream(77);
        let (a, b) = (Normal::new(-5.0, 1.0).unwrap(), Normal::new(5.0, 1.0).unwrap());
        let mut vals: Vec<f64> = (0..300).map(|_| a.sample(&mut r)).collect();
        vals.extend((0..300).map(|_| b.sample(&mut r)));
        let data = DMatrix::from_column_slice(600, 1, &vals);
        let m = em_fit(&data, 2, &EmConfig::default(), 3).unwrap();
        let mut c: Vec<(f64, f64)> = (0..2).map(|j| (m.centers[j][0], m.weights[j])).collect();
        c.sort_by(|x, y| x.0.total_cmp(&y.0));
        assert!((c[0].0 + 5.0).abs() < 0.2 && (c[1].0 - 5.0).abs() < 0.2);
        assert!((c[0].1 - 0.5).abs() < 0.05 && (c[1].1 - 0.5).abs() < 0.05);
        for w in m.log_likelihood_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-8 * w[0].abs());
        }
    }

    #[test]
    fn em_errors_and_determinism() {
        let data = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        assert_eq!(
            em_fit(&data, 3, &EmConfig::default(), 0).unwrap_err(),
            Error::TooFewPoints { n: 2, k: 3 }
        );
        let mut r = rng::stream(1);
        let data = DMatrix::from_fn(40, 2, |_, _| r.random_range(-1.0..1.0));
        let a = em_fit(&data, 3, &EmConfig::default(), 9).unwrap();
        let b = em_fit(&data, 3, &EmConfig::default(), 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn model_json_round_trip() {
        let mut r = rng::stream(3);
        let m = random_model(&mut r, 2);
        let back = GmmModel::from_json(&m.to_json(Some(EmConfig::default()))).unwrap();
        assert_eq!(back, m);
        let v: serde_json::Value = serde_json::from_str(&m.to_json(None)).unwrap();
        let s = &m.covariances[0];
        assert_eq!(v["covariances"][0][1].as_f64().unwrap(), s[(0, 1)]);
        assert_eq!(v["covariances"][0].as_array().unwrap().len(), 4);
    }
}
