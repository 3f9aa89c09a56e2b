use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::tree::{fit_tree, DecisionTree};
use super::{check_labels, encode_labels, plurality};
use crate::error::{Error, Result};
use crate::rng;

/// `floor(sqrt(d))`, at least 1.
pub fn default_m_try(d: usize) -> usize {
    ((d as f64).sqrt().floor() as usize).max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub schema_version: u32,
    pub n_tree: usize,
    pub m_try: usize,
    pub seed: u64,
    pub class_labels: Vec<usize>,
    pub feature_names: Vec<String>,
    pub trees: Vec<DecisionTree>,
    /// Per tree, `true` for rows left out of its bootstrap sample.
    #[serde(serialize_with = "masks_out", deserialize_with = "masks_in")]
    pub oob_masks: Vec<Vec<bool>>,
    pub oob_error: f64,
    /// Rows with at least one out-of-bag tree.
    pub oob_covered: usize,
}

fn masks_out<S: Serializer>(masks: &[Vec<bool>], s: S) -> std::result::Result<S::Ok, S::Error> {
    let strings: Vec<String> = masks
        .iter()
        .map(|m| m.iter().map(|&b| if b { '1' } else { '0' }).collect())
        .collect();
    strings.serialize(s)
}

fn masks_in<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Vec<bool>>, D::Error> {
    let strings = Vec::<String>::deserialize(d)?;
    Ok(strings.iter().map(|s| s.chars().map(|c| c == '1').collect()).collect())
}

impl RandomForest {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_labels.len()
    }

    /// Per-class vote counts for one row.
    pub fn votes(&self, x: &[f64]) -> Vec<u32> {
        let mut v = vec![0u32; self.n_classes()];
        for t in &self.trees {
            v[t.predict_by(|f| x[f])] += 1;
        }
        v
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("forest serialises")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn grow_one(
    data: &DMatrix<f64>,
    classes: &[usize],
    n_classes: usize,
    m_try: usize,
    seed: u64,
    t: usize,
) -> (DecisionTree, Vec<bool>) {
    let n = data.nrows();
    let mut g = rng::stream(rng::indexed(seed, t as u64));
    let rows: Vec<usize> = (0..n).map(|_| g.random_range(0..n)).collect();
    let mut oob = vec![true; n];
    rows.iter().for_each(|&r| oob[r] = false);
    let tree = fit_tree(data, classes, n_classes, &rows, m_try, &mut g);
    (tree, oob)
}

pub fn fit_forest(
    data: &DMatrix<f64>,
    labels: &[usize],
    feature_names: &[String],
    n_tree: usize,
    m_try: usize,
    seed: u64,
) -> Result<RandomForest> {
    fit_forest_with(data, labels, feature_names, n_tree, m_try, seed, true)
}

/// Bagged random-subspace trees. Tree `t` draws its bootstrap sample and its
/// node feature subsets from stream `seed ^ t`, so `parallel` only changes
/// scheduling, never the result.
pub fn fit_forest_with(
    data: &DMatrix<f64>,
    labels: &[usize],
    feature_names: &[String],
    n_tree: usize,
    m_try: usize,
    seed: u64,
    parallel: bool,
) -> Result<RandomForest> {
    let (n, d) = data.shape();
    check_labels(n, labels)?;
    if n < 2 {
        return Err(Error::TooFewRows(n));
    }
    if feature_names.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: feature_names.len(),
        });
    }
    if n_tree == 0 {
        return Err(Error::InvalidParam("n_tree must be positive".into()));
    }
    if m_try < 1 || m_try > d {
        return Err(Error::InvalidParam(format!("m_try {m_try} outside [1, {d}]")));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("forest training data"));
    }
    let (class_labels, classes) = encode_labels(labels);
    if class_labels.len() < 2 {
        return Err(Error::SingleClass);
    }
    let c = class_labels.len();
    let grown: Vec<(DecisionTree, Vec<bool>)> = if parallel {
        (0..n_tree)
            .into_par_iter()
            .map(|t| grow_one(data, &classes, c, m_try, seed, t))
            .collect()
    } else {
        (0..n_tree)
            .map(|t| grow_one(data, &classes, c, m_try, seed, t))
            .collect()
    };
    let (trees, oob_masks): (Vec<_>, Vec<_>) = grown.into_iter().unzip();
    let mut forest = RandomForest {
        schema_version: 1,
        n_tree,
        m_try,
        seed,
        class_labels,
        feature_names: feature_names.to_vec(),
        trees,
        oob_masks,
        oob_error: f64::NAN,
        oob_covered: 0,
    };
    if let Ok(est) = oob_error(&forest, data, labels) {
        forest.oob_error = est.error;
        forest.oob_covered = est.covered;
    }
    Ok(forest)
}

/// Plurality vote; ties go to the smallest class label.
pub fn predict(forest: &RandomForest, x: &[f64]) -> Result<usize> {
    if x.len() != forest.n_features() {
        return Err(Error::DimensionMismatch {
            expected: forest.n_features(),
            got: x.len(),
        });
    }
    Ok(forest.class_labels[plurality(&forest.votes(x))])
}

pub fn predict_batch(forest: &RandomForest, data: &DMatrix<f64>) -> Result<Vec<usize>> {
    if data.ncols() != forest.n_features() {
        return Err(Error::DimensionMismatch {
            expected: forest.n_features(),
            got: data.ncols(),
        });
    }
    Ok((0..data.nrows())
        .map(|i| {
            let mut v = vec![0u32; forest.n_classes()];
            for t in &forest.trees {
                v[t.predict_row(data, i)] += 1;
            }
            forest.class_labels[plurality(&v)]
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OobEstimate {
    pub error: f64,
    pub covered: usize,
    pub uncovered: usize,
}

/// Error of out-of-bag plurality votes over rows that have any OOB tree.
pub fn oob_error(forest: &RandomForest, data: &DMatrix<f64>, labels: &[usize]) -> Result<OobEstimate> {
    let n = data.nrows();
    check_labels(n, labels)?;
    if forest.oob_masks.iter().any(|m| m.len() != n) {
        return Err(Error::LengthMismatch {
            left: forest.oob_masks.first().map_or(0, Vec::len),
            right: n,
        });
    }
    let (mut covered, mut wrong) = (0usize, 0usize);
    for i in 0..n {
        let mut votes = vec![0u32; forest.n_classes()];
        let mut any = false;
        for (t, mask) in forest.trees.iter().zip(&forest.oob_masks) {
            if mask[i] {
                votes[t.predict_row(data, i)] += 1;
                any = true;
            }
        }
        if any {
            covered += 1;
            if forest.class_labels[plurality(&votes)] != labels[i] {
                wrong += 1;
            }
        }
    }
    if covered == 0 {
        return Err(Error::NoOobCoverage);
    }
    Ok(OobEstimate {
        error: wrong as f64 / covered as f64,
        covered,
        uncovered: n - covered,
    })
}
