use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::plurality;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Training class counts, indexed like the forest's class labels.
    Leaf { counts: Vec<u32> },
}

/// Unpruned CART tree stored in preorder; `nodes[0]` is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    /// Class index predicted for the row whose feature `f` reads `value(f)`.
    pub fn predict_by(&self, value: impl Fn(usize) -> f64) -> usize {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if value(*feature) <= *threshold { *left } else { *right },
                Node::Leaf { counts } => return plurality(counts),
            }
        }
    }

    pub fn predict_row(&self, data: &DMatrix<f64>, row: usize) -> usize {
        self.predict_by(|f| data[(row, f)])
    }

    pub fn uses_feature(&self, f: usize) -> bool {
        self.nodes
            .iter()
            .any(|n| matches!(n, Node::Split { feature, .. } if *feature == f))
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub impurity_decrease: f64,
}

fn gini(counts: &[u32], total: u32) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = f64::from(total);
    1.0 - counts.iter().map(|&c| (f64::from(c) / t).powi(2)).sum::<f64>()
}

const MIN_GAIN: f64 = 1e-12;

/// Best Gini split of `rows` over `candidates`, thresholds at midpoints of
/// consecutive distinct values. The decrease is relative to the node, i.e.
/// `gini(node) - n_l/n * gini(left) - n_r/n * gini(right)`.
pub fn gini_best_split(
    data: &DMatrix<f64>,
    classes: &[usize],
    n_classes: usize,
    rows: &[usize],
    candidates: &[usize],
) -> Option<Split> {
    let n = rows.len();
    if n < 2 {
        return None;
    }
    let mut parent = vec![0u32; n_classes];
    rows.iter().for_each(|&r| parent[classes[r]] += 1);
    let total = n as u32;
    let parent_gini = gini(&parent, total);
    if parent_gini <= 0.0 {
        return None;
    }
    let mut best: Option<Split> = None;
    let mut pairs: Vec<(f64, usize)> = Vec::with_capacity(n);
    let mut left = vec![0u32; n_classes];
    let mut right = vec![0u32; n_classes];
    for &f in candidates {
        let col = data.column(f);
        pairs.clear();
        pairs.extend(rows.iter().map(|&r| (col[r], classes[r])));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pairs[0].0 == pairs[n - 1].0 {
            continue;
        }
        left.iter_mut().for_each(|c| *c = 0);
        right.copy_from_slice(&parent);
        for i in 0..n - 1 {
            let c = pairs[i].1;
            left[c] += 1;
            right[c] -= 1;
            let (lo, hi) = (pairs[i].0, pairs[i + 1].0);
            if lo == hi {
                continue;
            }
            let nl = (i + 1) as u32;
            let nr = total - nl;
            let dec = parent_gini
                - f64::from(nl) / n as f64 * gini(&left, nl)
                - f64::from(nr) / n as f64 * gini(&right, nr);
            if dec > MIN_GAIN && best.is_none_or(|b| dec > b.impurity_decrease) {
                let mid = 0.5 * (lo + hi);
                let threshold = if mid < hi { mid } else { lo };
                best = Some(Split {
                    feature: f,
                    threshold,
                    impurity_decrease: dec,
                });
            }
        }
    }
    best
}

/// Grows an unpruned tree on `rows` (duplicates allowed), drawing a fresh
/// `m_try` feature subset at every node.
pub fn fit_tree<R: Rng + ?Sized>(
    data: &DMatrix<f64>,
    classes: &[usize],
    n_classes: usize,
    rows: &[usize],
    m_try: usize,
    rng: &mut R,
) -> DecisionTree {
    let d = data.ncols();
    let m_try = m_try.clamp(1, d);
    let mut nodes = Vec::new();
    let mut rows = rows.to_vec();
    grow(data, classes, n_classes, &mut rows, m_try, rng, &mut nodes);
    DecisionTree { nodes }
}

fn grow<R: Rng + ?Sized>(
    data: &DMatrix<f64>,
    classes: &[usize],
    n_classes: usize,
    rows: &mut [usize],
    m_try: usize,
    rng: &mut R,
    nodes: &mut Vec<Node>,
) -> usize {
    let at = nodes.len();
    let mut counts = vec![0u32; n_classes];
    rows.iter().for_each(|&r| counts[classes[r]] += 1);
    let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
    if pure || rows.len() <= 1 {
        nodes.push(Node::Leaf { counts });
        return at;
    }
    let d = data.ncols();
    // draw order decides ties between equally good features
    let candidates = index::sample(rng, d, m_try).into_vec();
    let Some(split) = gini_best_split(data, classes, n_classes, rows, &candidates) else {
        nodes.push(Node::Leaf { counts });
        return at;
    };
    nodes.push(Node::Leaf { counts: Vec::new() });
    let col = data.column(split.feature);
    let mut cut = 0;
    for i in 0..rows.len() {
        if col[rows[i]] <= split.threshold {
            rows.swap(i, cut);
            cut += 1;
        }
    }
    let (l, r) = rows.split_at_mut(cut);
    let left = grow(data, classes, n_classes, l, m_try, rng, nodes);
    let right = grow(data, classes, n_classes, r, m_try, rng, nodes);
    nodes[at] = Node::Split {
        feature: split.feature,
        threshold: split.threshold,
        left,
        right,
    };
    at
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn pure_node_has_no_split() {
        let data = DMatrix::from_column_slice(3, 1, &[0.0, 1.0, 2.0]);
        assert_eq!(gini_best_split(&data, &[0, 0, 0], 2, &[0, 1, 2], &[0]), None);
    }

    #[test]
    fn hand_gini_split() {
        let data = DMatrix::from_column_slice(4, 1, &[0.0, 1.0, 10.0, 11.0]);
        let s = gini_best_split(&data, &[0, 0, 1, 1], 2, &[0, 1, 2, 3], &[0]).unwrap();
        assert_eq!(s.feature, 0);
        assert!(s.threshold > 1.0 && s.threshold < 10.0);
        assert!((s.impurity_decrease - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_features_have_no_split() {
        let data = DMatrix::from_row_slice(3, 2, &[1.0, 5.0, 1.0, 5.0, 1.0, 5.0]);
        assert_eq!(gini_best_split(&data, &[0, 1, 0], 2, &[0, 1, 2], &[0, 1]), None);
    }

    #[test]
    fn single_row_tree_is_a_leaf() {
        let data = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let t = fit_tree(&data, &[1], 2, &[0], 1, &mut rng::stream(0));
        assert_eq!(t.nodes, vec![Node::Leaf { counts: vec![0, 1] }]);
        assert_eq!(t.predict_row(&data, 0), 1);
    }

    #[test]
    fn full_mtry_fits_training_data() {
        let mut g = rng::stream(3);
        let data = DMatrix::from_fn(60, 3, |_, _| g.random_range(-1.0..1.0));
        let classes: Vec<usize> = (0..60).map(|i| usize::from(data[(i, 0)] + data[(i, 1)] > 0.0)).collect();
        let rows: Vec<usize> = (0..60).collect();
        for seed in 1..4 {
            let t = fit_tree(&data, &classes, 2, &rows, 3, &mut rng::stream(seed));
            assert!((0..60).all(|i| t.predict_row(&data, i) == classes[i]));
        }
    }
}
