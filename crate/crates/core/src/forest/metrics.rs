use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows are actual classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub class_labels: Vec<usize>,
    pub counts: Vec<Vec<u64>>,
    pub n_total: u64,
}

impl ConfusionMatrix {
    pub fn from_counts(class_labels: Vec<usize>, counts: Vec<Vec<u64>>) -> Result<Self> {
        let c = class_labels.len();
        if counts.len() != c || counts.iter().any(|r| r.len() != c) {
            return Err(Error::InvalidParam("confusion matrix must be square over the labels".into()));
        }
        let n_total = counts.iter().flatten().sum();
        Ok(ConfusionMatrix {
            class_labels,
            counts,
            n_total,
        })
    }

    pub fn from_predictions(class_labels: &[usize], actual: &[usize], predicted: &[usize]) -> Result<Self> {
        if actual.len() != predicted.len() {
            return Err(Error::LengthMismatch {
                left: actual.len(),
                right: predicted.len(),
            });
        }
        let pos = |l: &usize| {
            class_labels
                .iter()
                .position(|c| c == l)
                .ok_or_else(|| Error::InvalidParam(format!("label {l} not among the classes")))
        };
        let c = class_labels.len();
        let mut counts = vec![vec![0u64; c]; c];
        for (a, p) in actual.iter().zip(predicted) {
            counts[pos(a)?][pos(p)?] += 1;
        }
        ConfusionMatrix::from_counts(class_labels.to_vec(), counts)
    }

    pub fn accuracy(&self) -> Result<f64> {
        if self.n_total == 0 {
            return Err(Error::EmptyMatrix);
        }
        let diag: u64 = (0..self.counts.len()).map(|i| self.counts[i][i]).sum();
        Ok(diag as f64 / self.n_total as f64)
    }
}

/// Cohen's kappa, `(p_o - p_e) / (1 - p_e)`.
pub fn kappa(cm: &ConfusionMatrix) -> Result<f64> {
    if cm.n_total == 0 {
        return Err(Error::EmptyMatrix);
    }
    let n = cm.n_total as f64;
    let c = cm.counts.len();
    let p_o = cm.accuracy()?;
    let mut p_e = 0.0;
    for k in 0..c {
        let row: u64 = cm.counts[k].iter().sum();
        let col: u64 = cm.counts.iter().map(|r| r[k]).sum();
        p_e += row as f64 * col as f64;
    }
    p_e /= n * n;
    if p_e == 1.0 {
        // a single occupied cell, necessarily on the diagonal
        return Ok(1.0);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}
