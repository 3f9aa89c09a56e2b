use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{em_fit, hard_assign, silhouette, wss, EmConfig, GmmModel};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionRule {
    SilhouetteMax,
    UserOverride,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRow {
    pub k: usize,
    pub wss: f64,
    pub mean_silhouette: f64,
    /// Components that won at least one point.
    pub occupied: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionFailure {
    pub k: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSelectionReport {
    pub rows: Vec<SelectionRow>,
    pub failures: Vec<SelectionFailure>,
    pub chosen_k: usize,
    pub rule_used: SelectionRule,
}

impl ClusterSelectionReport {
    /// `k,wss,mean_silhouette`
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,wss,mean_silhouette\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{}\n", r.k, r.wss, r.mean_silhouette));
        }
        s
    }
}

/// Renumbers 1-based labels so unused components disappear, keeping the
/// original component order.
pub fn compact_labels(labels: &[usize]) -> (Vec<usize>, usize) {
    let k = labels.iter().copied().max().unwrap_or(0);
    let mut used = vec![false; k + 1];
    labels.iter().for_each(|&l| used[l] = true);
    let mut map = vec![0; k + 1];
    let mut next = 0;
    for l in 1..=k {
        if used[l] {
            next += 1;
            map[l] = next;
        }
    }
    (labels.iter().map(|&l| map[l]).collect(), next)
}

struct Candidate {
    k: usize,
    model: GmmModel,
    row: SelectionRow,
}

fn evaluate(data: &DMatrix<f64>, k: usize, cfg: &EmConfig, seed: u64) -> Result<Candidate> {
    let model = em_fit(data, k, cfg, rng::indexed(seed, k as u64))?;
    let (labels, occupied) = compact_labels(&hard_assign(&model, data)?);
    let w = wss(data, &labels)?;
    let s = silhouette(data, &labels)?;
    Ok(Candidate {
        k,
        model,
        row: SelectionRow {
            k,
            wss: w,
            mean_silhouette: s.mean,
            occupied,
        },
    })
}

pub fn select_k(
    data: &DMatrix<f64>,
    k_min: usize,
    k_max: usize,
    cfg: &EmConfig,
    seed: u64,
) -> Result<(GmmModel, ClusterSelectionReport)> {
    select_k_with(data, k_min, k_max, cfg, seed, None)
}

/// Fits every `k` in `k_min..=k_max` and keeps the one with the largest mean
/// silhouette (smaller `k` on ties) unless `override_k` names another.
pub fn select_k_with(
    data: &DMatrix<f64>,
    k_min: usize,
    k_max: usize,
    cfg: &EmConfig,
    seed: u64,
    override_k: Option<usize>,
) -> Result<(GmmModel, ClusterSelectionReport)> {
    let n = data.nrows();
    if !(2 <= k_min && k_min <= k_max && k_max <= n) {
        return Err(Error::InvalidParam(format!(
            "need 2 <= k_min <= k_max <= n, got k_min={k_min}, k_max={k_max}, n={n}"
        )));
    }
    if let Some(k) = override_k {
        if k < 1 || k > n {
            return Err(Error::InvalidParam(format!("override k={k} out of range")));
        }
    }
    let results: Vec<(usize, Result<Candidate>)> = (k_min..=k_max)
        .into_par_iter()
        .map(|k| (k, evaluate(data, k, cfg, seed)))
        .collect();

    let mut candidates = Vec::new();
    let mut failures = Vec::new();
    for (k, r) in results {
        match r {
            Ok(c) => candidates.push(c),
            Err(e) => failures.push(SelectionFailure { k, reason: e.to_string() }),
        }
    }
    let rows: Vec<SelectionRow> = candidates.iter().map(|c| c.row.clone()).collect();

    let (model, chosen_k, rule_used) = match override_k {
        Some(k) => {
            let model = match candidates.into_iter().find(|c| c.k == k) {
                Some(c) => c.model,
                None => em_fit(data, k, cfg, rng::indexed(seed, k as u64))?,
            };
            (model, k, SelectionRule::UserOverride)
        }
        None => {
            let mut best: Option<Candidate> = None;
            for c in candidates {
                if best
                    .as_ref()
                    .is_none_or(|b| c.row.mean_silhouette > b.row.mean_silhouette)
                {
                    best = Some(c);
                }
            }
            let best = best.ok_or_else(|| {
                Error::InvalidParam(format!(
                    "no candidate k could be fitted: {}",
                    failures.iter().map(|f| format!("k={}: {}", f.k, f.reason)).collect::<Vec<_>>().join("; ")
                ))
            })?;
            (best.model, best.k, SelectionRule::SilhouetteMax)
        }
    };
    Ok((
        model,
        ClusterSelectionReport {
            rows,
            failures,
            chosen_k,
            rule_used,
        },
    ))
}
